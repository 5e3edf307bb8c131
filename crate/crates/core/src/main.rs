use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tqme::cli;

#[derive(Parser)]
#[command(name = "tqme", version, about = "Nonlinear thermodynamic quantum master equation simulator")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its trajectory as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.path` from the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate μ(m) on an evenly spaced grid.
    MuTable {
        #[arg(long, default_value_t = 0.0)]
        min: f64,
        #[arg(long, default_value_t = 0.999)]
        max: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the nonlinear and linearized variants side by side.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let result = match args.command {
        Command::Run { config, out } => cli::run(&config, out.as_deref()),
        Command::MuTable { min, max, steps, out } => {
            cli::mu_table(min, max, steps, &out).map(|()| tqme::integrator::Termination::Completed)
        }
        Command::Compare { config, out_dir } => cli::compare(&config, &out_dir).map(|s| {
            println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
            tqme::integrator::Termination::Completed
        }),
    };
    if let Err(e) = &result {
        log::error!("{e}");
    }
    ExitCode::from(cli::exit_code(&result) as u8)
}
