//! Command-line entry points: `run`, `mu-table` and `compare`.

pub mod config;
pub mod output;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{load_config, parse_config, ConfigError, Scenario, SimulationConfig};
use output::{write_csv, write_trajectory, Layout};

use crate::error::Error;
use crate::integrator::{simulate, Termination, Trajectory};
use crate::master::Variant;
use crate::two_level::{bloch_equilibrium, linearized_steady_state, mu, BlochState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MONITOR_VIOLATION: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Simulation(#[from] Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

pub fn exit_code(result: &Result<Termination, CliError>) -> i32 {
    match result {
        Ok(Termination::Completed) => EXIT_OK,
        Ok(Termination::MonitorViolation { .. }) => EXIT_MONITOR_VIOLATION,
        Err(_) => EXIT_FAILURE,
    }
}

fn layout(s: &Scenario) -> Layout {
    Layout {
        dim: s.system.dim(),
        bloch: s.two_level.is_some(),
        finite_bath: s.bath.is_finite(),
    }
}

fn simulate_scenario(s: &Scenario) -> Result<Trajectory, Error> {
    simulate(&s.rho0, &s.bath, &s.system, &s.integrator)
}

/// Runs one simulation and writes its trajectory. Nothing is written when the
/// configuration is invalid.
pub fn run(config_path: &Path, out: Option<&Path>) -> Result<Termination, CliError> {
    let cfg = load_config(config_path)?;
    run_config(&cfg, out)
}

pub fn run_config(cfg: &SimulationConfig, out: Option<&Path>) -> Result<Termination, CliError> {
    let scenario = cfg.scenario()?;
    let path = out.unwrap_or(&cfg.output.path);
    let traj = simulate_scenario(&scenario)?;
    write_trajectory(path, &layout(&scenario), &traj, cfg.output.stride)
        .map_err(io_err(format!("writing {}", path.display())))?;
    match &traj.termination {
        Termination::Completed => log::info!(
            "wrote {} rows to {}",
            output::strided(&traj.points, cfg.output.stride).count(),
            path.display()
        ),
        Termination::MonitorViolation { t, detail } => {
            log::warn!("stopped at t = {t}: {detail}")
        }
    }
    Ok(traj.termination)
}

/// `(m, μ(m))` on an evenly spaced grid including both endpoints.
pub fn mu_table_rows(min: f64, max: f64, steps: usize) -> Result<Vec<[f64; 2]>, Error> {
    if !(0.0 <= min && min < max && max < 1.0) {
        return Err(Error::Domain(format!(
            "need 0 <= min < max < 1, got min = {min}, max = {max}"
        )));
    }
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("steps must be at least 2, got {steps}")));
    }
    (0..steps)
        .map(|k| {
            let m = if k == steps - 1 {
                max
            } else {
                min + (max - min) * k as f64 / (steps - 1) as f64
            };
            Ok([m, mu(m)?])
        })
        .collect()
}

pub fn mu_table(min: f64, max: f64, steps: usize, out: &Path) -> Result<(), CliError> {
    let rows = mu_table_rows(min, max, steps)?;
    let file = BufWriter::new(File::create(out).map_err(io_err(format!("creating {}", out.display())))?);
    write_csv(
        file,
        &["m".to_string(), "mu".to_string()],
        rows.into_iter().map(|r| r.to_vec()),
    )
    .map_err(io_err(format!("writing {}", out.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantOutcome {
    pub completed: bool,
    pub violation: Option<String>,
    pub t_final: f64,
    /// Final Bloch vector for the two-level form.
    pub final_bloch: Option<[f64; 3]>,
}

impl VariantOutcome {
    fn of(traj: &Trajectory, bloch: bool) -> Self {
        let last = traj.last();
        Self {
            completed: traj.completed(),
            violation: match &traj.termination {
                Termination::Completed => None,
                Termination::MonitorViolation { detail, .. } => Some(detail.clone()),
            },
            t_final: last.t,
            final_bloch: bloch
                .then(|| BlochState::vector_of(&last.rho).ok())
                .flatten()
                .map(|m| [m.x, m.y, m.z]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub nonlinear: VariantOutcome,
    pub linearized: VariantOutcome,
    /// Largest entrywise `|ρ_nonlinear − ρ_linearized|` over the common times.
    pub max_abs_delta_rho: f64,
    /// `ħω/(2k_B T_e)` for the two-level form.
    pub reduced_inverse_temperature: Option<f64>,
    /// `−q₃ tanh x`, the nonlinear steady state.
    pub nonlinear_steady_state: Option<[f64; 3]>,
    /// `−q₃ x`, the linearized steady state.
    pub linearized_steady_state: Option<[f64; 3]>,
    /// Distance between the two steady states.
    pub steady_state_gap: Option<f64>,
    /// True when the linearized steady state lies outside the Bloch sphere.
    pub linearized_leaves_sphere: Option<bool>,
}

fn max_abs_delta(a: &Trajectory, b: &Trajectory) -> Vec<[f64; 2]> {
    a.points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| {
            let d = (p.rho.matrix() - q.rho.matrix()).camax();
            [p.t, d]
        })
        .collect()
}

/// Runs both variants from the same initial data and writes
/// `nonlinear.csv`, `linearized.csv`, `delta.csv` and `summary.json`.
pub fn compare(config_path: &Path, out_dir: &Path) -> Result<CompareSummary, CliError> {
    let cfg = load_config(config_path)?;
    compare_config(&cfg, out_dir)
}

pub fn compare_config(cfg: &SimulationConfig, out_dir: &Path) -> Result<CompareSummary, CliError> {
    let base = cfg.scenario()?;
    let nl = Scenario {
        system: base.system.with_variant(Variant::Nonlinear),
        ..base.clone()
    };
    let li = Scenario {
        system: base.system.with_variant(Variant::Linearized),
        ..base.clone()
    };
    let (tn, tl) = std::thread::scope(|s| {
        let h = s.spawn(|| simulate_scenario(&li));
        let tn = simulate_scenario(&nl);
        (tn, h.join().expect("linearized run panicked"))
    });
    let (tn, tl) = (tn?, tl?);

    fs::create_dir_all(out_dir).map_err(io_err(format!("creating {}", out_dir.display())))?;
    let lay = layout(&base);
    let stride = cfg.output.stride;
    let out = |name: &str| -> PathBuf { out_dir.join(name) };
    for (name, traj) in [("nonlinear.csv", &tn), ("linearized.csv", &tl)] {
        let p = out(name);
        write_trajectory(&p, &lay, traj, stride).map_err(io_err(format!("writing {}", p.display())))?;
    }
    let delta = max_abs_delta(&tn, &tl);
    let p = out("delta.csv");
    let file = BufWriter::new(File::create(&p).map_err(io_err(format!("creating {}", p.display())))?);
    write_csv(
        file,
        &["t".to_string(), "max_abs_delta_rho".to_string()],
        delta.iter().map(|r| r.to_vec()),
    )
    .map_err(io_err(format!("writing {}", p.display())))?;

    let bloch = base.two_level.is_some();
    let mut summary = CompareSummary {
        nonlinear: VariantOutcome::of(&tn, bloch),
        linearized: VariantOutcome::of(&tl, bloch),
        max_abs_delta_rho: delta.iter().map(|r| r[1]).fold(0.0, f64::max),
        reduced_inverse_temperature: None,
        nonlinear_steady_state: None,
        linearized_steady_state: None,
        steady_state_gap: None,
        linearized_leaves_sphere: None,
    };
    if let Some(p) = &base.two_level {
        let eq = bloch_equilibrium(p).m;
        let lin = linearized_steady_state(p);
        summary.reduced_inverse_temperature = Some(p.reduced_inverse_temperature());
        summary.nonlinear_steady_state = Some([eq.x, eq.y, eq.z]);
        summary.linearized_steady_state = Some([lin.x, lin.y, lin.z]);
        summary.steady_state_gap = Some((eq - lin).norm());
        summary.linearized_leaves_sphere = Some(lin.norm() > 1.0);
    }
    let p = out("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&p, text + "\n").map_err(io_err(format!("writing {}", p.display())))?;
    Ok(summary)
}
