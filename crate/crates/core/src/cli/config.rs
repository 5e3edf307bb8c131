//! JSON run configuration.
//!
//! ```json
//! {
//!   "system": { "two_level": { "omega": 1.0, "gamma0": 1.0 } },
//!   "environment": { "infinite": { "T_e": 0.5 } },
//!   "constants": { "hbar": 1.0, "kB": 1.0 },
//!   "integrator": { "dt": 0.01, "t_end": 30.0 },
//!   "variant": "nonlinear",
//!   "initial_state": { "bloch": [0.5, 0.0, 0.5] },
//!   "output": { "path": "trajectory.csv", "stride": 10 }
//! }
//! ```
//!
//! Complex matrices are nested arrays of `[re, im]` pairs, row-major.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::environment::HeatBath;
use crate::error::Error;
use crate::integrator::{ChannelSpec, CoupledSystem, IntegratorConfig, Method, RateSource, Tolerances};
use crate::master::Variant;
use crate::operator::{CMatrix, DensityMatrix, HermitianObservable, PhysicalConstants};
use crate::two_level::{BlochState, TwoLevelParams};

/// A configuration error with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn at(path: &str) -> impl Fn(Error) -> ConfigError + '_ {
    move |e| ConfigError::new(path, e)
}

pub type ComplexMatrixConfig = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub system: SystemConfig,
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub constants: ConstantsConfig,
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    TwoLevel(TwoLevelConfig),
    Generic(GenericConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelConfig {
    pub omega: f64,
    pub gamma0: f64,
    #[serde(default)]
    pub isotropic: bool,
    #[serde(default = "one")]
    pub q3_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericConfig {
    pub hamiltonian: ComplexMatrixConfig,
    pub channels: Vec<ChannelConfig>,
    /// Bracket parameters, required when any channel uses the bath bracket.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_ref: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(rename = "Q")]
    pub q: ComplexMatrixConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friction_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion_rate: Option<f64>,
    #[serde(default)]
    pub use_bath_bracket: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    Infinite {
        #[serde(rename = "T_e")]
        t_e: f64,
    },
    Finite {
        #[serde(rename = "C_e")]
        c_e: f64,
        #[serde(rename = "H_e0")]
        h_e0: f64,
        #[serde(rename = "H_ref")]
        h_ref: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub hbar: f64,
    #[serde(rename = "kB")]
    pub kb: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self { hbar: 1.0, kb: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "one_usize")]
    pub monitor_every: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    MaximallyMixed,
    Bloch([f64; 3]),
    Matrix(ComplexMatrixConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
    #[serde(default = "one_usize")]
    pub stride: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// Everything needed to start a simulation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: CoupledSystem,
    pub bath: HeatBath,
    pub rho0: DensityMatrix,
    pub integrator: IntegratorConfig,
    /// Present for the two-level form; selects Bloch-vector output columns.
    pub two_level: Option<TwoLevelParams>,
}

pub fn parse_config(text: &str) -> Result<SimulationConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(path, e.into_inner())
    })
}

pub fn load_config(path: &Path) -> Result<SimulationConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn complex_matrix(rows: &ComplexMatrixConfig, path: &str) -> Result<CMatrix, ConfigError> {
    let n = rows.len();
    if n == 0 {
        return Err(ConfigError::new(path, "matrix is empty"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(ConfigError::new(
                format!("{path}[{i}]"),
                format!("expected {n} entries, found {}", row.len()),
            ));
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn matrix_to_config(m: &CMatrix) -> ComplexMatrixConfig {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn observable(rows: &ComplexMatrixConfig, path: &str) -> Result<HermitianObservable, ConfigError> {
    HermitianObservable::new(complex_matrix(rows, path)?).map_err(at(path))
}

fn nonnegative(v: f64, path: &str) -> Result<f64, ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(path, format!("must be finite and nonnegative, got {v}")))
    }
}

impl SimulationConfig {
    /// Validates the configuration and builds the simulation inputs.
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let constants = PhysicalConstants::new(self.constants.hbar, self.constants.kb)
            .map_err(at("constants"))?;
        let mut integrator = IntegratorConfig::new(self.integrator.dt, self.integrator.t_end);
        integrator.method = self.integrator.method;
        integrator.monitor_every = self.integrator.monitor_every;
        integrator.tolerances = self.integrator.tolerances;
        integrator.validate().map_err(at("integrator"))?;
        if self.output.stride == 0 {
            return Err(ConfigError::new("output.stride", "must be at least 1"));
        }

        let (system, gamma0, omega_ref, two_level) = match &self.system {
            SystemConfig::TwoLevel(tl) => {
                let p = TwoLevelParams {
                    omega: tl.omega,
                    gamma0: tl.gamma0,
                    // Replaced below once the bath temperature is known.
                    temperature: 1.0,
                    isotropic: tl.isotropic,
                    q3_multiplier: tl.q3_multiplier,
                    constants,
                }
                .validated()
                .map_err(at("system.two_level"))?;
                (
                    CoupledSystem::two_level(&p, self.variant),
                    tl.gamma0,
                    tl.omega,
                    Some(p),
                )
            }
            SystemConfig::Generic(g) => {
                let h = observable(&g.hamiltonian, "system.generic.hamiltonian")?;
                let mut channels = Vec::with_capacity(g.channels.len());
                for (j, ch) in g.channels.iter().enumerate() {
                    let base = format!("system.generic.channels[{j}]");
                    let coupling = observable(&ch.q, &format!("{base}.Q"))?;
                    if coupling.dim() != h.dim() {
                        return Err(ConfigError::new(
                            format!("{base}.Q"),
                            format!("dimension {} differs from hamiltonian {}", coupling.dim(), h.dim()),
                        ));
                    }
                    let rates = if ch.use_bath_bracket {
                        if ch.friction_rate.is_some() || ch.diffusion_rate.is_some() {
                            return Err(ConfigError::new(
                                base,
                                "explicit rates conflict with use_bath_bracket",
                            ));
                        }
                        RateSource::Bath { scale: 1.0 }
                    } else {
                        let f = ch.friction_rate.ok_or_else(|| {
                            ConfigError::new(format!("{base}.friction_rate"), "required unless use_bath_bracket is set")
                        })?;
                        let d = ch.diffusion_rate.ok_or_else(|| {
                            ConfigError::new(format!("{base}.diffusion_rate"), "required unless use_bath_bracket is set")
                        })?;
                        RateSource::Fixed {
                            friction_rate: nonnegative(f, &format!("{base}.friction_rate"))?,
                            diffusion_rate: nonnegative(d, &format!("{base}.diffusion_rate"))?,
                        }
                    };
                    channels.push(ChannelSpec { coupling, rates });
                }
                let uses_bath = g.channels.iter().any(|c| c.use_bath_bracket);
                let gamma0 = match g.gamma0 {
                    Some(v) => nonnegative(v, "system.generic.gamma0")?,
                    None if uses_bath => {
                        return Err(ConfigError::new(
                            "system.generic.gamma0",
                            "required when a channel uses the bath bracket",
                        ))
                    }
                    None => 0.0,
                };
                let omega_ref = match g.omega_ref {
                    Some(v) => v,
                    None if uses_bath => {
                        return Err(ConfigError::new(
                            "system.generic.omega_ref",
                            "required when a channel uses the bath bracket",
                        ))
                    }
                    None => 1.0,
                };
                let sys = CoupledSystem::new(h, channels, constants, self.variant)
                    .map_err(at("system.generic"))?;
                (sys, gamma0, omega_ref, None)
            }
        };

        let bath = match self.environment {
            EnvironmentConfig::Infinite { t_e } => HeatBath::infinite(t_e, gamma0, omega_ref),
            EnvironmentConfig::Finite { c_e, h_e0, h_ref } => {
                HeatBath::finite(c_e, h_e0, h_ref, gamma0, omega_ref)
            }
        }
        .map_err(at("environment"))?;
        let two_level = match two_level {
            Some(mut p) => {
                use crate::environment::Environment;
                p.temperature = bath.temperature().map_err(at("environment"))?;
                Some(p)
            }
            None => None,
        };

        let dim = system.dim();
        let rho0 = match &self.initial_state {
            None | Some(InitialState::MaximallyMixed) => DensityMatrix::maximally_mixed(dim),
            Some(InitialState::Bloch(m)) => {
                if dim != 2 {
                    return Err(ConfigError::new(
                        "initial_state.bloch",
                        "a Bloch vector needs a two-level system",
                    ));
                }
                BlochState::new(Vector3::from(*m)).and_then(|b| b.to_density())
            }
            Some(InitialState::Matrix(rows)) => {
                let m = complex_matrix(rows, "initial_state.matrix")?;
                if m.nrows() != dim {
                    return Err(ConfigError::new(
                        "initial_state.matrix",
                        format!("dimension {} differs from system {dim}", m.nrows()),
                    ));
                }
                DensityMatrix::new(m)
            }
        }
        .map_err(at("initial_state"))?;

        Ok(Scenario {
            system,
            bath,
            rho0,
            integrator,
            two_level,
        })
    }

    /// A configuration for the two-level system with a heat bath at `T_e`.
    pub fn two_level_example(omega: f64, gamma0: f64, t_e: f64) -> Self {
        Self {
            system: SystemConfig::TwoLevel(TwoLevelConfig {
                omega,
                gamma0,
                isotropic: false,
                q3_multiplier: 1.0,
            }),
            environment: EnvironmentConfig::Infinite { t_e },
            constants: ConstantsConfig::default(),
            integrator: IntegratorSection {
                dt: 0.01,
                t_end: 30.0,
                method: Method::Rk4,
                monitor_every: 1,
                tolerances: Tolerances::default(),
            },
            variant: Variant::Nonlinear,
            initial_state: Some(InitialState::Bloch([0.5, 0.0, 0.5])),
            output: OutputConfig {
                path: PathBuf::from("trajectory.csv"),
                stride: 10,
            },
        }
    }

    pub fn generic_from_matrices(
        hamiltonian: &CMatrix,
        channels: &[(CMatrix, f64, f64)],
        t_e: f64,
    ) -> Self {
        Self {
            system: SystemConfig::Generic(GenericConfig {
                hamiltonian: matrix_to_config(hamiltonian),
                channels: channels
                    .iter()
                    .map(|(q, f, d)| ChannelConfig {
                        q: matrix_to_config(q),
                        friction_rate: Some(*f),
                        diffusion_rate: Some(*d),
                        use_bath_bracket: false,
                    })
                    .collect(),
                gamma0: None,
                omega_ref: None,
            }),
            ..Self::two_level_example(1.0, 1.0, t_e)
        }
        .with_initial_state(None)
    }

    pub fn with_initial_state(mut self, s: Option<InitialState>) -> Self {
        self.initial_state = s;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}
