//! Fixed-step integration of the coupled system `(ρ, H_e)`.
//!
//! Each stage of a step re-evaluates the channel rates from that stage's bath
//! state, so a finite bath changes the coefficients of the master equation as
//! it exchanges energy. The stepped density matrix is re-Hermitized; it is
//! never renormalized or projected back onto positive matrices. Violations of
//! the trace, Hermiticity, positivity or energy tolerances end the run and are
//! reported in [`Termination::MonitorViolation`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::environment::{environment_rhs, EnvironmentObservableReport, HeatBath};
use crate::error::{Error, Result};
use crate::master::{generator, CouplingChannel, QuantumSystem, Variant};
use crate::operator::{
    entropy_of_spectrum, hermitize, CMatrix, DensityMatrix, HermitianObservable,
    PhysicalConstants,
};
use crate::two_level::TwoLevelParams;

use crate::environment::Environment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub trace: f64,
    pub hermiticity: f64,
    pub positivity: f64,
    pub energy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            trace: 1e-10,
            hermiticity: 1e-10,
            positivity: 1e-9,
            energy: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    pub monitor_every: usize,
    pub tolerances: Tolerances,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            method: Method::Rk4,
            monitor_every: 1,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.dt < self.t_end) {
            return Err(Error::InvalidParameter(format!(
                "t_end ({}) must exceed dt ({})",
                self.t_end, self.dt
            )));
        }
        if self.monitor_every == 0 {
            return Err(Error::InvalidParameter("monitor_every must be at least 1".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("trace", t.trace),
            ("hermiticity", t.hermiticity),
            ("positivity", t.positivity),
            ("energy", t.energy),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tolerance {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Number of steps of size `dt` (the last one possibly shorter) covering `[0, t_end]`.
pub fn step_count(dt: f64, t_end: f64) -> usize {
    ((t_end / dt - 1e-9).ceil() as usize).max(1)
}

/// Where a channel's bracket values come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSource {
    Fixed { friction_rate: f64, diffusion_rate: f64 },
    /// The heat-bath bracket at the current bath state, times `scale`.
    Bath { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub coupling: HermitianObservable,
    pub rates: RateSource,
}

/// A quantum subsystem whose channel rates are resolved against a bath state.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSystem {
    pub hamiltonian: HermitianObservable,
    pub channels: Vec<ChannelSpec>,
    pub constants: PhysicalConstants,
    pub variant: Variant,
}

impl CoupledSystem {
    pub fn new(
        hamiltonian: HermitianObservable,
        channels: Vec<ChannelSpec>,
        constants: PhysicalConstants,
        variant: Variant,
    ) -> Result<Self> {
        for ch in &channels {
            if ch.coupling.dim() != hamiltonian.dim() {
                return Err(Error::DimensionMismatch {
                    left: hamiltonian.dim(),
                    right: ch.coupling.dim(),
                });
            }
            let ok = match ch.rates {
                RateSource::Fixed {
                    friction_rate,
                    diffusion_rate,
                } => friction_rate >= 0.0 && diffusion_rate >= 0.0,
                RateSource::Bath { scale } => scale >= 0.0,
            };
            if !ok {
                return Err(Error::InvalidParameter("channel rates must be nonnegative".into()));
            }
        }
        Ok(Self {
            hamiltonian,
            channels,
            constants,
            variant,
        })
    }

    /// `H = O(0, ħω q₃)` with `Q₁, Q₂` (and `Q₃` when isotropic) on the bath bracket.
    pub fn two_level(p: &TwoLevelParams, variant: Variant) -> Self {
        let channels = p
            .couplings()
            .into_iter()
            .map(|(coupling, scale)| ChannelSpec {
                coupling,
                rates: RateSource::Bath { scale },
            })
            .collect();
        Self {
            hamiltonian: p.hamiltonian(),
            channels,
            constants: p.constants,
            variant,
        }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn with_variant(&self, variant: Variant) -> Self {
        Self {
            variant,
            ..self.clone()
        }
    }

    /// Channel rates evaluated at `bath`.
    pub fn quantum_system(&self, bath: &HeatBath) -> Result<QuantumSystem> {
        let mut bath_rates = None;
        let mut channels = Vec::with_capacity(self.channels.len());
        for ch in &self.channels {
            let (f, d) = match ch.rates {
                RateSource::Fixed {
                    friction_rate,
                    diffusion_rate,
                } => (friction_rate, diffusion_rate),
                RateSource::Bath { scale } => {
                    let (f, d) = match bath_rates {
                        Some(r) => r,
                        None => *bath_rates.insert(bath.channel_rates(&self.constants)?),
                    };
                    (scale * f, scale * d)
                }
            };
            channels.push(CouplingChannel::new(ch.coupling.clone(), f, d)?);
        }
        QuantumSystem::new(self.hamiltonian.clone(), channels, self.constants)
    }

    /// `(dρ/dt, dH_e/dt)` at the given state.
    pub fn rhs(&self, rho: &DensityMatrix, bath: &HeatBath) -> Result<(CMatrix, f64)> {
        let sys = self.quantum_system(bath)?;
        let drho = generator(rho, &sys, self.variant)?;
        let de = environment_rhs(bath, rho, &sys, self.variant)?;
        Ok((drho, de))
    }
}

fn advance(rho: &CMatrix, drho: &CMatrix, h: f64) -> DensityMatrix {
    DensityMatrix::new_unchecked(rho + drho * Complex64::new(h, 0.0))
}

/// One explicit step of the joint `(ρ, H_e)` system.
pub fn step(
    rho: &DensityMatrix,
    bath: &HeatBath,
    sys: &CoupledSystem,
    dt: f64,
    method: Method,
) -> Result<(DensityMatrix, HeatBath)> {
    let r = rho.matrix();
    let e = bath.energy;
    let (new_rho, new_e) = match method {
        Method::Euler => {
            let (k, ke) = sys.rhs(rho, bath)?;
            (r + k * Complex64::new(dt, 0.0), e + dt * ke)
        }
        Method::Rk4 => {
            let half = 0.5 * dt;
            let (k1, e1) = sys.rhs(rho, bath)?;
            let (k2, e2) = sys.rhs(&advance(r, &k1, half), &bath.with_energy(e + half * e1))?;
            let (k3, e3) = sys.rhs(&advance(r, &k2, half), &bath.with_energy(e + half * e2))?;
            let (k4, e4) = sys.rhs(&advance(r, &k3, dt), &bath.with_energy(e + dt * e3))?;
            let incr = (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4)
                * Complex64::new(dt / 6.0, 0.0);
            (r + incr, e + dt / 6.0 * (e1 + 2.0 * (e2 + e3) + e4))
        }
    };
    Ok((
        DensityMatrix::new_unchecked(hermitize(&new_rho)),
        bath.with_energy(new_e),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitors {
    pub trace_err: f64,
    pub herm_err: f64,
    pub min_eig: f64,
    /// `tr(Hρ) + H_e`; for an infinite bath `H_e` is the heat absorbed so far.
    pub total_energy: f64,
    /// `S_e − k_B tr(ρ ln ρ)`.
    pub total_entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub rho: DensityMatrix,
    pub env: Option<EnvironmentObservableReport>,
    pub monitors: Monitors,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    MonitorViolation { t: f64, detail: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub config: IntegratorConfig,
    pub termination: Termination,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory has at least the initial point")
    }
}

fn observe(t: f64, rho: &DensityMatrix, bath: &HeatBath, sys: &CoupledSystem) -> Result<TrajectoryPoint> {
    let spectral = rho.spectral()?;
    let min_eig = spectral.eigenvalues[spectral.dim() - 1];
    let (_, de) = sys.rhs(rho, bath)?;
    let env = bath.report(-de)?;
    let monitors = Monitors {
        trace_err: rho.trace_error(),
        herm_err: rho.hermiticity_error(),
        min_eig,
        total_energy: rho.expectation(&sys.hamiltonian)? + bath.energy,
        total_entropy: entropy_of_spectrum(spectral.eigenvalues.as_slice(), &sys.constants)
            + bath.entropy()?,
    };
    Ok(TrajectoryPoint {
        t,
        rho: rho.clone(),
        env: Some(env),
        monitors,
    })
}

fn violation(m: &Monitors, e0: f64, tol: &Tolerances) -> Option<String> {
    if !(m.trace_err <= tol.trace) {
        return Some(format!("trace drift {:e} exceeds {:e}", m.trace_err, tol.trace));
    }
    if !(m.herm_err <= tol.hermiticity) {
        return Some(format!(
            "hermiticity error {:e} exceeds {:e}",
            m.herm_err, tol.hermiticity
        ));
    }
    if !(m.min_eig >= -tol.positivity) {
        return Some(format!(
            "positivity violated: smallest eigenvalue {:e} below -{:e}",
            m.min_eig, tol.positivity
        ));
    }
    let drift = (m.total_energy - e0).abs();
    if !(drift <= tol.energy * e0.abs().max(1.0)) {
        return Some(format!("energy drift {drift:e} exceeds tolerance"));
    }
    None
}

/// Integrates from `(rho0, bath0)` to `cfg.t_end`, recording monitors every
/// `cfg.monitor_every` steps and at the final time.
pub fn simulate(
    rho0: &DensityMatrix,
    bath0: &HeatBath,
    sys: &CoupledSystem,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if rho0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            left: rho0.dim(),
            right: sys.dim(),
        });
    }
    let n = step_count(cfg.dt, cfg.t_end);
    let first = observe(0.0, rho0, bath0, sys)?;
    let e0 = first.monitors.total_energy;
    let mut termination = violation(&first.monitors, e0, &cfg.tolerances)
        .map(|detail| Termination::MonitorViolation { t: 0.0, detail });
    let mut points = vec![first];

    let mut rho = rho0.clone();
    let mut bath = *bath0;
    for k in 0..n {
        if termination.is_some() {
            break;
        }
        let t = k as f64 * cfg.dt;
        let h = (cfg.t_end - t).min(cfg.dt);
        (rho, bath) = step(&rho, &bath, sys, h, cfg.method)?;
        let done = k + 1;
        if done % cfg.monitor_every == 0 || done == n {
            let t_now = if done == n { cfg.t_end } else { done as f64 * cfg.dt };
            let p = observe(t_now, &rho, &bath, sys)?;
            if let Some(detail) = violation(&p.monitors, e0, &cfg.tolerances) {
                log::warn!("monitor violation at t = {t_now}: {detail}");
                termination = Some(Termination::MonitorViolation { t: t_now, detail });
            }
            points.push(p);
        }
    }
    Ok(Trajectory {
        points,
        config: *cfg,
        termination: termination.unwrap_or(Termination::Completed),
    })
}
