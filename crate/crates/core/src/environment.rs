//! Classical heat-bath environments.
//!
//! A heat bath is characterized only by its energy `H_e`. Its coupling to the
//! quantum subsystem uses the bracket
//!
//! ```text
//! {A, B}ʲ = (dA/dH_e) γ0 (k_B T_e / ħω) (dB/dH_e)
//! ```
//!
//! so that `{H_e, S_e}ʲ = γ0 k_B/(ħω)` and `{H_e, H_e}ʲ = γ0 k_B T_e/(ħω)`,
//! which satisfy `T_e {H_e, S_e}ʲ = {H_e, H_e}ʲ` identically.
//!
//! The bath energy evolves as
//!
//! ```text
//! dH_e/dt = −(1/k_B) Σ_j {H_e,S_e}ʲ ⟨⟨[H,Q_j]; [H,Q_j]⟩⟩ + Σ_j {H_e,H_e}ʲ ⟨[Q_j,[Q_j,H]]⟩
//! ```
//!
//! which is exactly the negative of `d tr(Hρ)/dt` from the master equation.

use crate::error::{Error, Result};
use crate::master::{friction_operator, QuantumSystem, Variant};
use crate::operator::{
    commutator, trace_of_product, DensityMatrix, HermitianObservable, PhysicalConstants,
};

/// Classical environment seen by the quantum subsystem.
pub trait Environment {
    fn temperature(&self) -> Result<f64>;

    fn entropy(&self) -> Result<f64>;

    /// Energy change from the environment's own Poisson and dissipative
    /// brackets, excluding exchange with the quantum subsystem.
    fn intrinsic_energy_rate(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BathKind {
    /// Fixed temperature; `energy` counts the heat absorbed since the start.
    Infinite { temperature: f64 },
    /// Constant heat capacity: `S_e = C_e ln(H_e/H_ref)`, `T_e = H_e/C_e`.
    Finite {
        heat_capacity: f64,
        reference_energy: f64,
    },
}

/// Immutable snapshot of a heat bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatBath {
    pub kind: BathKind,
    /// `H_e` for a finite bath; absorbed heat for an infinite bath.
    pub energy: f64,
    /// Spontaneous emission rate.
    pub gamma0: f64,
    /// Angular frequency entering the bracket.
    pub omega_ref: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn check_rates(gamma0: f64, omega_ref: f64) -> Result<()> {
    if !(gamma0 >= 0.0 && gamma0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma0 must be nonnegative, got {gamma0}"
        )));
    }
    check_positive("omega_ref", omega_ref)
}

impl HeatBath {
    pub fn infinite(temperature: f64, gamma0: f64, omega_ref: f64) -> Result<Self> {
        check_positive("T_e", temperature)?;
        check_rates(gamma0, omega_ref)?;
        Ok(Self {
            kind: BathKind::Infinite { temperature },
            energy: 0.0,
            gamma0,
            omega_ref,
        })
    }

    pub fn finite(
        heat_capacity: f64,
        energy: f64,
        reference_energy: f64,
        gamma0: f64,
        omega_ref: f64,
    ) -> Result<Self> {
        check_positive("C_e", heat_capacity)?;
        check_positive("H_e", energy)?;
        check_positive("H_ref", reference_energy)?;
        check_rates(gamma0, omega_ref)?;
        Ok(Self {
            kind: BathKind::Finite {
                heat_capacity,
                reference_energy,
            },
            energy,
            gamma0,
            omega_ref,
        })
    }

    /// Same bath at a different energy.
    pub fn with_energy(&self, energy: f64) -> Self {
        Self { energy, ..*self }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, BathKind::Finite { .. })
    }

    /// `({H_e, S_e}ʲ, {H_e, H_e}ʲ)` at the current state.
    pub fn channel_rates(&self, constants: &PhysicalConstants) -> Result<(f64, f64)> {
        let t = self.temperature()?;
        let friction = self.gamma0 * constants.kb / (constants.hbar * self.omega_ref);
        Ok((friction, friction * t))
    }

    pub fn report(&self, energy_flux_to_quantum: f64) -> Result<EnvironmentObservableReport> {
        Ok(EnvironmentObservableReport {
            energy: self.energy,
            temperature: self.temperature()?,
            entropy: self.entropy()?,
            energy_flux_to_quantum,
        })
    }
}

impl Environment for HeatBath {
    fn temperature(&self) -> Result<f64> {
        match self.kind {
            BathKind::Infinite { temperature } => Ok(temperature),
            BathKind::Finite { heat_capacity, .. } => {
                if self.energy > 0.0 {
                    Ok(self.energy / heat_capacity)
                } else {
                    Err(Error::BathState(format!(
                        "finite bath energy must stay positive, got {}",
                        self.energy
                    )))
                }
            }
        }
    }

    fn entropy(&self) -> Result<f64> {
        match self.kind {
            BathKind::Infinite { temperature } => Ok(self.energy / temperature),
            BathKind::Finite {
                heat_capacity,
                reference_energy,
            } => {
                if self.energy > 0.0 {
                    Ok(heat_capacity * (self.energy / reference_energy).ln())
                } else {
                    Err(Error::BathState(format!(
                        "finite bath energy must stay positive, got {}",
                        self.energy
                    )))
                }
            }
        }
    }

    /// Zero for a heat bath: its Poisson bracket with `H_e` vanishes and the
    /// degeneracy `{A_e, H_e} = 0` removes the classical dissipative term.
    fn intrinsic_energy_rate(&self) -> f64 {
        0.0
    }
}

/// Evaluated environmental observables at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentObservableReport {
    pub energy: f64,
    pub temperature: f64,
    pub entropy: f64,
    pub energy_flux_to_quantum: f64,
}

/// `dH_e/dt`. With [`Variant::Linearized`] the canonical correlation uses the
/// same linearized `[H,Q]_ρ` as the master equation, so energy still balances.
pub fn environment_rhs<E: Environment>(
    env: &E,
    rho: &DensityMatrix,
    sys: &QuantumSystem,
    variant: Variant,
) -> Result<f64> {
    sys.check_state(rho)?;
    let h = sys.hamiltonian.matrix();
    let r = rho.matrix();
    let spectral = if variant == Variant::Nonlinear {
        Some(rho.spectral()?)
    } else {
        None
    };
    let mut rate = env.intrinsic_energy_rate();
    for ch in &sys.channels {
        let q = ch.coupling.matrix();
        let hq = commutator(h, q)?;
        if ch.friction_rate != 0.0 {
            let corr = trace_of_product(&friction_operator(&hq, r, spectral.as_ref(), variant), &hq).re;
            rate -= ch.friction_rate / sys.constants.kb * corr;
        }
        if ch.diffusion_rate != 0.0 {
            let qqh = commutator(q, &commutator(q, h)?)?;
            rate += ch.diffusion_rate * trace_of_product(&qqh, r).re;
        }
    }
    Ok(rate)
}

/// `tr(Hρ) + H_e` for a finite bath.
pub fn total_energy(bath: &HeatBath, rho: &DensityMatrix, h: &HermitianObservable) -> Result<f64> {
    match bath.kind {
        BathKind::Finite { .. } => Ok(rho.expectation(h)? + bath.energy),
        BathKind::Infinite { .. } => Err(Error::NotApplicable(
            "total energy of an infinite bath is not defined".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master::{equilibrium_state, generator, check_bath_equilibrium, CouplingChannel};
    use crate::operator::trace_of_product;
    use crate::testutil::{c, pauli, random_density, random_hermitian, rng};

    fn two_level_system(bath: &HeatBath) -> QuantumSystem {
        let k = PhysicalConstants::default();
        let [s1, s2, s3] = pauli();
        let (f, d) = bath.channel_rates(&k).unwrap();
        let channels = [s1, s2]
            .into_iter()
            .map(|s| {
                CouplingChannel::new(HermitianObservable::new(s * c(0.5, 0.0)).unwrap(), f, d)
                    .unwrap()
            })
            .collect();
        QuantumSystem::new(HermitianObservable::new(s3 * c(0.5, 0.0)).unwrap(), channels, k)
            .unwrap()
    }

    #[test]
    fn temperature_examples() {
        assert_eq!(HeatBath::infinite(2.0, 1.0, 1.0).unwrap().temperature().unwrap(), 2.0);
        let b = HeatBath::finite(10.0, 5.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(b.temperature().unwrap(), 0.5);
        let b = HeatBath::finite(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(b.temperature().unwrap(), 1.0);
        assert!(matches!(b.with_energy(-1.0).temperature(), Err(Error::BathState(_))));
        assert!(HeatBath::finite(1.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(HeatBath::infinite(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn finite_bath_temperature_is_inverse_entropy_slope() {
        let b = HeatBath::finite(10.0, 5.0, 2.0, 1.0, 1.0).unwrap();
        let h = 1e-6;
        let ds = (b.with_energy(5.0 + h).entropy().unwrap()
            - b.with_energy(5.0 - h).entropy().unwrap())
            / (2.0 * h);
        assert!((1.0 / ds - b.temperature().unwrap()).abs() < 1e-8);
    }

    #[test]
    fn channel_rate_examples() {
        let k = PhysicalConstants::default();
        let b = HeatBath::infinite(1.0, 1.0, 1.0).unwrap();
        assert_eq!(b.channel_rates(&k).unwrap(), (1.0, 1.0));
        let b = HeatBath::infinite(1.0, 0.0, 1.0).unwrap();
        assert_eq!(b.channel_rates(&k).unwrap(), (0.0, 0.0));
        let b = HeatBath::infinite(2.0, 1.0, 1.0).unwrap();
        let (f, d) = b.channel_rates(&k).unwrap();
        assert_eq!((f, d), (1.0, 2.0));
        let ch = CouplingChannel::new(HermitianObservable::identity(2).unwrap(), f, d).unwrap();
        assert!(check_bath_equilibrium(&ch, 2.0, 1e-14));
    }

    #[test]
    fn rates_satisfy_bath_equilibrium_for_any_parameters() {
        let q = HermitianObservable::identity(2).unwrap();
        for &(t, g, w, hbar, kb) in &[
            (0.3, 2.0, 5.0, 1.0, 1.0),
            (300.0, 1e-3, 2e3, 1.054_571_817e-34, 1.380_649e-23),
            (7.0, 0.5, 0.1, 2.0, 0.5),
        ] {
            let k = PhysicalConstants::new(hbar, kb).unwrap();
            let b = HeatBath::infinite(t, g, w).unwrap();
            let (f, d) = b.channel_rates(&k).unwrap();
            assert!(f >= 0.0 && d >= 0.0);
            let ch = CouplingChannel::new(q.clone(), f, d).unwrap();
            assert!(check_bath_equilibrium(&ch, t, 1e-12));
        }
    }

    #[test]
    fn no_flux_at_equilibrium() {
        let b = HeatBath::infinite(0.7, 1.3, 1.0).unwrap();
        let sys = two_level_system(&b);
        let rho = equilibrium_state(&sys.hamiltonian, 0.7, &sys.constants).unwrap();
        assert!(environment_rhs(&b, &rho, &sys, Variant::Nonlinear).unwrap().abs() < 1e-12);
    }

    #[test]
    fn decoupled_bath_has_no_flux() {
        let b = HeatBath::infinite(0.7, 0.0, 1.0).unwrap();
        let sys = two_level_system(&b);
        let mut r = rng(9);
        let rho = random_density(&mut r, 2);
        assert_eq!(environment_rhs(&b, &rho, &sys, Variant::Nonlinear).unwrap(), 0.0);
    }

    #[test]
    fn bath_absorbs_energy_from_unpolarized_state() {
        let b = HeatBath::infinite(1.0, 1.0, 1.0).unwrap();
        let sys = two_level_system(&b);
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let h = sys.hamiltonian.matrix();
        for ch in &sys.channels {
            let q = ch.coupling.matrix();
            let qqh = commutator(q, &commutator(q, h).unwrap()).unwrap();
            assert!(trace_of_product(&qqh, rho.matrix()).norm() < 1e-16);
        }
        // The subsystem relaxes toward its ground state, so the bath gains energy.
        let rate = environment_rhs(&b, &rho, &sys, Variant::Nonlinear).unwrap();
        assert!(rate > 0.0);
        let drho = generator(&rho, &sys, Variant::Nonlinear).unwrap();
        assert!((trace_of_product(h, &drho).re + rate).abs() < 1e-15);
    }

    #[test]
    fn exchange_balances_quantum_energy_change() {
        let mut r = rng(21);
        for dim in 2..=5 {
            let h = random_hermitian(&mut r, dim);
            let channels = (0..3)
                .map(|_| CouplingChannel::new(random_hermitian(&mut r, dim), 0.6, 0.9).unwrap())
                .collect();
            let sys = QuantumSystem::new(h, channels, PhysicalConstants::new(1.3, 0.7).unwrap())
                .unwrap();
            let rho = random_density(&mut r, dim);
            let b = HeatBath::infinite(1.0, 1.0, 1.0).unwrap();
            for variant in [Variant::Nonlinear, Variant::Linearized] {
                let de = environment_rhs(&b, &rho, &sys, variant).unwrap();
                let dq = trace_of_product(sys.hamiltonian.matrix(), &generator(&rho, &sys, variant).unwrap()).re;
                assert!((de + dq).abs() < 1e-11, "dim {dim}: {de} + {dq}");
            }
        }
    }

    #[test]
    fn total_energy_examples() {
        let [_, _, s3] = pauli();
        let h = HermitianObservable::new(s3 * c(0.5, 0.0)).unwrap();
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let b = HeatBath::finite(10.0, 5.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(total_energy(&b, &rho, &h).unwrap(), 5.0);
        let inf = HeatBath::infinite(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(total_energy(&inf, &rho, &h), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn finite_bath_rates_follow_temperature() {
        let k = PhysicalConstants::default();
        let b = HeatBath::finite(4.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        let energies = [1.0, 2.0, 4.0, 8.0];
        let rates: Vec<(f64, f64)> = energies
            .iter()
            .map(|&e| b.with_energy(e).channel_rates(&k).unwrap())
            .collect();
        assert!(rates.windows(2).all(|w| w[0].0 == w[1].0 && w[1].1 > w[0].1));
    }
}
