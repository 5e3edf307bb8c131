//! Right-hand side of the thermodynamic quantum master equation
//!
//! ```text
//! dρ/dt = (i/ħ)[ρ, H] − (1/k_B) Σ_j f_j [Q_j, [Q_j, H]_ρ] − Σ_j D_j [Q_j, [Q_j, ρ]]
//! ```
//!
//! where `f_j = {H_e, S_e}ʲ` (friction) and `D_j = {H_e, H_e}ʲ` (diffusion) are
//! the dissipative brackets of the environment evaluated at its current state.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    commutator, hermitize, modified_operator, CMatrix, DensityMatrix, HermitianObservable,
    PhysicalConstants, SpectralDecomposition,
};

/// Whether the friction term uses the full `[Q, H]_ρ` or drops its
/// nonlinear part (`½([Q,H]ρ + ρ[Q,H])`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Nonlinear,
    Linearized,
}

/// One coupling operator with the bracket values that weight it.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingChannel {
    pub coupling: HermitianObservable,
    pub friction_rate: f64,
    pub diffusion_rate: f64,
}

impl CouplingChannel {
    pub fn new(coupling: HermitianObservable, friction_rate: f64, diffusion_rate: f64) -> Result<Self> {
        for (name, v) in [("friction_rate", friction_rate), ("diffusion_rate", diffusion_rate)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self {
            coupling,
            friction_rate,
            diffusion_rate,
        })
    }

    fn is_decoupled(&self) -> bool {
        self.friction_rate == 0.0 && self.diffusion_rate == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSystem {
    pub hamiltonian: HermitianObservable,
    pub channels: Vec<CouplingChannel>,
    pub constants: PhysicalConstants,
}

impl QuantumSystem {
    pub fn new(
        hamiltonian: HermitianObservable,
        channels: Vec<CouplingChannel>,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        let dim = hamiltonian.dim();
        for ch in &channels {
            if ch.coupling.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: ch.coupling.dim(),
                });
            }
        }
        Ok(Self {
            hamiltonian,
            channels,
            constants,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub(crate) fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: rho.dim(),
                right: self.dim(),
            });
        }
        Ok(())
    }
}

/// The friction-term operator `[Q, H]_ρ` or its linearized replacement.
pub(crate) fn friction_operator(
    x: &CMatrix,
    rho: &CMatrix,
    spectral: Option<&SpectralDecomposition>,
    variant: Variant,
) -> CMatrix {
    match (variant, spectral) {
        (Variant::Nonlinear, Some(s)) => modified_operator(s, x),
        _ => (x * rho + rho * x) * Complex64::new(0.5, 0.0),
    }
}

/// `dρ/dt`. The result is Hermitian and traceless.
pub fn generator(rho: &DensityMatrix, sys: &QuantumSystem, variant: Variant) -> Result<CMatrix> {
    sys.check_state(rho)?;
    let r = rho.matrix();
    let h = sys.hamiltonian.matrix();
    let k = &sys.constants;
    let needs_spectrum = variant == Variant::Nonlinear
        && sys.channels.iter().any(|ch| ch.friction_rate != 0.0);
    let spectral = if needs_spectrum {
        Some(rho.spectral()?)
    } else {
        None
    };

    let mut out = (r * h - h * r) * Complex64::new(0.0, 1.0 / k.hbar);
    for ch in sys.channels.iter().filter(|ch| !ch.is_decoupled()) {
        let q = ch.coupling.matrix();
        if ch.friction_rate != 0.0 {
            let qh = commutator(q, h)?;
            let x = friction_operator(&qh, r, spectral.as_ref(), variant);
            out -= commutator(q, &x)? * Complex64::new(ch.friction_rate / k.kb, 0.0);
        }
        if ch.diffusion_rate != 0.0 {
            let qr = commutator(q, r)?;
            out -= commutator(q, &qr)? * Complex64::new(ch.diffusion_rate, 0.0);
        }
    }
    Ok(out)
}

/// The Gibbs state `exp(−H/(k_B T)) / Z`.
pub fn equilibrium_state(
    h: &HermitianObservable,
    temperature: f64,
    constants: &PhysicalConstants,
) -> Result<DensityMatrix> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let s = crate::operator::spectral_decompose(h)?;
    let beta = 1.0 / (constants.kb * temperature);
    // Eigenvalues are descending, so the last one is the ground-state energy.
    let e0 = s.eigenvalues[s.dim() - 1];
    let w: Vec<f64> = s
        .eigenvalues
        .iter()
        .map(|&e| (-(e - e0) * beta).exp())
        .collect();
    let z: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / z).collect();
    Ok(DensityMatrix::new_unchecked(hermitize(&s.compose(&p))))
}

/// Whether a channel satisfies `T {H_e, S_e}ʲ = {H_e, H_e}ʲ` within
/// `tol · max(1, {H_e, H_e}ʲ)`.
pub fn check_bath_equilibrium(channel: &CouplingChannel, temperature: f64, tol: f64) -> bool {
    (temperature * channel.friction_rate - channel.diffusion_rate).abs()
        <= tol * channel.diffusion_rate.max(1.0)
}

/// `tr(Hρ)`.
pub fn energy_expectation(rho: &DensityMatrix, h: &HermitianObservable) -> Result<f64> {
    rho.expectation(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::a_rho_nonlinear_part;
    use crate::testutil::{c, frob, pauli, random_density, random_hermitian, rng};

    fn two_level_system(gamma0: f64, temperature: f64) -> QuantumSystem {
        let [s1, s2, s3] = pauli();
        let h = HermitianObservable::new(s3 * c(0.5, 0.0)).unwrap();
        let friction = gamma0;
        let diffusion = gamma0 * temperature;
        let channels = [s1, s2]
            .into_iter()
            .map(|s| {
                CouplingChannel::new(
                    HermitianObservable::new(s * c(0.5, 0.0)).unwrap(),
                    friction,
                    diffusion,
                )
                .unwrap()
            })
            .collect();
        QuantumSystem::new(h, channels, PhysicalConstants::default()).unwrap()
    }

    #[test]
    fn von_neumann_only_without_channels() {
        let sys = QuantumSystem::new(
            HermitianObservable::from_real_diagonal(&[1.0, -0.3, 0.2]).unwrap(),
            vec![],
            PhysicalConstants::default(),
        )
        .unwrap();
        let rho = DensityMatrix::from_populations(&[0.5, 0.3, 0.2]).unwrap();
        assert_eq!(frob(&generator(&rho, &sys, Variant::Nonlinear).unwrap()), 0.0);

        let mut r = rng(1);
        let rho = random_density(&mut r, 3);
        let out = generator(&rho, &sys, Variant::Nonlinear).unwrap();
        let h = sys.hamiltonian.matrix();
        let expected = (rho.matrix() * h - h * rho.matrix()) * c(0.0, 1.0);
        assert!(frob(&(out - expected)) < 1e-15);
    }

    #[test]
    fn generator_is_hermitian_and_traceless() {
        let mut r = rng(2);
        for dim in 2..=5 {
            let h = random_hermitian(&mut r, dim);
            let channels = (0..2)
                .map(|_| CouplingChannel::new(random_hermitian(&mut r, dim), 0.7, 1.3).unwrap())
                .collect();
            let sys = QuantumSystem::new(h, channels, PhysicalConstants::new(0.8, 1.7).unwrap())
                .unwrap();
            let rho = random_density(&mut r, dim);
            for variant in [Variant::Nonlinear, Variant::Linearized] {
                let out = generator(&rho, &sys, variant).unwrap();
                assert!(out.trace().norm() < 1e-13);
                assert!(crate::operator::hermiticity_error(&out) < 1e-12);
            }
        }
    }

    #[test]
    fn gibbs_state_is_a_fixed_point() {
        let sys = two_level_system(1.0, 1.0);
        let rho = equilibrium_state(&sys.hamiltonian, 1.0, &sys.constants).unwrap();
        let out = generator(&rho, &sys, Variant::Nonlinear).unwrap();
        assert!(frob(&out) < 1e-12);
    }

    #[test]
    fn linearized_generator_misses_the_fixed_point_at_low_temperature() {
        // ħω/(k_B T) = 10
        let sys = two_level_system(1.0, 0.1);
        let rho = equilibrium_state(&sys.hamiltonian, 0.1, &sys.constants).unwrap();
        let out = generator(&rho, &sys, Variant::Linearized).unwrap();
        assert!(frob(&out) > 1e-3);
    }

    #[test]
    fn variant_difference_is_the_nonlinear_part() {
        let mut r = rng(4);
        let dim = 3;
        let h = random_hermitian(&mut r, dim);
        let q = random_hermitian(&mut r, dim);
        let f = 0.9;
        let sys = QuantumSystem::new(
            h.clone(),
            vec![CouplingChannel::new(q.clone(), f, 0.4).unwrap()],
            PhysicalConstants::new(1.0, 2.0).unwrap(),
        )
        .unwrap();
        let rho = random_density(&mut r, dim);
        let diff = generator(&rho, &sys, Variant::Nonlinear).unwrap()
            - generator(&rho, &sys, Variant::Linearized).unwrap();

        // [Q, H] is anti-Hermitian; i[Q, H] is Hermitian and A′ is linear.
        let qh = commutator(q.matrix(), h.matrix()).unwrap();
        let herm = HermitianObservable::new(&qh * c(0.0, 1.0)).unwrap();
        let nl = a_rho_nonlinear_part(&rho, &herm).unwrap().into_matrix() * c(0.0, -1.0);
        let expected =
            commutator(q.matrix(), &(nl * c(0.5, 0.0))).unwrap() * c(-f / 2.0, 0.0);
        assert!(frob(&(diff - expected)) < 1e-12);
    }

    #[test]
    fn equilibrium_state_examples() {
        let [_, _, s3] = pauli();
        let h = HermitianObservable::new(s3 * c(0.5, 0.0)).unwrap();
        let k = PhysicalConstants::default();
        let rho = equilibrium_state(&h, 1.0, &k).unwrap();
        let z = 2.0 * 0.5f64.cosh();
        assert!((rho.matrix()[(0, 0)].re - (-0.5f64).exp() / z).abs() < 1e-15);
        assert!((rho.matrix()[(1, 1)].re - 0.731_058_578_630_004_9).abs() < 1e-12);
        let m3 = rho.matrix()[(0, 0)].re - rho.matrix()[(1, 1)].re;
        assert!((m3 + 0.5f64.tanh()).abs() < 1e-15);
        let e = energy_expectation(&rho, &h).unwrap();
        assert!((e + 0.5 * 0.5f64.tanh()).abs() < 1e-15);

        let hot = equilibrium_state(&h, 1e9, &k).unwrap();
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(frob(&(hot.matrix() - half.matrix())) < 1e-9);

        let zero = HermitianObservable::new(CMatrix::zeros(3, 3)).unwrap();
        let flat = equilibrium_state(&zero, 1.0, &k).unwrap();
        assert!(frob(&(flat.matrix() - DensityMatrix::maximally_mixed(3).unwrap().matrix())) < 1e-15);

        // Low temperature does not overflow.
        let cold = equilibrium_state(&h, 1e-3, &k).unwrap();
        assert!((cold.matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!(equilibrium_state(&h, 0.0, &k).is_err());
    }

    #[test]
    fn bath_equilibrium_condition() {
        let q = HermitianObservable::new(pauli()[0].clone()).unwrap();
        assert!(!check_bath_equilibrium(
            &CouplingChannel::new(q.clone(), 1.0, 2.0).unwrap(),
            1.0,
            1e-12
        ));
        assert!(check_bath_equilibrium(
            &CouplingChannel::new(q.clone(), 0.0, 0.0).unwrap(),
            1.0,
            1e-12
        ));
        assert!(check_bath_equilibrium(
            &CouplingChannel::new(q.clone(), 1.0, 2.0).unwrap(),
            2.0,
            1e-12
        ));
        assert!(CouplingChannel::new(q, -1.0, 2.0).is_err());
    }

    #[test]
    fn energy_expectation_examples() {
        let [_, _, s3] = pauli();
        let h = HermitianObservable::new(s3 * c(0.5, 0.0)).unwrap();
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        assert_eq!(energy_expectation(&half, &h).unwrap(), 0.0);
        let up = DensityMatrix::from_populations(&[1.0, 0.0]).unwrap();
        assert_eq!(energy_expectation(&up, &h).unwrap(), 0.5);
    }

    #[test]
    fn dimension_checks() {
        let h = HermitianObservable::identity(2).unwrap();
        let q = HermitianObservable::identity(3).unwrap();
        assert!(QuantumSystem::new(
            h.clone(),
            vec![CouplingChannel::new(q, 1.0, 1.0).unwrap()],
            PhysicalConstants::default()
        )
        .is_err());
        let sys = QuantumSystem::new(h, vec![], PhysicalConstants::default()).unwrap();
        let rho = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(generator(&rho, &sys, Variant::Nonlinear).is_err());
    }
}
