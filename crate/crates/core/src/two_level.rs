//! Two-level systems in the Pauli basis.
//!
//! Every self-adjoint 2×2 matrix is written `A = O(α, a) = ½(α I + a·σ)` with
//! `α = tr A`. A density matrix is `ρ = O(1, m)` with Bloch vector `m`,
//! `|m| ≤ 1`. With `H = O(0, ħω q₃)` and coupling operators `Q_j = O(0, q_j)`
//! for `j = 1, 2` (plus `j = 3` in the isotropic variant), the master equation
//! reduces to the nonlinear Bloch equation
//!
//! ```text
//! dm/dt = ω q₃ × m − γ0 (2k_B T_e/ħω) R·m − γ0 q₃ + γ0 (μ/2)(m² 1 + m m)·q₃
//! ```
//!
//! with `R = (1 + q₃q₃)/2` and `μ(m) = 1/m² − 1/(m artanh m)`.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::Method;
use crate::master::Variant;
use crate::operator::{
    hermiticity_error, trace_of_product, CMatrix, DensityMatrix, HermitianObservable,
    PhysicalConstants, HERMITIAN_TOL,
};

const SERIES_SWITCH: f64 = 1e-4;

fn q3() -> Vector3<f64> {
    Vector3::z()
}

/// `(α, a)` coordinates of a self-adjoint 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliVector {
    pub alpha: f64,
    pub a: Vector3<f64>,
}

impl PauliVector {
    pub fn new(alpha: f64, a: Vector3<f64>) -> Self {
        Self { alpha, a }
    }

    /// `½(α I + a·σ)`.
    pub fn compose(&self) -> CMatrix {
        let (al, a) = (self.alpha, self.a);
        CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5 * (al + a.z), 0.0),
                Complex64::new(0.5 * a.x, -0.5 * a.y),
                Complex64::new(0.5 * a.x, 0.5 * a.y),
                Complex64::new(0.5 * (al - a.z), 0.0),
            ],
        )
    }

    pub fn to_observable(&self) -> HermitianObservable {
        HermitianObservable::from_hermitian_unchecked(self.compose())
    }

    /// Inverse of [`PauliVector::compose`]: `α = tr A`, `a_j = tr(A σ_j)`.
    pub fn decompose(m: &CMatrix) -> Result<Self> {
        if m.shape() != (2, 2) {
            return Err(Error::DimensionMismatch {
                left: m.nrows(),
                right: 2,
            });
        }
        let err = hermiticity_error(m);
        if err > HERMITIAN_TOL {
            return Err(Error::NotHermitian(err));
        }
        let (m00, m11) = (m[(0, 0)].re, m[(1, 1)].re);
        let off = 0.5 * (m[(1, 0)] + m[(0, 1)].conj());
        Ok(Self {
            alpha: m00 + m11,
            a: Vector3::new(2.0 * off.re, 2.0 * off.im, m00 - m11),
        })
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let n = self.a.norm();
        (0.5 * (self.alpha + n), 0.5 * (self.alpha - n))
    }
}

/// `[A, B] = i O(0, a × b)`; returns the Hermitian coefficient `O(0, a × b)`.
pub fn pauli_commutator(a: &PauliVector, b: &PauliVector) -> PauliVector {
    PauliVector::new(0.0, a.a.cross(&b.a))
}

/// `{A, B} = O(αβ + a·b, βa + αb)`.
pub fn pauli_anticommutator(a: &PauliVector, b: &PauliVector) -> PauliVector {
    PauliVector::new(a.alpha * b.alpha + a.a.dot(&b.a), b.alpha * a.a + a.alpha * b.a)
}

/// `[A, [A, B]] = O(0, [a² 1 − a a]·b)`.
pub fn pauli_double_commutator(a: &PauliVector, b: &PauliVector) -> PauliVector {
    PauliVector::new(0.0, projector_complement(&a.a) * b.a)
}

/// `tr(AB) = (αβ + a·b)/2`.
pub fn pauli_trace_product(a: &PauliVector, b: &PauliVector) -> f64 {
    0.5 * (a.alpha * b.alpha + a.a.dot(&b.a))
}

/// `a² 1 − a aᵀ`.
fn projector_complement(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() * a.norm_squared() - a * a.transpose()
}

/// `f(A) = O(f₊ + f₋, (f₊ − f₋) a/|a|)` with `f± = f((α ± |a|)/2)`.
pub fn function_of_observable<F>(a: &PauliVector, f: F) -> Result<PauliVector>
where
    F: Fn(f64) -> f64,
{
    let (lp, lm) = a.eigenvalues();
    let fp = f(lp);
    let fm = f(lm);
    if !fp.is_finite() || !fm.is_finite() {
        return Err(Error::Domain(format!(
            "function undefined at eigenvalues ({lp}, {lm})"
        )));
    }
    let n = a.a.norm();
    if n == 0.0 {
        return Ok(PauliVector::new(2.0 * fp, Vector3::zeros()));
    }
    Ok(PauliVector::new(fp + fm, (fp - fm) / n * a.a))
}

/// `artanh m` for `0 ≤ m < 1`.
fn artanh(m: f64) -> f64 {
    0.5 * (m.ln_1p() - (-m).ln_1p())
}

/// `artanh m − m`, summed as a series where the subtraction would cancel.
fn artanh_remainder(m: f64) -> f64 {
    if m >= 0.5 {
        return artanh(m) - m;
    }
    let m2 = m * m;
    let mut power = m * m2;
    let mut sum = 0.0;
    let mut k = 3.0;
    loop {
        let term = power / k;
        sum += term;
        if term < 1e-18 * sum {
            break sum;
        }
        power *= m2;
        k += 2.0;
    }
}

fn check_mu_domain(m: f64) -> Result<()> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::Domain(format!("mu(m) requires 0 <= m < 1, got {m}")));
    }
    Ok(())
}

/// `μ(m) = 1/m² − 1/(m artanh m)` for `0 ≤ m < 1`, rising from 1/3 toward 1.
pub fn mu(m: f64) -> Result<f64> {
    check_mu_domain(m)?;
    if m < SERIES_SWITCH {
        let u = m * m;
        return Ok(1.0 / 3.0 + u * (4.0 / 45.0 + u * 44.0 / 945.0));
    }
    // (artanh m − m) / (m² artanh m): same function without the 1/m² cancellation.
    Ok(artanh_remainder(m) / (m * m * artanh(m)))
}

/// `μ` extended continuously to the pure-state boundary, `μ(1) = 1`.
pub fn mu_closed_ball(m: f64) -> Result<f64> {
    if m == 1.0 {
        Ok(1.0)
    } else {
        mu(m)
    }
}

/// `dμ/dm` for `0 ≤ m < 1`.
pub fn mu_derivative(m: f64) -> Result<f64> {
    check_mu_domain(m)?;
    if m < SERIES_SWITCH {
        let u = m * m;
        return Ok(m * (8.0 / 45.0 + u * 176.0 / 945.0));
    }
    let a = artanh(m);
    let r = artanh_remainder(m);
    let s = 1.0 - m * m;
    Ok(1.0 / (s * a) - r * (2.0 * a + m / s) / (m * m * m * a * a))
}

/// Bloch vector of a two-level density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub m: Vector3<f64>,
}

impl BlochState {
    pub const SPHERE_TOL: f64 = 1e-9;

    pub fn new(m: Vector3<f64>) -> Result<Self> {
        let n = m.norm();
        if !(n <= 1.0 + Self::SPHERE_TOL) {
            return Err(Error::Domain(format!(
                "Bloch vector length {n} lies outside the Bloch sphere"
            )));
        }
        Ok(Self { m })
    }

    pub fn origin() -> Self {
        Self { m: Vector3::zeros() }
    }

    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    /// `ρ = O(1, m)`.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(PauliVector::new(1.0, self.m).compose())
    }

    /// Bloch vector `m_j = tr(ρ σ_j)` of any 2×2 matrix, without validation.
    pub fn vector_of(rho: &DensityMatrix) -> Result<Vector3<f64>> {
        Ok(PauliVector::decompose(rho.matrix())?.a)
    }
}

/// `A′_ρ = −O(0, μ(m)[m² 1 − m m]·a)` for `ρ = O(1, m)`.
pub fn nonlinear_part_bloch(rho: &BlochState, a: &Vector3<f64>) -> Result<PauliVector> {
    let mu = mu(rho.norm())?;
    Ok(PauliVector::new(0.0, -mu * (projector_complement(&rho.m) * a)))
}

/// The same quantity written through `Δρ = ρ − I/2`:
/// `A′_ρ = 2μ(m)[Δρ tr(A Δρ) − (A − ½ tr A) tr(Δρ²)]`, evaluated with matrices.
pub fn nonlinear_part_deviation_form(rho: &BlochState, a: &PauliVector) -> Result<PauliVector> {
    let mu = mu(rho.norm())?;
    let delta = PauliVector::new(0.0, rho.m).compose();
    let am = a.compose();
    let traceless = &am - CMatrix::identity(2, 2) * Complex64::new(0.5 * am.trace().re, 0.0);
    let t_ad = trace_of_product(&am, &delta);
    let t_dd = trace_of_product(&delta, &delta);
    let out = (delta * t_ad - traceless * t_dd) * Complex64::new(2.0 * mu, 0.0);
    PauliVector::decompose(&out)
}

/// Parameters of the driven-free two-level system coupled to a heat bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams {
    pub omega: f64,
    pub gamma0: f64,
    pub temperature: f64,
    /// Adds `Q₃ = O(0, q₃)` with the same bracket.
    pub isotropic: bool,
    /// Scales the `Q₃` channel strength in the isotropic variant.
    pub q3_multiplier: f64,
    pub constants: PhysicalConstants,
}

impl TwoLevelParams {
    pub fn new(omega: f64, gamma0: f64, temperature: f64) -> Result<Self> {
        Self {
            omega,
            gamma0,
            temperature,
            isotropic: false,
            q3_multiplier: 1.0,
            constants: PhysicalConstants::default(),
        }
        .validated()
    }

    /// Parameters with `ħω/(2k_B T_e) = x` in natural units.
    pub fn from_reduced_inverse_temperature(omega: f64, gamma0: f64, x: f64) -> Result<Self> {
        Self::new(omega, gamma0, omega / (2.0 * x))
    }

    pub fn validated(self) -> Result<Self> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        pos("omega", self.omega)?;
        pos("T_e", self.temperature)?;
        if !(self.gamma0 >= 0.0 && self.gamma0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma0 must be nonnegative, got {}",
                self.gamma0
            )));
        }
        if !(self.q3_multiplier >= 0.0 && self.q3_multiplier.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "q3_multiplier must be nonnegative, got {}",
                self.q3_multiplier
            )));
        }
        Ok(self)
    }

    /// `x = ħω/(2k_B T_e)`.
    pub fn reduced_inverse_temperature(&self) -> f64 {
        self.constants.hbar * self.omega / (2.0 * self.constants.kb * self.temperature)
    }

    /// `R = (1 + q₃q₃)/2`, plus `c (1 − q₃q₃)/2` from a `Q₃` channel of strength `c`.
    pub fn relaxation_matrix(&self) -> Matrix3<f64> {
        let c = if self.isotropic { self.q3_multiplier } else { 0.0 };
        let qq = q3() * q3().transpose();
        (Matrix3::identity() + qq) * 0.5 + (Matrix3::identity() - qq) * (0.5 * c)
    }

    /// `H = O(0, ħω q₃)`.
    pub fn hamiltonian(&self) -> HermitianObservable {
        PauliVector::new(0.0, self.constants.hbar * self.omega * q3()).to_observable()
    }

    /// Coupling operators `O(0, q_j)` with their bracket scale factors.
    pub fn couplings(&self) -> Vec<(HermitianObservable, f64)> {
        let mut out = vec![
            (PauliVector::new(0.0, Vector3::x()).to_observable(), 1.0),
            (PauliVector::new(0.0, Vector3::y()).to_observable(), 1.0),
        ];
        if self.isotropic {
            out.push((PauliVector::new(0.0, q3()).to_observable(), self.q3_multiplier));
        }
        out
    }
}

/// Right-hand side of the Bloch equation; the linearized variant drops the μ term.
pub fn bloch_rhs_variant(
    state: &Vector3<f64>,
    p: &TwoLevelParams,
    variant: Variant,
) -> Result<Vector3<f64>> {
    let n = state.norm();
    if !(n <= 1.0 + BlochState::SPHERE_TOL) && variant == Variant::Nonlinear {
        return Err(Error::Domain(format!(
            "Bloch vector length {n} lies outside the Bloch sphere"
        )));
    }
    let g = p.gamma0;
    let thermal = 1.0 / p.reduced_inverse_temperature();
    let mut rhs = p.omega * q3().cross(state) - g * thermal * (p.relaxation_matrix() * state)
        - g * q3();
    if variant == Variant::Nonlinear {
        let mu = mu_closed_ball(n.min(1.0))?;
        rhs += g * 0.5 * mu * (n * n * q3() + state * state.z);
    }
    Ok(rhs)
}

/// Right-hand side of the nonlinear Bloch equation.
pub fn bloch_rhs(m: &BlochState, p: &TwoLevelParams) -> Result<Vector3<f64>> {
    bloch_rhs_variant(&m.m, p, Variant::Nonlinear)
}

/// `m_eq = −q₃ tanh(ħω/(2k_B T_e))`.
pub fn bloch_equilibrium(p: &TwoLevelParams) -> BlochState {
    BlochState {
        m: -q3() * p.reduced_inverse_temperature().tanh(),
    }
}

/// Steady state of the linearized equation, `−q₃ ħω/(2k_B T_e)`; leaves the
/// Bloch sphere once `ħω > 2k_B T_e`.
pub fn linearized_steady_state(p: &TwoLevelParams) -> Vector3<f64> {
    -q3() * p.reduced_inverse_temperature()
}

/// Jacobian of the nonlinear Bloch equation at `m_eq`.
pub fn bloch_linearized_matrix(p: &TwoLevelParams) -> Result<Matrix3<f64>> {
    let m = p.reduced_inverse_temperature().tanh();
    let mu = mu(m)?;
    let dmu = mu_derivative(m)?;
    let g = p.gamma0;
    let qq = q3() * q3().transpose();
    let rotation = q3().cross_matrix() * p.omega;
    Ok(rotation
        - p.relaxation_matrix() * (g / p.reduced_inverse_temperature())
        - (Matrix3::identity() + qq * 3.0) * (g * m * mu / 2.0)
        - qq * (g * m * m * dmu))
}

/// Fixed-step integration of the Bloch equation; returns `(t, m)` at every step.
pub fn integrate_bloch(
    m0: &Vector3<f64>,
    p: &TwoLevelParams,
    variant: Variant,
    dt: f64,
    t_end: f64,
    method: Method,
) -> Result<Vec<(f64, Vector3<f64>)>> {
    let mut out = vec![(0.0, *m0)];
    integrate_bloch_with(m0, p, variant, dt, t_end, method, |t, m| out.push((t, *m)))?;
    Ok(out)
}

/// As [`integrate_bloch`], handing each step to `observe` instead of storing it.
/// Returns the final state.
pub fn integrate_bloch_with(
    m0: &Vector3<f64>,
    p: &TwoLevelParams,
    variant: Variant,
    dt: f64,
    t_end: f64,
    method: Method,
    mut observe: impl FnMut(f64, &Vector3<f64>),
) -> Result<Vector3<f64>> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::InvalidParameter("dt and t_end must be positive".into()));
    }
    let steps = crate::integrator::step_count(dt, t_end);
    let f = |m: &Vector3<f64>| bloch_rhs_variant(m, p, variant);
    let mut m = *m0;
    for k in 0..steps {
        let t = k as f64 * dt;
        let h = (t_end - t).min(dt);
        m = match method {
            Method::Euler => m + f(&m)? * h,
            Method::Rk4 => {
                let k1 = f(&m)?;
                let k2 = f(&(m + k1 * (h / 2.0)))?;
                let k3 = f(&(m + k2 * (h / 2.0)))?;
                let k4 = f(&(m + k3 * h))?;
                m + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
            }
        };
        observe(t + h, &m);
    }
    Ok(m)
}
