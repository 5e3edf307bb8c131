//! Dense Hermitian operator algebra.
//!
//! All matrices are `DMatrix<Complex64>`. Functions of Hermitian operators go
//! through a spectral decomposition `A = U diag(λ) U†` with eigenvalues
//! sorted in descending order.
//!
//! The modified operator `A_ρ = ∫₀¹ ρ^λ A ρ^{1−λ} dλ` is evaluated exactly in
//! the eigenbasis of `ρ`: with populations `p_i`, `(A_ρ)_{ij} = A_{ij} L(p_i, p_j)`
//! where `L` is the logarithmic mean. [`a_rho_quadrature`] evaluates the
//! integral directly and is kept as an independent check.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Elementwise tolerance used when validating Hermiticity and unit trace.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Default eigenvalue floor for `ln ρ`.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-14;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Planck's constant over 2π and Boltzmann's constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub kb: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { hbar: 1.0, kb: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, kb: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite() && kb > 0.0 && kb.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "physical constants must be positive and finite (hbar = {hbar}, kB = {kb})"
            )));
        }
        Ok(Self { hbar, kb })
    }
}

/// Largest elementwise deviation `|m_ij − conj(m_ji)|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut err = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

/// `(m + m†)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn check_same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    Ok(())
}

/// A self-adjoint complex matrix of dimension at least 2.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianObservable {
    matrix: CMatrix,
}

impl HermitianObservable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, HERMITIAN_TOL)
    }

    /// Validates Hermiticity within `tol` and stores the exactly Hermitian part.
    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        let dim = check_square(&matrix)?;
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
        }
        let err = hermiticity_error(&matrix);
        if err > tol {
            return Err(Error::NotHermitian(err));
        }
        Ok(Self {
            matrix: hermitize(&matrix),
        })
    }

    pub(crate) fn from_hermitian_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            matrix: &self.matrix * Complex64::new(c, 0.0),
        }
    }
}

/// A Hermitian, unit-trace, positive-semidefinite matrix.
///
/// [`DensityMatrix::new_unchecked`] admits states that violate positivity so
/// that integrators can carry (and report) pathological trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = check_square(&matrix)?;
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let herm = hermiticity_error(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let rho = Self {
            matrix: hermitize(&matrix),
        };
        let trace_err = rho.trace_error();
        if trace_err > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "trace deviates from 1 by {trace_err:e}"
            )));
        }
        let min_eig = rho.min_eigenvalue()?;
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidDensity(format!(
                "smallest eigenvalue {min_eig:e} is negative"
            )));
        }
        Ok(rho)
    }

    /// Wraps a matrix without validation.
    pub fn new_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(Self {
            matrix: CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        })
    }

    pub fn from_populations(p: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(p.len(), p.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace_error(&self) -> f64 {
        (self.matrix.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn spectral(&self) -> Result<SpectralDecomposition> {
        decompose_matrix(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let s = self.spectral()?;
        Ok(s.eigenvalues[s.eigenvalues.len() - 1])
    }

    /// `⟨A⟩ = tr(Aρ)`.
    pub fn expectation(&self, a: &HermitianObservable) -> Result<f64> {
        check_same_dim(&self.matrix, a.matrix())?;
        Ok(trace_of_product(a.matrix(), &self.matrix).re)
    }
}

/// Eigenvalues in descending order with the matching unitary eigenvector matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(values) U†`.
    pub fn compose(&self, values: &[f64]) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.compose(self.eigenvalues.as_slice())
    }

    /// `U† A U`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * a * &self.eigenvectors
    }

    /// `U A U†`.
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &self.eigenvectors * a * self.eigenvectors.adjoint()
    }
}

pub(crate) fn decompose_matrix(m: &CMatrix) -> Result<SpectralDecomposition> {
    let n = check_square(m)?;
    let eig = SymmetricEigen::try_new(hermitize(m), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNonConvergence(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let eigenvectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

pub fn spectral_decompose(a: &HermitianObservable) -> Result<SpectralDecomposition> {
    decompose_matrix(a.matrix())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_square(a)?;
    check_same_dim(a, b)?;
    Ok(a * b - b * a)
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_square(a)?;
    check_same_dim(a, b)?;
    Ok(a * b + b * a)
}

/// `tr(AB)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `f(A) = U f(diag λ) U†`. Fails if `f` is not finite at an eigenvalue.
pub fn operator_function<F>(a: &HermitianObservable, f: F) -> Result<HermitianObservable>
where
    F: Fn(f64) -> f64,
{
    let s = spectral_decompose(a)?;
    let values = s
        .eigenvalues
        .iter()
        .map(|&x| {
            let y = f(x);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Domain(format!("function is undefined at eigenvalue {x}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HermitianObservable::from_hermitian_unchecked(hermitize(
        &s.compose(&values),
    )))
}

/// Logarithmic mean `(p − q)/(ln p − ln q)`, the kernel of `A_ρ` in the eigenbasis
/// of `ρ`. Equal arguments give `p`; a non-positive argument gives 0.
pub fn logarithmic_mean(p: f64, q: f64) -> f64 {
    if p <= 0.0 || q <= 0.0 {
        return 0.0;
    }
    let (hi, lo) = if p >= q { (p, q) } else { (q, p) };
    // lo = hi (1 + w) with w in (-1, 0]; ln_1p keeps the ratio accurate near w = 0.
    let w = (lo - hi) / hi;
    if w.abs() < 1e-12 {
        hi * (1.0 + 0.5 * w)
    } else {
        (lo - hi) / w.ln_1p()
    }
}

/// `A_ρ` for an arbitrary (not necessarily Hermitian) matrix, given the
/// spectral decomposition of `ρ`. Linear in `a`.
pub fn modified_operator(rho: &SpectralDecomposition, a: &CMatrix) -> CMatrix {
    let p: Vec<f64> = rho.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let mut at = rho.to_eigenbasis(a);
    let n = p.len();
    for i in 0..n {
        for j in 0..n {
            at[(i, j)] *= logarithmic_mean(p[i], p[j]);
        }
    }
    rho.from_eigenbasis(&at)
}

/// The modified operator `A_ρ = ∫₀¹ ρ^λ A ρ^{1−λ} dλ`.
pub fn a_rho(rho: &DensityMatrix, a: &HermitianObservable) -> Result<HermitianObservable> {
    check_same_dim(rho.matrix(), a.matrix())?;
    let s = rho.spectral()?;
    Ok(HermitianObservable::from_hermitian_unchecked(hermitize(
        &modified_operator(&s, a.matrix()),
    )))
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th root on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn_1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn_1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Direct λ-quadrature of `∫₀¹ ρ^λ A ρ^{1−λ} dλ` with `nodes` Gauss–Legendre points.
/// Zero eigenvalues use `0^λ = 0` (all nodes are interior).
pub fn a_rho_quadrature(
    rho: &DensityMatrix,
    a: &HermitianObservable,
    nodes: usize,
) -> Result<HermitianObservable> {
    if nodes < 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature needs at least 2 nodes, got {nodes}"
        )));
    }
    check_same_dim(rho.matrix(), a.matrix())?;
    let s = rho.spectral()?;
    let p: Vec<f64> = s.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let power = |lambda: f64| -> CMatrix {
        let v: Vec<f64> = p
            .iter()
            .map(|&x| if x > 0.0 { x.powf(lambda) } else { 0.0 })
            .collect();
        s.compose(&v)
    };
    let (xs, ws) = gauss_legendre(nodes);
    let dim = a.dim();
    let mut acc = CMatrix::zeros(dim, dim);
    for (&x, &w) in xs.iter().zip(&ws) {
        acc += power(x) * a.matrix() * power(1.0 - x) * Complex64::new(w, 0.0);
    }
    Ok(HermitianObservable::from_hermitian_unchecked(hermitize(&acc)))
}

/// `A′_ρ = 2A_ρ − (Aρ + ρA)` for an arbitrary matrix.
pub fn nonlinear_part_matrix(rho: &SpectralDecomposition, rho_matrix: &CMatrix, a: &CMatrix) -> CMatrix {
    modified_operator(rho, a) * Complex64::new(2.0, 0.0) - (a * rho_matrix + rho_matrix * a)
}

/// The nonlinear part `A′_ρ = 2A_ρ − (Aρ + ρA)`; vanishes when `[A, ρ] = 0`.
pub fn a_rho_nonlinear_part(
    rho: &DensityMatrix,
    a: &HermitianObservable,
) -> Result<HermitianObservable> {
    check_same_dim(rho.matrix(), a.matrix())?;
    let s = rho.spectral()?;
    Ok(HermitianObservable::from_hermitian_unchecked(hermitize(
        &nonlinear_part_matrix(&s, rho.matrix(), a.matrix()),
    )))
}

/// Canonical correlation `⟨⟨A; B⟩⟩ = tr(A_ρ B)` for arbitrary matrices.
/// For anti-Hermitian arguments `⟨⟨X; X⟩⟩ ≤ 0`.
pub fn canonical_correlation_matrix(rho: &SpectralDecomposition, a: &CMatrix, b: &CMatrix) -> Complex64 {
    trace_of_product(&modified_operator(rho, a), b)
}

/// Canonical correlation `⟨⟨A; B⟩⟩ = tr(A_ρ B)`; symmetric and positive.
pub fn canonical_correlation(
    rho: &DensityMatrix,
    a: &HermitianObservable,
    b: &HermitianObservable,
) -> Result<f64> {
    check_same_dim(rho.matrix(), a.matrix())?;
    check_same_dim(a.matrix(), b.matrix())?;
    let s = rho.spectral()?;
    Ok(canonical_correlation_matrix(&s, a.matrix(), b.matrix()).re)
}

/// `ln ρ` with eigenvalues floored at `floor`.
pub fn log_density(rho: &DensityMatrix, floor: f64) -> Result<HermitianObservable> {
    if !(floor > 0.0 && floor < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "log floor must lie in (0, 1), got {floor}"
        )));
    }
    let s = rho.spectral()?;
    let values: Vec<f64> = s.eigenvalues.iter().map(|&p| p.max(floor).ln()).collect();
    Ok(HermitianObservable::from_hermitian_unchecked(hermitize(
        &s.compose(&values),
    )))
}

/// `S = −k_B tr(ρ ln ρ)` with `0 ln 0 = 0`; non-positive eigenvalues contribute nothing.
pub fn von_neumann_entropy(rho: &DensityMatrix, constants: &PhysicalConstants) -> Result<f64> {
    let s = rho.spectral()?;
    Ok(entropy_of_spectrum(s.eigenvalues.as_slice(), constants))
}

pub(crate) fn entropy_of_spectrum(p: &[f64], constants: &PhysicalConstants) -> f64 {
    let sum: f64 = p
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum();
    constants.kb * sum
}
