#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tqme::operator::{CMatrix, DensityMatrix, HermitianObservable};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn frob(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn random_complex(r: &mut impl Rng, dim: usize) -> CMatrix {
    DMatrix::from_fn(dim, dim, |_, _| {
        c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(r: &mut impl Rng, dim: usize) -> HermitianObservable {
    let g = random_complex(r, dim);
    HermitianObservable::new((&g + g.adjoint()) * c(0.5, 0.0)).unwrap()
}

/// Full-rank state `G G† / tr(G G†)` with a small admixture of the identity.
pub fn random_density(r: &mut impl Rng, dim: usize) -> DensityMatrix {
    let g = random_complex(r, dim);
    let mut m = &g * g.adjoint() + CMatrix::identity(dim, dim) * c(0.01, 0.0);
    let tr = m.trace().re;
    m /= c(tr, 0.0);
    DensityMatrix::new((&m + m.adjoint()) * c(0.5, 0.0)).unwrap()
}

/// A state commuting with `a`: a function of `a` with random positive weights.
pub fn commuting_density(r: &mut impl Rng, a: &HermitianObservable) -> DensityMatrix {
    let s = tqme::operator::spectral_decompose(a).unwrap();
    let w: Vec<f64> = (0..s.dim()).map(|_| r.random_range(0.05..1.0)).collect();
    let z: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / z).collect();
    DensityMatrix::new(tqme::operator::hermitize(&s.compose(&p))).unwrap()
}
