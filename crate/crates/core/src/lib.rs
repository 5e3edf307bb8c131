//! Simulator for the nonlinear thermodynamic quantum master equation.
//!
//! A quantum subsystem described by a density matrix is coupled to a
//! classical heat bath through self-adjoint coupling operators. The
//! dissipative part of the evolution is built from the modified operator
//! `A_ρ = ∫₀¹ ρ^λ A ρ^{1−λ} dλ`, which makes the master equation nonlinear in
//! `ρ` and gives it the Gibbs state as a fixed point. The bath energy is
//! co-evolved so that the combined system conserves energy.
//!
//! Modules:
//! - [`operator`]: dense Hermitian algebra, `A_ρ`, canonical correlations.
//! - [`master`]: the master-equation generator and its equilibrium state.
//! - [`environment`]: heat-bath models and the bath energy equation.
//! - [`two_level`]: closed-form Pauli algebra and the nonlinear Bloch equation.
//! - [`integrator`]: fixed-step time integration with structure monitors.
//! - [`cli`]: configuration files, CSV output and the command-line entry points.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod environment;
pub mod error;
pub mod integrator;
pub mod master;
pub mod operator;
pub mod two_level;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use operator::{CMatrix, DensityMatrix, HermitianObservable, PhysicalConstants};
