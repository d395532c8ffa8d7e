//! Self-scaled lower bounds on atomic cone ranks.
//!
//! The crate computes semidefinite lower bounds on the nonnegative rank of
//! matrices and tensors and on the cp-rank of completely positive matrices,
//! together with the combinatorial bounds they are usually compared against
//! (fooling sets, complement Lovász theta, fractional and exact rectangle
//! covers, edge-clique covers) and a handful of closed forms.
//!
//! Layout:
//!
//! - [`types`]: validated matrix/tensor containers and index conventions.
//! - [`model`]: solver-agnostic conic problem descriptions and the builders
//!   for every relaxation.
//! - [`solve`]: the single entry point that actually solves a [`model::ConicProblem`].
//! - [`combinatorial`]: rectangle graphs, clique graphs and the covering bounds.
//! - [`oracles`]: closed-form values and instance generators.
//! - [`report`]: file formats, bound reports and parameter scans used by the CLI.

// Pulls in the BLAS/LAPACK link directives needed by the PSD cone.
extern crate openblas_src;

pub mod combinatorial;
pub mod error;
pub mod model;
pub mod oracles;
pub mod report;
pub mod solve;
pub mod types;

pub use error::{Error, Result};
pub use model::{BuilderOptions, ConicProblem};
pub use solve::{ConicSolution, SolveStatus, SolverOptions};
pub use types::{CpInputMatrix, NonnegMatrix, NonnegTensor};

/// Solves the default-option τ₊ˢᵒˢ relaxation of a nonnegative matrix and
/// returns the certified (dual-side) bound. A zero matrix yields 0.
pub fn tau_plus_sos(a: &NonnegMatrix) -> Result<f64> {
    tau_plus_sos_with(a, &BuilderOptions::default(), &SolverOptions::default())
}

pub fn tau_plus_sos_with(
    a: &NonnegMatrix,
    opts: &BuilderOptions,
    solver: &SolverOptions,
) -> Result<f64> {
    if a.support().is_empty() {
        return Ok(0.0);
    }
    let problem = model::build_tau_plus_matrix(a, opts)?;
    let sol = solve::solve(&problem, solver)?;
    Ok(solve::extract_bound(&sol)?.value)
}

/// τ₊ˢᵒˢ of a tensor of any order ≥ 2. A zero tensor yields 0.
pub fn tau_plus_sos_tensor(a: &NonnegTensor) -> Result<f64> {
    tau_plus_sos_tensor_with(a, &SolverOptions::default())
}

pub fn tau_plus_sos_tensor_with(a: &NonnegTensor, solver: &SolverOptions) -> Result<f64> {
    if a.support().is_empty() {
        return Ok(0.0);
    }
    let problem = model::build_tau_plus_tensor(a)?;
    let sol = solve::solve(&problem, solver)?;
    Ok(solve::extract_bound(&sol)?.value)
}

/// τ_cpˢᵒˢ of a (validated) symmetric nonnegative PSD matrix. A zero matrix yields 0.
pub fn tau_cp_sos(a: &CpInputMatrix) -> Result<f64> {
    tau_cp_sos_with(a, &SolverOptions::default())
}

pub fn tau_cp_sos_with(a: &CpInputMatrix, solver: &SolverOptions) -> Result<f64> {
    if a.as_matrix().support().is_empty() {
        return Ok(0.0);
    }
    let problem = model::build_tau_cp(a)?;
    let sol = solve::solve(&problem, solver)?;
    Ok(solve::extract_bound(&sol)?.value)
}
