//! Invariant-subspace solvers for infinite-horizon discounted linear-quadratic
//! mean-field problems.
//!
//! The pipeline runs from the discounted Riccati equation through the
//! Hamiltonian (or general non-Hamiltonian) coefficient matrix of the
//! mean-field ODE system, a stable/antistable dichotomy, and the unique
//! initial costate for which the mean field grows slower than `e^{ρt/2}`:
//!
//! - [`riccati`]: stabilizing Riccati solutions from ordered Schur vectors.
//! - [`bvp`]: decaying solutions of dichotomic linear systems.
//! - [`social`]: the social-optimum (SCE) pipeline and decentralized gains.
//! - [`mfg`]: the mean-field game pipeline.
//! - [`contraction`]: the fixed-point contraction bound `β`.
//! - [`sim`]: Monte Carlo simulation of the `N`-agent population.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the common double-precision instantiation.
//!
//! ```
//! use lqmf::{solve_sce, Matrix64, ProblemData64, ProblemParts};
//!
//! let s = |x: f64| Matrix64::from_diagonal(&[x]);
//! let p = ProblemData64::new(ProblemParts {
//!     a: s(2.0), b: s(1.0), d: None, q: s(2.0), r: s(1.0), gamma: s(1.0),
//!     eta: vec![1.0], rho: 1.0, x0: vec![1.0],
//! })?;
//! let sol = solve_sce(&p, None)?;
//! assert!((sol.s0[0] + 0.5616).abs() < 1e-3);
//! # Ok::<(), lqmf::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod contraction;
pub mod error;
pub mod linalg;
pub mod mfg;
pub mod riccati;
pub mod scalar;
pub mod sim;
pub mod social;

pub use bvp::{
    decompose_from_riccati, decompose_from_schur, evaluate_trajectory, solve_decaying, BvpSolution,
    DichotomyDecomposition,
};
pub use contraction::{
    contraction_bound, contraction_bound_for, ContractionReport, QuadratureConfig,
};
pub use error::{Error, Result};
pub use linalg::{Matrix, OrderedSchurForm, Spectrum};
pub use mfg::{build_mfg_matrix, solve_mfg, MfgSolution};
pub use riccati::{
    solve_care_stabilizing, solve_discounted_are, CareProblem, StabilizingRiccatiSolution,
};
pub use scalar::Scalar;
pub use sim::{simulate, InitialDistribution, SimConfig, SimResult};
pub use social::{
    build_hamiltonian, decentralized_strategy, gamma_weights, sce_residual, solve_sce, validate,
    GammaWeights, ProblemData, ProblemParts, SceSolution, StrategySpec, TrajectorySample,
    ValidationReport,
};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type ProblemData64 = ProblemData<f64>;
pub type SceSolution64 = SceSolution<f64>;
pub type MfgSolution64 = MfgSolution<f64>;
pub type DichotomyDecomposition64 = DichotomyDecomposition<f64>;
pub type StabilizingRiccatiSolution64 = StabilizingRiccatiSolution<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type SimResult64 = SimResult<f64>;
