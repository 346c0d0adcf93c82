//! Dense real linear algebra: the matrix type, factorizations, eigenvalues,
//! ordered real Schur forms and the matrix exponential.

mod expm;
mod lu;
mod matrix;
mod qr;
mod schur;
mod svd;
mod sylvester;

pub use expm::mat_exp;
pub use lu::{condition_number, inverse, solve_linear, solve_vec, Lu, SINGULAR_PIVOT_RTOL};
pub use matrix::{norm2, Matrix};
pub use qr::householder_qr;
pub use schur::{
    default_axis_tol, eigenvalues, eigenvalues_with_tol, hessenberg, quasi_triangular_eigenvalues,
    real_schur, real_schur_ordered, spectral_abscissa, OrderedSchurForm, Spectrum,
};
pub use svd::singular_values;
pub use sylvester::{solve_lyapunov, solve_sylvester};
