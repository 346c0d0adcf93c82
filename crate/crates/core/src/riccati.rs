//! Continuous-time algebraic Riccati equations
//! `X·A + Aᵀ·X − X·M·X + Q = 0` with possibly indefinite `Q`.
//!
//! The stabilizing (maximal) solution is read off the stable Schur vectors
//! of the Hamiltonian `[[A, −M], [−Q, −Aᵀ]]`: with the ordered Schur basis
//! split as `[W₁₁; W₂₁]`, `X = W₂₁·W₁₁⁻¹`.

use num_complex::{Complex, Complex64};

use crate::error::{Error, Result};
use crate::linalg::{
    condition_number, eigenvalues, real_schur_ordered, singular_values, solve_linear, Matrix,
};
use crate::scalar::Scalar;

/// Threshold on `cond(W₁₁)` above which the stable subspace is not accepted
/// as a graph subspace.
pub const GRAPH_CONDITION_MAX: f64 = 1e12;
/// Relative singular-value threshold of the PBH rank test.
pub const PBH_RANK_RTOL: f64 = 1e-8;
/// PBH margins below this (but above the rank threshold) produce a warning.
pub const PBH_WARN_RTOL: f64 = 1e-6;
const SYMMETRY_RTOL: f64 = 1e-10;

/// Data of `X·A + Aᵀ·X − X·M·X + Q = 0`.
#[derive(Debug, Clone)]
pub struct CareProblem<T> {
    a: Matrix<T>,
    m: Matrix<T>,
    q: Matrix<T>,
}

fn check_symmetric<T: Scalar>(name: &'static str, m: &Matrix<T>) -> Result<()> {
    let asym = m.asymmetry();
    if asym > T::lit(SYMMETRY_RTOL) * m.norm_fro() {
        return Err(Error::NotSymmetric {
            name,
            asymmetry: asym.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Smallest eigenvalue of a (numerically) symmetric matrix.
pub(crate) fn min_symmetric_eigenvalue<T: Scalar>(m: &Matrix<T>) -> Result<T> {
    if m.rows() == 0 {
        return Ok(T::infinity());
    }
    let spec = eigenvalues(&m.symmetrize())?;
    Ok(spec
        .eigenvalues
        .iter()
        .fold(T::infinity(), |acc, z| acc.min(z.re)))
}

impl<T: Scalar> CareProblem<T> {
    pub fn new(a: Matrix<T>, m: Matrix<T>, q: Matrix<T>) -> Result<Self> {
        let n = a.require_square()?;
        for (ctx, mat) in [("CARE weight M", &m), ("CARE weight Q", &q)] {
            if mat.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: (n, n),
                    found: mat.shape(),
                });
            }
        }
        if !(a.is_finite() && m.is_finite() && q.is_finite()) {
            return Err(Error::NonFinite);
        }
        check_symmetric("M", &m)?;
        check_symmetric("Q", &q)?;
        let min_eig = min_symmetric_eigenvalue(&m)?;
        if min_eig < -T::lit(SYMMETRY_RTOL) * m.norm_fro() {
            return Err(Error::InvalidProblem(format!(
                "M must be positive semidefinite (min eigenvalue {:e})",
                min_eig.to_f64_lossy()
            )));
        }
        Ok(Self { a, m, q })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn m(&self) -> &Matrix<T> {
        &self.m
    }

    pub fn q(&self) -> &Matrix<T> {
        &self.q
    }

    /// `[[A, −M], [−Q, −Aᵀ]]`.
    pub fn hamiltonian(&self) -> Matrix<T> {
        Matrix::from_blocks(&self.a, &(-&self.m), &(-&self.q), &(-&self.a.transpose()))
    }
}

/// Symmetric stabilizing solution with its certificates.
#[derive(Debug, Clone)]
pub struct StabilizingRiccatiSolution<T> {
    pub x: Matrix<T>,
    /// `A − M·X`.
    pub closed_loop: Matrix<T>,
    /// `‖X·A + Aᵀ·X − X·M·X + Q‖_F`.
    pub residual: T,
    /// `−max Re λ(A − M·X)`.
    pub spectrum_margin: T,
    /// One-norm condition number of `W₁₁`.
    pub w11_condition: T,
}

/// `‖X·A + Aᵀ·X − X·M·X + Q‖_F`.
pub fn care_residual<T: Scalar>(x: &Matrix<T>, p: &CareProblem<T>) -> T {
    let xa = x.matmul(&p.a);
    let r = &(&(&xa + &xa.transpose()) - &x.matmul(&p.m).matmul(x)) + &p.q;
    r.norm_fro()
}

/// Outcome of the Popov–Belevitch–Hautus stabilizability test.
#[derive(Debug, Clone)]
pub struct PbhReport {
    pub stabilizable: bool,
    /// Smallest value of `σ_n([λI − A, B]) / scale` over the tested eigenvalues.
    pub min_relative_singular: f64,
    /// Eigenvalue attaining the minimum.
    pub critical_eigenvalue: Option<Complex64>,
    pub warning: Option<String>,
}

/// PBH test: `rank [λI − A, B] = n` for every eigenvalue `λ` of `A` with
/// `Re λ ≥ −axis_tol`.
pub fn pbh_stabilizability<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    axis_tol: T,
) -> Result<PbhReport> {
    let n = a.require_square()?;
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            context: "PBH test",
            expected: (n, b.cols()),
            found: b.shape(),
        });
    }
    let m = b.cols();
    if n == 0 {
        return Ok(PbhReport {
            stabilizable: true,
            min_relative_singular: f64::INFINITY,
            critical_eigenvalue: None,
            warning: None,
        });
    }
    let spec = eigenvalues(a)?;
    let mut worst = f64::INFINITY;
    let mut critical = None;
    for lam in spec.eigenvalues.iter().filter(|z| z.re >= -axis_tol) {
        // Real embedding [[Cr, −Ci], [Ci, Cr]] of C = [λI − A, B].
        let w = n + m;
        let mut emb = Matrix::zeros(2 * n, 2 * w);
        for i in 0..n {
            for j in 0..n {
                let cr = if i == j {
                    lam.re - a[(i, j)]
                } else {
                    -a[(i, j)]
                };
                emb[(i, j)] = cr;
                emb[(n + i, w + j)] = cr;
            }
            for j in 0..m {
                emb[(i, n + j)] = b[(i, j)];
                emb[(n + i, w + n + j)] = b[(i, j)];
            }
            emb[(i, w + i)] = -lam.im;
            emb[(n + i, i)] = lam.im;
        }
        let scale = (emb.norm_fro().to_f64_lossy() / std::f64::consts::SQRT_2).max(1.0);
        let sv = singular_values(&emb)?;
        let sigma_n = sv[2 * n - 1].to_f64_lossy() / scale;
        if sigma_n < worst {
            worst = sigma_n;
            critical = Some(Complex::new(lam.re.to_f64_lossy(), lam.im.to_f64_lossy()));
        }
    }
    let stabilizable = worst > PBH_RANK_RTOL;
    let warning = (stabilizable && worst < PBH_WARN_RTOL)
        .then(|| format!("stabilizability is borderline: relative PBH margin {worst:.3e}"));
    Ok(PbhReport {
        stabilizable,
        min_relative_singular: worst,
        critical_eigenvalue: critical,
        warning,
    })
}

fn require_stabilizable<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, axis_tol: T) -> Result<()> {
    let report = pbh_stabilizability(a, b, axis_tol)?;
    if report.stabilizable {
        Ok(())
    } else {
        Err(Error::StabilizabilityFailure {
            eigenvalue: report.critical_eigenvalue.unwrap_or_default(),
            min_singular: report.min_relative_singular,
        })
    }
}

/// Stabilizing solution of the CARE via ordered Schur vectors.
pub fn solve_care_stabilizing<T: Scalar>(
    p: &CareProblem<T>,
    axis_tol: T,
) -> Result<StabilizingRiccatiSolution<T>> {
    let n = p.dim();
    require_stabilizable(&p.a, &p.m, axis_tol)?;
    let schur = real_schur_ordered(&p.hamiltonian(), axis_tol)?;
    if schur.k_stable != n {
        return Err(Error::DichotomySplitFailure {
            stable: schur.k_stable,
            expected: n,
        });
    }
    let w11 = schur.w.block(0, 0, n, n);
    let w21 = schur.w.block(n, 0, n, n);
    let cond = condition_number(&w11);
    if !(cond <= T::lit(GRAPH_CONDITION_MAX)) {
        return Err(Error::GraphSubspaceFailure {
            condition: cond.to_f64_lossy(),
        });
    }
    // X·W₁₁ = W₂₁  ⇔  W₁₁ᵀ·Xᵀ = W₂₁ᵀ
    let x = solve_linear(&w11.transpose(), &w21.transpose())?
        .transpose()
        .symmetrize();
    let closed_loop = &p.a - &p.m.matmul(&x);
    let abscissa = eigenvalues(&closed_loop)?.abscissa();
    if !(abscissa < T::zero()) {
        return Err(Error::StabilityCheckFailure {
            what: "Riccati closed loop",
            abscissa: abscissa.to_f64_lossy(),
        });
    }
    let residual = care_residual(&x, p);
    Ok(StabilizingRiccatiSolution {
        x,
        closed_loop,
        residual,
        spectrum_margin: -abscissa,
        w11_condition: cond,
    })
}

/// `B·R⁻¹·Bᵀ`, after checking that `R` is symmetric positive definite.
pub fn control_weight<T: Scalar>(b: &Matrix<T>, r: &Matrix<T>) -> Result<Matrix<T>> {
    let m = r.require_square()?;
    if b.cols() != m {
        return Err(Error::DimensionMismatch {
            context: "control weight B·R⁻¹·Bᵀ",
            expected: (b.rows(), m),
            found: b.shape(),
        });
    }
    check_symmetric("R", r)?;
    let min_eig = min_symmetric_eigenvalue(r)?;
    if m > 0 && !(min_eig > T::lit(SYMMETRY_RTOL) * r.norm_fro()) {
        return Err(Error::NonPositiveR {
            min_eigenvalue: min_eig.to_f64_lossy(),
        });
    }
    if m == 0 {
        return Ok(Matrix::zeros(b.rows(), b.rows()));
    }
    let rinv_bt = solve_linear(r, &b.transpose())?;
    Ok(b.matmul(&rinv_bt).symmetrize())
}

/// Solves `ρΠ = ΠA + AᵀΠ − ΠBR⁻¹BᵀΠ + Q` for the `Π` making
/// `A − BR⁻¹BᵀΠ − (ρ/2)I` stable, as the stabilizing CARE of the shifted
/// data `(A − (ρ/2)I, BR⁻¹Bᵀ, Q)`.
pub fn solve_discounted_are<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    q: &Matrix<T>,
    r: &Matrix<T>,
    rho: T,
    axis_tol: T,
) -> Result<StabilizingRiccatiSolution<T>> {
    let m = control_weight(b, r)?;
    let shifted = a.shift_diagonal(-rho * T::half());
    solve_care_stabilizing(&CareProblem::new(shifted, m, q.clone())?, axis_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::default_axis_tol;

    fn scalar(x: f64) -> Matrix<f64> {
        Matrix::from_diagonal(&[x])
    }

    fn tol(p: &CareProblem<f64>) -> f64 {
        default_axis_tol(&p.hamiltonian())
    }

    #[test]
    fn scalar_unit_problem() {
        let p = CareProblem::new(scalar(0.0), scalar(1.0), scalar(1.0)).unwrap();
        let s = solve_care_stabilizing(&p, tol(&p)).unwrap();
        assert!((s.x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((s.closed_loop[(0, 0)] + 1.0).abs() < 1e-12);
        assert!(care_residual(&scalar(1.0), &p) == 0.0);
    }

    #[test]
    fn residual_of_zero_guess() {
        let p = CareProblem::new(
            Matrix::zeros(3, 3),
            Matrix::identity(3),
            Matrix::identity(3),
        )
        .unwrap();
        assert!((care_residual(&Matrix::<f64>::zeros(3, 3), &p) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn indefinite_weight_scalar() {
        // X𝒜 + 𝒜X − X² − 2 = 0 with 𝒜 = −√4.25
        let a = -(4.25f64.sqrt());
        let p = CareProblem::new(scalar(a), scalar(1.0), scalar(-2.0)).unwrap();
        let s = solve_care_stabilizing(&p, tol(&p)).unwrap();
        assert!((s.x[(0, 0)] + 0.5615).abs() < 1e-3);
        assert!((s.closed_loop[(0, 0)] + 1.5).abs() < 1e-10);
    }

    #[test]
    fn discounted_scalar_closed_form() {
        let (a, b, q, r, rho) = (2.0, 1.0, 2.0, 1.0, 1.0);
        let s = solve_discounted_are(&scalar(a), &scalar(b), &scalar(q), &scalar(r), rho, 1e-9)
            .unwrap();
        let a_rho: f64 = a - rho / 2.0;
        let b_r2 = b * b / r;
        let want = (a_rho + (a_rho * a_rho + q * b_r2).sqrt()) / b_r2;
        assert!((s.x[(0, 0)] - want).abs() < 1e-12);
        assert!((s.x[(0, 0)] - 3.5616).abs() < 1e-4);
    }

    #[test]
    fn non_positive_r_rejected() {
        let err = solve_discounted_are(
            &scalar(1.0),
            &scalar(1.0),
            &scalar(1.0),
            &scalar(0.0),
            1.0,
            1e-9,
        );
        assert!(matches!(err, Err(Error::NonPositiveR { .. })));
        let err = solve_discounted_are(
            &scalar(1.0),
            &scalar(1.0),
            &scalar(1.0),
            &scalar(-2.0),
            1.0,
            1e-9,
        );
        assert!(matches!(err, Err(Error::NonPositiveR { .. })));
    }

    #[test]
    fn unstabilizable_pair_rejected() {
        let a = Matrix::from_diagonal(&[1.0, -1.0]);
        let b = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let report = pbh_stabilizability(&a, &b, 1e-9).unwrap();
        assert!(!report.stabilizable);
        assert_eq!(report.critical_eigenvalue, Some(Complex::new(1.0, 0.0)));
        let err = solve_discounted_are(&a, &b, &Matrix::identity(2), &scalar(1.0), 0.1, 1e-9);
        assert!(matches!(err, Err(Error::StabilizabilityFailure { .. })));
    }

    #[test]
    fn pbh_with_complex_unstable_modes() {
        // unstable oscillator driven through one channel: stabilizable
        let a = Matrix::from_rows(&[[0.1, 1.0], [-1.0, 0.1]]).unwrap();
        let b = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(pbh_stabilizability(&a, &b, 1e-9).unwrap().stabilizable);
        // decoupled copy of the same oscillator without input: not stabilizable
        let a4 = Matrix::from_blocks(&a, &Matrix::zeros(2, 2), &Matrix::zeros(2, 2), &a);
        let b4 = Matrix::from_rows(&[[0.0], [1.0], [0.0], [0.0]]).unwrap();
        let r = pbh_stabilizability(&a4, &b4, 1e-9).unwrap();
        assert!(!r.stabilizable);
        assert!(r.critical_eigenvalue.unwrap().im.abs() > 0.9);
    }

    #[test]
    fn axis_eigenvalue_propagates() {
        // H = [[0, −1], [1, 0]] has eigenvalues ±i
        let p = CareProblem::new(scalar(0.0), scalar(1.0), scalar(-1.0)).unwrap();
        assert!(matches!(
            solve_care_stabilizing(&p, 1e-9),
            Err(Error::ImaginaryAxisEigenvalue { .. })
        ));
    }

    #[test]
    fn rejects_asymmetric_and_indefinite_m() {
        let a = Matrix::zeros(2, 2);
        let q = Matrix::identity(2);
        let asym = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            CareProblem::new(a.clone(), asym, q.clone()),
            Err(Error::NotSymmetric { name: "M", .. })
        ));
        let indef = Matrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(
            CareProblem::new(a, indef, q),
            Err(Error::InvalidProblem(_))
        ));
    }
}
