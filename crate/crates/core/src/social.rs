//! Social-optimum pipeline: discounted Riccati gain `Π`, the Hamiltonian of
//! the scaled SCE system, the auxiliary Riccati solution `X₊`, and the unique
//! initial costate `s₀` for which `(x̄, s)` grows slower than `e^{ρt/2}`.

use num_complex::{Complex, Complex64};

use crate::bvp::{
    central_difference_residual, decompose_from_riccati, solve_decaying, BvpSolution,
    DichotomyDecomposition,
};
use crate::error::{Error, Result};
use crate::linalg::{
    default_axis_tol, eigenvalues_with_tol, solve_linear, solve_vec, Matrix, Spectrum,
};
use crate::riccati::{
    control_weight, min_symmetric_eigenvalue, pbh_stabilizability, solve_care_stabilizing,
    solve_discounted_are, CareProblem, PbhReport, StabilizingRiccatiSolution,
};
use crate::scalar::Scalar;

const SYMMETRY_RTOL: f64 = 1e-10;
const R_DEFINITE_RTOL: f64 = 1e-10;
const SELF_CHECK_RTOL: f64 = 1e-9;

/// Plain-field view of a problem instance, validated by [`ProblemData::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParts<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    /// Noise loading, needed only by the simulator.
    pub d: Option<Matrix<T>>,
    pub q: Matrix<T>,
    pub r: Matrix<T>,
    pub gamma: Matrix<T>,
    pub eta: Vec<T>,
    pub rho: T,
    pub x0: Vec<T>,
}

/// LQ mean-field problem `dxᵢ = (A·xᵢ + B·uᵢ)dt + D·dWᵢ` with cost weights
/// `Q`, `R`, coupling `Φ(x) = Γ·x + η` and discount `ρ`.
///
/// Construction checks shapes, finiteness, symmetry of `Q` and `R`, and
/// `ρ > 0`. Positive definiteness of `R` and stabilizability are reported by
/// [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData<T> {
    parts: ProblemParts<T>,
}

fn check_shape<T: Scalar>(
    context: &'static str,
    m: &Matrix<T>,
    expected: (usize, usize),
) -> Result<()> {
    if m.shape() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found: m.shape(),
        });
    }
    Ok(())
}

fn check_len(context: &'static str, v: &[impl Sized], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            context,
            expected: (n, 1),
            found: (v.len(), 1),
        });
    }
    Ok(())
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

impl<T: Scalar> ProblemData<T> {
    pub fn new(parts: ProblemParts<T>) -> Result<Self> {
        let n = parts
            .a
            .require_square()
            .map_err(|_| Error::DimensionMismatch {
                context: "A",
                expected: (parts.a.rows(), parts.a.rows()),
                found: parts.a.shape(),
            })?;
        if parts.b.rows() != n {
            return Err(Error::DimensionMismatch {
                context: "B",
                expected: (n, parts.b.cols()),
                found: parts.b.shape(),
            });
        }
        let n1 = parts.b.cols();
        if let Some(d) = &parts.d {
            if d.rows() != n {
                return Err(Error::DimensionMismatch {
                    context: "D",
                    expected: (n, d.cols()),
                    found: d.shape(),
                });
            }
        }
        check_shape("Q", &parts.q, (n, n))?;
        check_shape("R", &parts.r, (n1, n1))?;
        check_shape("Gamma", &parts.gamma, (n, n))?;
        check_len("eta", &parts.eta, n)?;
        check_len("x0", &parts.x0, n)?;
        let finite = [&parts.a, &parts.b, &parts.q, &parts.r, &parts.gamma]
            .iter()
            .all(|m| m.is_finite())
            && parts.d.as_ref().is_none_or(|d| d.is_finite())
            && parts.eta.iter().chain(&parts.x0).all(|x| x.is_finite())
            && parts.rho.is_finite();
        if !finite {
            return Err(Error::NonFinite);
        }
        check_symmetric("Q", &parts.q)?;
        check_symmetric("R", &parts.r)?;
        if !(parts.rho > T::zero()) {
            return Err(Error::InvalidProblem(format!(
                "discount rate rho must be positive, got {}",
                parts.rho
            )));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &ProblemParts<T> {
        &self.parts
    }

    pub fn into_parts(self) -> ProblemParts<T> {
        self.parts
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.parts.a.rows()
    }

    /// Control dimension.
    pub fn n1(&self) -> usize {
        self.parts.b.cols()
    }

    /// Noise dimension, if `D` is present.
    pub fn n2(&self) -> Option<usize> {
        self.parts.d.as_ref().map(Matrix::cols)
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.parts.a
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.parts.b
    }

    pub fn d(&self) -> Option<&Matrix<T>> {
        self.parts.d.as_ref()
    }

    pub fn q(&self) -> &Matrix<T> {
        &self.parts.q
    }

    pub fn r(&self) -> &Matrix<T> {
        &self.parts.r
    }

    pub fn gamma(&self) -> &Matrix<T> {
        &self.parts.gamma
    }

    pub fn eta(&self) -> &[T] {
        &self.parts.eta
    }

    pub fn rho(&self) -> T {
        self.parts.rho
    }

    pub fn x0(&self) -> &[T] {
        &self.parts.x0
    }

    /// Same problem with a different coupling matrix.
    pub fn with_gamma(&self, gamma: Matrix<T>) -> Result<Self> {
        Self::new(ProblemParts {
            gamma,
            ..self.parts.clone()
        })
    }

    /// Same problem with a different noise loading.
    pub fn with_noise(&self, d: Matrix<T>) -> Result<Self> {
        Self::new(ProblemParts {
            d: Some(d),
            ..self.parts.clone()
        })
    }

    /// Same problem with a different initial mean `x̄(0)`.
    pub fn with_x0(&self, x0: Vec<T>) -> Result<Self> {
        Self::new(ProblemParts {
            x0,
            ..self.parts.clone()
        })
    }

    /// `[[A − (ρ/2)I, −M], [−Q, −Aᵀ + (ρ/2)I]]` with `M = B·R⁻¹·Bᵀ`.
    pub fn hamiltonian_a(&self) -> Result<Matrix<T>> {
        let m = control_weight(self.b(), self.r())?;
        let shifted = self.a().shift_diagonal(-self.rho() * T::half());
        Ok(Matrix::from_blocks(
            &shifted,
            &(-&m),
            &(-self.q()),
            &(-&shifted.transpose()),
        ))
    }
}

fn to_c64<T: Scalar>(z: &Complex<T>) -> Complex64 {
    Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())
}

pub(crate) fn resolve_tol<T: Scalar>(axis_tol: Option<T>, k: &Matrix<T>) -> T {
    axis_tol.unwrap_or_else(|| default_axis_tol(k))
}

/// Verdicts of the standing-assumption checks.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub stabilizability: PbhReport,
    pub r_min_eigenvalue: f64,
    pub r_positive_definite: bool,
    /// Eigenvalues of `H_A` within the axis tolerance; `None` when `H_A`
    /// could not be formed (indefinite `R`).
    pub h_a_axis_eigenvalues: Option<Vec<Complex64>>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.stabilizability.stabilizable
            && self.r_positive_definite
            && self
                .h_a_axis_eigenvalues
                .as_ref()
                .is_some_and(Vec::is_empty)
    }

    /// The first failed check as an error.
    pub fn to_error(&self) -> Option<Error> {
        if !self.r_positive_definite {
            return Some(Error::NonPositiveR {
                min_eigenvalue: self.r_min_eigenvalue,
            });
        }
        if !self.stabilizability.stabilizable {
            return Some(Error::StabilizabilityFailure {
                eigenvalue: self.stabilizability.critical_eigenvalue.unwrap_or_default(),
                min_singular: self.stabilizability.min_relative_singular,
            });
        }
        match &self.h_a_axis_eigenvalues {
            Some(eigs) if !eigs.is_empty() => Some(Error::ImaginaryAxisEigenvalue {
                eigenvalues: eigs.clone(),
            }),
            _ => None,
        }
    }
}

/// Checks stabilizability of `(A, B)`, `R ≻ 0`, and that `H_A` has no
/// eigenvalues on the imaginary axis.
pub fn validate<T: Scalar>(p: &ProblemData<T>, axis_tol: Option<T>) -> Result<ValidationReport> {
    let mut warnings = Vec::new();
    let pbh_tol = axis_tol.unwrap_or_else(|| default_axis_tol(p.a()));
    let stabilizability = pbh_stabilizability(p.a(), p.b(), pbh_tol)?;
    if let Some(w) = &stabilizability.warning {
        warnings.push(w.clone());
    }
    let r_min = min_symmetric_eigenvalue(p.r())?;
    let r_positive_definite = p.n1() == 0 || r_min > T::lit(R_DEFINITE_RTOL) * p.r().norm_fro();
    let h_a_axis_eigenvalues = if r_positive_definite {
        let h_a = p.hamiltonian_a()?;
        let spec = eigenvalues_with_tol(&h_a, resolve_tol(axis_tol, &h_a))?;
        Some(spec.axis_eigenvalues().iter().map(to_c64).collect())
    } else {
        None
    };
    Ok(ValidationReport {
        stabilizability,
        r_min_eigenvalue: r_min.to_f64_lossy(),
        r_positive_definite,
        h_a_axis_eigenvalues,
        warnings,
    })
}

/// `Q_Γ = ΓᵀQ + QΓ − ΓᵀQΓ` and `η_Γ = (I − Γᵀ)Qη`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaWeights<T> {
    pub q_gamma: Matrix<T>,
    pub eta_gamma: Vec<T>,
}

pub fn gamma_weights<T: Scalar>(
    q: &Matrix<T>,
    gamma: &Matrix<T>,
    eta: &[T],
) -> Result<GammaWeights<T>> {
    let n = q.require_square()?;
    check_shape("Gamma", gamma, (n, n))?;
    check_len("eta", eta, n)?;
    let gt_q = gamma.tr_matmul(q);
    let q_gamma = (&(&gt_q + &q.matmul(gamma)) - &gt_q.matmul(gamma)).symmetrize();
    let q_eta = q.matvec(eta);
    let gt_q_eta = gamma.transpose().matvec(&q_eta);
    let eta_gamma = q_eta.iter().zip(&gt_q_eta).map(|(&a, &b)| a - b).collect();
    Ok(GammaWeights { q_gamma, eta_gamma })
}

/// `𝒜 = A − M·Π − (ρ/2)I`.
pub fn shifted_closed_loop<T: Scalar>(
    p: &ProblemData<T>,
    m: &Matrix<T>,
    pi: &Matrix<T>,
) -> Matrix<T> {
    (p.a() - &m.matmul(pi)).shift_diagonal(-p.rho() * T::half())
}

/// `H = [[𝒜, −M], [Q_Γ, −𝒜ᵀ]]`.
pub fn build_hamiltonian<T: Scalar>(
    p: &ProblemData<T>,
    pi: &Matrix<T>,
    w: &GammaWeights<T>,
) -> Result<Matrix<T>> {
    let m = control_weight(p.b(), p.r())?;
    let a_cal = shifted_closed_loop(p, &m, pi);
    Ok(Matrix::from_blocks(
        &a_cal,
        &(-&m),
        &w.q_gamma,
        &(-&a_cal.transpose()),
    ))
}

/// Decaying solution of the SCE system.
#[derive(Debug, Clone)]
pub struct SceSolution<T> {
    pub pi: StabilizingRiccatiSolution<T>,
    pub weights: GammaWeights<T>,
    /// `B·R⁻¹·Bᵀ`.
    pub m: Matrix<T>,
    /// `𝒜`.
    pub a_cal: Matrix<T>,
    pub h: Matrix<T>,
    pub h_spectrum: Spectrum<T>,
    pub xplus: StabilizingRiccatiSolution<T>,
    /// `𝒜_C = 𝒜 − M·X₊`.
    pub a_c: Matrix<T>,
    /// `A_cl = 𝒜_C + (ρ/2)I`, the generator of `x̄`.
    pub a_cl: Matrix<T>,
    /// `c = (𝒜_Cᵀ − (ρ/2)I)⁻¹·η_Γ`, so that `s(t) = X₊·x̄(t) + c`.
    pub c: Vec<T>,
    pub s0: Vec<T>,
    pub decomposition: DichotomyDecomposition<T>,
    pub bvp: BvpSolution<T>,
    pub rho: T,
    pub warnings: Vec<String>,
}

/// Time samples `(t, x̄(t), s(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample<T> {
    pub t: T,
    pub xbar: Vec<T>,
    pub s: Vec<T>,
}

pub(crate) fn split_samples<T: Scalar>(
    t_grid: &[T],
    states: Vec<Vec<T>>,
    n: usize,
) -> Vec<TrajectorySample<T>> {
    t_grid
        .iter()
        .zip(states)
        .map(|(&t, mut z)| {
            let s = z.split_off(n);
            TrajectorySample { t, xbar: z, s }
        })
        .collect()
}

impl<T: Scalar> SceSolution<T> {
    pub fn dim(&self) -> usize {
        self.a_c.rows()
    }

    /// `(x̄(t), s(t))` in the original, undiscounted variables.
    pub fn trajectory(&self, t_grid: &[T]) -> Result<Vec<TrajectorySample<T>>> {
        let states = self.bvp.evaluate_unscaled(&self.decomposition, t_grid)?;
        Ok(split_samples(t_grid, states, self.dim()))
    }

    /// `max ‖s(t) − X₊·x̄(t) − c‖` over the samples.
    pub fn manifold_gap(&self, samples: &[TrajectorySample<T>]) -> T {
        samples
            .iter()
            .map(|smp| {
                let xs = self.xplus.x.matvec(&smp.xbar);
                (0..self.dim())
                    .map(|j| (smp.s[j] - xs[j] - self.c[j]).abs())
                    .fold(T::zero(), T::max)
            })
            .fold(T::zero(), T::max)
    }

    /// The forcing amplitude `(0, η_Γ)` of the scaled system.
    pub fn forcing(&self) -> Vec<T> {
        let mut psi = vec![T::zero(); self.dim()];
        psi.extend_from_slice(&self.weights.eta_gamma);
        psi
    }
}

/// Solves the SCE system for the unique `s₀` giving a solution in the
/// `e^{ρt/2}`-subexponential class.
pub fn solve_sce<T: Scalar>(p: &ProblemData<T>, axis_tol: Option<T>) -> Result<SceSolution<T>> {
    let report = validate(p, axis_tol)?;
    if let Some(err) = report.to_error() {
        return Err(err);
    }
    let h_a = p.hamiltonian_a()?;
    let pi = solve_discounted_are(
        p.a(),
        p.b(),
        p.q(),
        p.r(),
        p.rho(),
        resolve_tol(axis_tol, &h_a),
    )?;
    let weights = gamma_weights(p.q(), p.gamma(), p.eta())?;
    let m = control_weight(p.b(), p.r())?;
    let a_cal = shifted_closed_loop(p, &m, &pi.x);
    let h = Matrix::from_blocks(&a_cal, &(-&m), &weights.q_gamma, &(-&a_cal.transpose()));
    let h_tol = resolve_tol(axis_tol, &h);
    let h_spectrum = eigenvalues_with_tol(&h, h_tol)?;
    if let Some(err) = h_spectrum.axis_error() {
        return Err(err);
    }

    // X𝒜 + 𝒜ᵀX − XMX − Q_Γ = 0, whose Hamiltonian is exactly H.
    let care = CareProblem::new(a_cal.clone(), m.clone(), -&weights.q_gamma)?;
    let xplus = solve_care_stabilizing(&care, h_tol)?;
    let decomposition = decompose_from_riccati(&a_cal, &m, &weights.q_gamma, &xplus.x)?;
    let n = p.n();
    let mut psi0 = vec![T::zero(); n];
    psi0.extend_from_slice(&weights.eta_gamma);
    let bvp = solve_decaying(&decomposition, p.x0(), &psi0, p.rho())?;

    let a_c = decomposition.f11.clone();
    let half_rho = p.rho() * T::half();
    let c = bvp.y2_offset.clone();
    let c_direct = solve_vec(
        &a_c.transpose().shift_diagonal(-half_rho),
        &weights.eta_gamma,
    )?;
    let scale = T::one() + c_direct.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
    let c_gap = c
        .iter()
        .zip(&c_direct)
        .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()));
    if !(c_gap <= T::lit(SELF_CHECK_RTOL) * scale) {
        return Err(Error::ConsistencyCheck {
            what: "offset c against (𝒜_Cᵀ − ρ/2·I)⁻¹η_Γ",
            gap: c_gap.to_f64_lossy(),
        });
    }
    let s0 = bvp.z2_0.clone();

    Ok(SceSolution {
        a_cl: a_c.shift_diagonal(half_rho),
        a_c,
        c,
        s0,
        pi,
        weights,
        m,
        a_cal,
        h,
        h_spectrum,
        xplus,
        decomposition,
        bvp,
        rho: p.rho(),
        warnings: report.warnings,
    })
}

/// Decentralized feedback `uᵢ = K_x·xᵢ + L·s(t)` with `K_x = −R⁻¹BᵀΠ` and
/// `L = −R⁻¹Bᵀ`, together with the mean-field and costate paths.
#[derive(Debug, Clone)]
pub struct StrategySpec<T> {
    pub k_x: Matrix<T>,
    pub l: Matrix<T>,
    decomposition: DichotomyDecomposition<T>,
    bvp: BvpSolution<T>,
}

impl<T: Scalar> StrategySpec<T> {
    pub(crate) fn new(
        p: &ProblemData<T>,
        pi: &Matrix<T>,
        decomposition: DichotomyDecomposition<T>,
        bvp: BvpSolution<T>,
    ) -> Result<Self> {
        let l = -&solve_linear(p.r(), &p.b().transpose())?;
        Ok(Self {
            k_x: l.matmul(pi),
            l,
            decomposition,
            bvp,
        })
    }

    pub fn dim(&self) -> usize {
        self.decomposition.dim()
    }

    /// Mean field and costate on the grid.
    pub fn paths(&self, t_grid: &[T]) -> Result<Vec<TrajectorySample<T>>> {
        let states = self.bvp.evaluate_unscaled(&self.decomposition, t_grid)?;
        Ok(split_samples(t_grid, states, self.dim()))
    }

    /// `K_x·x + L·s`.
    pub fn control(&self, x: &[T], s: &[T]) -> Vec<T> {
        self.k_x
            .matvec(x)
            .into_iter()
            .zip(self.l.matvec(s))
            .map(|(a, b)| a + b)
            .collect()
    }
}

pub fn decentralized_strategy<T: Scalar>(
    sol: &SceSolution<T>,
    p: &ProblemData<T>,
) -> Result<StrategySpec<T>> {
    StrategySpec::new(p, &sol.pi.x, sol.decomposition.clone(), sol.bvp.clone())
}

/// Largest central-difference residual of the SCE system along the computed
/// trajectory on a uniform grid.
pub fn sce_residual<T: Scalar>(sol: &SceSolution<T>, t_grid: &[T]) -> Result<T> {
    if t_grid.len() < 5 {
        return Ok(T::zero());
    }
    let h = t_grid[1] - t_grid[0];
    let states = sol.bvp.evaluate_unscaled(&sol.decomposition, t_grid)?;
    Ok(central_difference_residual(
        &sol.h,
        &sol.forcing(),
        sol.rho,
        h,
        &states,
    ))
}
