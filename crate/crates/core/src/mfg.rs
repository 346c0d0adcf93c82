//! Mean-field game pipeline. The coefficient matrix
//! `M_mfg = [[𝒜, −M], [QΓ, −𝒜ᵀ]]` is not Hamiltonian, so the dichotomy
//! transform comes from the ordered real Schur form rather than a Riccati
//! solution.

use crate::bvp::{
    central_difference_residual, decompose_from_schur, solve_decaying, BvpSolution,
    DichotomyDecomposition,
};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_with_tol, solve_linear, solve_vec, Lu, Matrix, Spectrum};
use crate::riccati::{control_weight, solve_discounted_are, StabilizingRiccatiSolution};
use crate::scalar::Scalar;
use crate::social::{
    resolve_tol, shifted_closed_loop, split_samples, validate, ProblemData, StrategySpec,
    TrajectorySample,
};

const SELF_CHECK_RTOL: f64 = 1e-9;

/// `[[𝒜, −M], [Q·Γ, −𝒜ᵀ]]` with `𝒜 = A − M·Π − (ρ/2)I`, `M = B·R⁻¹·Bᵀ`.
pub fn build_mfg_matrix<T: Scalar>(p: &ProblemData<T>, pi: &Matrix<T>) -> Result<Matrix<T>> {
    let m = control_weight(p.b(), p.r())?;
    let a_cal = shifted_closed_loop(p, &m, pi);
    Ok(Matrix::from_blocks(
        &a_cal,
        &(-&m),
        &p.q().matmul(p.gamma()),
        &(-&a_cal.transpose()),
    ))
}

#[derive(Debug, Clone)]
pub struct MfgSolution<T> {
    pub pi: StabilizingRiccatiSolution<T>,
    pub m_mfg: Matrix<T>,
    pub spectrum: Spectrum<T>,
    pub decomposition: DichotomyDecomposition<T>,
    pub bvp: BvpSolution<T>,
    pub s0: Vec<T>,
    /// `det(U₁₁)` of the Schur basis actually used; basis dependent.
    pub det_u11: T,
    /// Largest entry gap between `s0` and the closed-form expression in the
    /// `U`, `V` blocks.
    pub closed_form_gap: T,
    pub rho: T,
    pub warnings: Vec<String>,
}

impl<T: Scalar> MfgSolution<T> {
    pub fn dim(&self) -> usize {
        self.decomposition.dim()
    }

    /// `(x̄(t), s(t))` in the original variables.
    pub fn trajectory(&self, t_grid: &[T]) -> Result<Vec<TrajectorySample<T>>> {
        let states = self.bvp.evaluate_unscaled(&self.decomposition, t_grid)?;
        Ok(split_samples(t_grid, states, self.dim()))
    }

    /// Largest central-difference residual of the game ODE system on a
    /// uniform grid.
    pub fn residual(&self, t_grid: &[T], q_eta: &[T]) -> Result<T> {
        if t_grid.len() < 5 {
            return Ok(T::zero());
        }
        let states = self.bvp.evaluate_unscaled(&self.decomposition, t_grid)?;
        let mut psi0 = vec![T::zero(); self.dim()];
        psi0.extend_from_slice(q_eta);
        Ok(central_difference_residual(
            &self.m_mfg,
            &psi0,
            self.rho,
            t_grid[1] - t_grid[0],
            &states,
        ))
    }

    /// Decentralized feedback for the game.
    pub fn strategy(&self, p: &ProblemData<T>) -> Result<StrategySpec<T>> {
        StrategySpec::new(p, &self.pi.x, self.decomposition.clone(), self.bvp.clone())
    }
}

/// `s₀ = U₂₁U₁₁⁻¹x₀ + (U₂₁U₁₁⁻¹U₁₂ − U₂₂)·(F₂₂ + (ρ/2)I)⁻¹·V₂₂·Qη`.
pub fn closed_form_s0<T: Scalar>(
    d: &DichotomyDecomposition<T>,
    x0: &[T],
    q_eta: &[T],
    rho: T,
) -> Result<Vec<T>> {
    let u11 = d.u11();
    let g = solve_linear(&u11.transpose(), &d.u21().transpose())?.transpose();
    let integral = solve_vec(
        &d.f22.shift_diagonal(rho * T::half()),
        &d.v22().matvec(q_eta),
    )?;
    let coeff = &g.matmul(&d.u12()) - &d.u22();
    Ok(g.matvec(x0)
        .into_iter()
        .zip(coeff.matvec(&integral))
        .map(|(a, b)| a + b)
        .collect())
}

pub fn solve_mfg<T: Scalar>(p: &ProblemData<T>, axis_tol: Option<T>) -> Result<MfgSolution<T>> {
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
    let m_mfg = build_mfg_matrix(p, &pi.x)?;
    let tol = resolve_tol(axis_tol, &m_mfg);
    let spectrum = eigenvalues_with_tol(&m_mfg, tol)?;
    if let Some(err) = spectrum.axis_error() {
        return Err(err);
    }
    let decomposition = decompose_from_schur(&m_mfg, tol)?;

    let n = p.n();
    let q_eta = p.q().matvec(p.eta());
    let mut psi0 = vec![T::zero(); n];
    psi0.extend_from_slice(&q_eta);
    let bvp = solve_decaying(&decomposition, p.x0(), &psi0, p.rho())?;
    let s0 = bvp.z2_0.clone();

    let closed = closed_form_s0(&decomposition, p.x0(), &q_eta, p.rho())?;
    let scale = s0.iter().fold(T::one(), |acc, x| acc.max(x.abs()));
    let closed_form_gap = s0
        .iter()
        .zip(&closed)
        .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()));
    if !(closed_form_gap <= T::lit(SELF_CHECK_RTOL) * scale) {
        return Err(Error::ConsistencyCheck {
            what: "s0 against the closed-form U-block expression",
            gap: closed_form_gap.to_f64_lossy(),
        });
    }
    let det_u11 = Lu::new(&decomposition.u11())?.determinant();

    Ok(MfgSolution {
        pi,
        m_mfg,
        spectrum,
        decomposition,
        bvp,
        s0,
        det_u11,
        closed_form_gap,
        rho: p.rho(),
        warnings: report.warnings,
    })
}
