//! Decaying solutions of `dz/dt = K·z + ψ₀·e^{−ρt/2}` on `[0, ∞)` when `K`
//! admits a block-triangularizing transform with stable leading block and
//! antistable trailing block.
//!
//! With `K = U·[[F₁₁, F₁₂], [0, F₂₂]]·U⁻¹` and `y = U⁻¹·z`, the trailing
//! component must be `y₂(t) = c·e^{−ρt/2}`; every other choice of `z₂(0)`
//! excites the growing modes of `F₂₂`. The leading component then solves a
//! stable linear system with exponential forcing, which is propagated exactly
//! through an augmented matrix exponential.

use crate::error::{Error, Result};
use crate::linalg::{
    condition_number, eigenvalues, mat_exp, real_schur_ordered, solve_vec, Matrix,
};
use crate::riccati::GRAPH_CONDITION_MAX;
use crate::scalar::Scalar;

/// `‖V·U − I‖_F` must stay below this times `2n`.
const INVERSE_RTOL: f64 = 1e-8;
/// `‖V·K·U − F‖_F` must stay below this times `‖K‖_F`.
const TRIANGULAR_RTOL: f64 = 1e-7;
const UNIFORM_GRID_RTOL: f64 = 1e-12;

/// Block-triangularizing transform `V·K·U = [[F₁₁, F₁₂], [0, F₂₂]]`.
#[derive(Debug, Clone)]
pub struct DichotomyDecomposition<T> {
    pub u: Matrix<T>,
    pub v: Matrix<T>,
    pub f11: Matrix<T>,
    pub f12: Matrix<T>,
    pub f22: Matrix<T>,
    pub u11_condition: T,
}

impl<T: Scalar> DichotomyDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.f11.rows()
    }

    pub fn u11(&self) -> Matrix<T> {
        let n = self.dim();
        self.u.block(0, 0, n, n)
    }

    pub fn u12(&self) -> Matrix<T> {
        let n = self.dim();
        self.u.block(0, n, n, n)
    }

    pub fn u21(&self) -> Matrix<T> {
        let n = self.dim();
        self.u.block(n, 0, n, n)
    }

    pub fn u22(&self) -> Matrix<T> {
        let n = self.dim();
        self.u.block(n, n, n, n)
    }

    pub fn v22(&self) -> Matrix<T> {
        let n = self.dim();
        self.v.block(n, n, n, n)
    }

    /// `[[F₁₁, F₁₂], [0, F₂₂]]`.
    pub fn triangular_form(&self) -> Matrix<T> {
        let n = self.dim();
        Matrix::from_blocks(&self.f11, &self.f12, &Matrix::zeros(n, n), &self.f22)
    }

    /// Checks the transform against `k`: `V = U⁻¹`, the similarity is block
    /// triangular, `F₁₁` and `−F₂₂` are stable.
    pub fn verify(&self, k: &Matrix<T>) -> Result<()> {
        let n = self.dim();
        let inv_gap = (&self.v.matmul(&self.u) - &Matrix::identity(2 * n)).norm_fro();
        if !(inv_gap <= T::lit(INVERSE_RTOL * (2 * n) as f64)) {
            return Err(Error::ConsistencyCheck {
                what: "V·U = I",
                gap: inv_gap.to_f64_lossy(),
            });
        }
        let tri_gap = (&self.v.matmul(k).matmul(&self.u) - &self.triangular_form()).norm_fro();
        if !(tri_gap <= T::lit(TRIANGULAR_RTOL) * k.norm_fro().max(T::one())) {
            return Err(Error::ConsistencyCheck {
                what: "V·K·U block triangular",
                gap: tri_gap.to_f64_lossy(),
            });
        }
        let a11 = eigenvalues(&self.f11)?.abscissa();
        if !(a11 < T::zero()) {
            return Err(Error::StabilityCheckFailure {
                what: "leading block F11",
                abscissa: a11.to_f64_lossy(),
            });
        }
        let a22 = eigenvalues(&(-&self.f22))?.abscissa();
        if !(a22 < T::zero()) {
            return Err(Error::StabilityCheckFailure {
                what: "negated trailing block −F22",
                abscissa: a22.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

fn require_dim<T: Scalar>(context: &'static str, m: &Matrix<T>, n: usize) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context,
            expected: (n, n),
            found: m.shape(),
        });
    }
    Ok(())
}

/// Transform `U = [[I, 0], [X₊, I]]` for `K = [[𝒜, −M], [Q_Γ, −𝒜ᵀ]]`, where
/// `X₊` is the stabilizing solution of `X·𝒜 + 𝒜ᵀ·X − X·M·X − Q_Γ = 0`.
pub fn decompose_from_riccati<T: Scalar>(
    a_cal: &Matrix<T>,
    m: &Matrix<T>,
    q_gamma: &Matrix<T>,
    xplus: &Matrix<T>,
) -> Result<DichotomyDecomposition<T>> {
    let n = a_cal.require_square()?;
    require_dim("dichotomy weight M", m, n)?;
    require_dim("dichotomy weight Q_Γ", q_gamma, n)?;
    require_dim("Riccati solution X₊", xplus, n)?;
    let eye = Matrix::identity(n);
    let zero = Matrix::zeros(n, n);
    let a_c = a_cal - &m.matmul(xplus);
    let decomposition = DichotomyDecomposition {
        u: Matrix::from_blocks(&eye, &zero, xplus, &eye),
        v: Matrix::from_blocks(&eye, &zero, &(-xplus), &eye),
        f12: -m,
        f22: -&a_c.transpose(),
        f11: a_c,
        u11_condition: T::one(),
    };
    let k = Matrix::from_blocks(a_cal, &(-m), q_gamma, &(-&a_cal.transpose()));
    decomposition.verify(&k)?;
    Ok(decomposition)
}

/// Orthogonal transform from the stable-first real Schur form of `k`.
pub fn decompose_from_schur<T: Scalar>(
    k: &Matrix<T>,
    axis_tol: T,
) -> Result<DichotomyDecomposition<T>> {
    let dim = k.require_square()?;
    if dim % 2 != 0 {
        return Err(Error::InvalidProblem(format!(
            "dichotomy matrix must have even dimension, got {dim}"
        )));
    }
    let n = dim / 2;
    let schur = real_schur_ordered(k, axis_tol)?;
    if schur.k_stable != n {
        return Err(Error::DichotomySplitFailure {
            stable: schur.k_stable,
            expected: n,
        });
    }
    let u11 = schur.w.block(0, 0, n, n);
    let cond = condition_number(&u11);
    if !(cond <= T::lit(GRAPH_CONDITION_MAX)) {
        return Err(Error::GraphSubspaceFailure {
            condition: cond.to_f64_lossy(),
        });
    }
    let decomposition = DichotomyDecomposition {
        v: schur.w.transpose(),
        f11: schur.t.block(0, 0, n, n),
        f12: schur.t.block(0, n, n, n),
        f22: schur.t.block(n, n, n, n),
        u: schur.w,
        u11_condition: cond,
    };
    decomposition.verify(k)?;
    Ok(decomposition)
}

/// The unique decaying solution for given `z₁(0)` and forcing amplitude.
#[derive(Debug, Clone)]
pub struct BvpSolution<T> {
    pub z1_0: Vec<T>,
    pub z2_0: Vec<T>,
    pub y1_0: Vec<T>,
    /// `c` in `y₂(t) = c·e^{−ρt/2}`.
    pub y2_offset: Vec<T>,
    /// `[[F₁₁, f], [0, −ρ/2]]`, `f = F₁₂·c + (V·ψ₀)_upper`; propagates `(y₁, e^{−ρt/2})`.
    pub y1_generator: Matrix<T>,
    /// `ρ/2`.
    pub decay_rate: T,
}

/// Computes `z₂(0)` so that the solution from `(z1_0, z₂(0))` stays in the
/// decaying class.
pub fn solve_decaying<T: Scalar>(
    d: &DichotomyDecomposition<T>,
    z1_0: &[T],
    psi0: &[T],
    rho: T,
) -> Result<BvpSolution<T>> {
    let n = d.dim();
    if z1_0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "initial state z₁(0)",
            expected: (n, 1),
            found: (z1_0.len(), 1),
        });
    }
    if psi0.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            context: "forcing ψ₀",
            expected: (2 * n, 1),
            found: (psi0.len(), 1),
        });
    }
    if !(rho > T::zero()) {
        return Err(Error::InvalidProblem(format!(
            "discount rate must be positive, got {}",
            rho
        )));
    }
    let half_rho = rho * T::half();
    let vpsi = d.v.matvec(psi0);
    let (vpsi_upper, vpsi_lower) = vpsi.split_at(n);

    // y₂(0) = −∫₀^∞ e^{−F₂₂τ}·e^{−ρτ/2}·(Vψ₀)_lower dτ
    let c: Vec<T> = solve_vec(&d.f22.shift_diagonal(half_rho), vpsi_lower)?
        .into_iter()
        .map(|x| -x)
        .collect();

    let u12c = d.u12().matvec(&c);
    let rhs: Vec<T> = z1_0.iter().zip(&u12c).map(|(&a, &b)| a - b).collect();
    let y1_0 = solve_vec(&d.u11(), &rhs)?;

    let z2_0: Vec<T> = d
        .u21()
        .matvec(&y1_0)
        .into_iter()
        .zip(d.u22().matvec(&c))
        .map(|(a, b)| a + b)
        .collect();

    let f: Vec<T> = d
        .f12
        .matvec(&c)
        .into_iter()
        .zip(vpsi_upper)
        .map(|(a, &b)| a + b)
        .collect();
    let mut generator = Matrix::zeros(n + 1, n + 1);
    generator.set_block(0, 0, &d.f11);
    generator.set_block(0, n, &Matrix::column_vector(&f));
    generator[(n, n)] = -half_rho;

    Ok(BvpSolution {
        z1_0: z1_0.to_vec(),
        z2_0,
        y1_0,
        y2_offset: c,
        y1_generator: generator,
        decay_rate: half_rho,
    })
}

fn is_uniform<T: Scalar>(t_grid: &[T]) -> Option<T> {
    if t_grid.len() < 3 {
        return None;
    }
    let h = t_grid[1] - t_grid[0];
    if !(h > T::zero()) {
        return None;
    }
    let tol = T::lit(UNIFORM_GRID_RTOL) * (T::one() + t_grid[t_grid.len() - 1].abs());
    t_grid
        .iter()
        .enumerate()
        .all(|(k, &t)| (t - (t_grid[0] + T::lit(k as f64) * h)).abs() <= tol)
        .then_some(h)
}

fn check_grid<T: Scalar>(t_grid: &[T]) -> Result<()> {
    if t_grid.iter().any(|t| !t.is_finite() || *t < T::zero()) {
        return Err(Error::InvalidConfig(
            "time grid must be finite and nonnegative".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Samples `e^{gen·t}·w0` on `t_grid`, reusing one step exponential when the
/// grid is uniform.
fn propagate<T: Scalar>(generator: &Matrix<T>, w0: &[T], t_grid: &[T]) -> Result<Vec<Vec<T>>> {
    if let Some(h) = is_uniform(t_grid) {
        let step = mat_exp(&generator.scale(h))?;
        let mut w = if t_grid[0] == T::zero() {
            w0.to_vec()
        } else {
            mat_exp(&generator.scale(t_grid[0]))?.matvec(w0)
        };
        let mut out = Vec::with_capacity(t_grid.len());
        out.push(w.clone());
        for _ in 1..t_grid.len() {
            w = step.matvec(&w);
            out.push(w.clone());
        }
        return Ok(out);
    }
    t_grid
        .iter()
        .map(|&t| {
            if t == T::zero() {
                Ok(w0.to_vec())
            } else {
                Ok(mat_exp(&generator.scale(t))?.matvec(w0))
            }
        })
        .collect()
}

impl<T: Scalar> BvpSolution<T> {
    fn augmented_initial(&self) -> Vec<T> {
        let mut w = self.y1_0.clone();
        w.push(T::one());
        w
    }

    fn assemble(&self, d: &DichotomyDecomposition<T>, y1: &[T], y2: &[T]) -> Vec<T> {
        let mut y = y1.to_vec();
        y.extend_from_slice(y2);
        d.u.matvec(&y)
    }

    /// `z(t)` on the grid; `t = 0` returns `(z1_0, z2_0)` verbatim.
    pub fn evaluate(&self, d: &DichotomyDecomposition<T>, t_grid: &[T]) -> Result<Vec<Vec<T>>> {
        check_grid(t_grid)?;
        let n = d.dim();
        let states = propagate(&self.y1_generator, &self.augmented_initial(), t_grid)?;
        Ok(t_grid
            .iter()
            .zip(states)
            .map(|(&t, w)| {
                if t == T::zero() {
                    return [self.z1_0.as_slice(), self.z2_0.as_slice()].concat();
                }
                let y2: Vec<T> = self.y2_offset.iter().map(|&c| c * w[n]).collect();
                self.assemble(d, &w[..n], &y2)
            })
            .collect())
    }

    /// `e^{ρt/2}·z(t)` on the grid, propagated with the generator shifted by
    /// `ρ/2` so that no growing factor is applied to a decaying one.
    pub fn evaluate_unscaled(
        &self,
        d: &DichotomyDecomposition<T>,
        t_grid: &[T],
    ) -> Result<Vec<Vec<T>>> {
        check_grid(t_grid)?;
        let n = d.dim();
        let shifted = self.y1_generator.shift_diagonal(self.decay_rate);
        let states = propagate(&shifted, &self.augmented_initial(), t_grid)?;
        Ok(t_grid
            .iter()
            .zip(states)
            .map(|(&t, w)| {
                if t == T::zero() {
                    return [self.z1_0.as_slice(), self.z2_0.as_slice()].concat();
                }
                self.assemble(d, &w[..n], &self.y2_offset)
            })
            .collect())
    }
}

/// `(t, z(t))` samples of the decaying solution.
pub fn evaluate_trajectory<T: Scalar>(
    sol: &BvpSolution<T>,
    d: &DichotomyDecomposition<T>,
    t_grid: &[T],
) -> Result<Vec<(T, Vec<T>)>> {
    Ok(t_grid
        .iter()
        .copied()
        .zip(sol.evaluate(d, t_grid)?)
        .collect())
}

/// Largest residual of `dw/dt = (K + (ρ/2)I)·w + ψ₀` over the interior of a
/// uniform grid with spacing `h`, with the derivative taken from the
/// fourth-order five-point central stencil.
pub fn central_difference_residual<T: Scalar>(
    k: &Matrix<T>,
    psi0: &[T],
    rho: T,
    h: T,
    states: &[Vec<T>],
) -> T {
    let drift = k.shift_diagonal(rho * T::half());
    let denom = T::lit(12.0) * h;
    let eight = T::lit(8.0);
    states
        .windows(5)
        .map(|w| {
            let rhs = drift.matvec(&w[2]);
            let r: Vec<T> = (0..rhs.len())
                .map(|j| {
                    let deriv = (w[0][j] - eight * w[1][j] + eight * w[3][j] - w[4][j]) / denom;
                    deriv - rhs[j] - psi0[j]
                })
                .collect();
            crate::linalg::norm2(&r)
        })
        .fold(T::zero(), T::max)
}
