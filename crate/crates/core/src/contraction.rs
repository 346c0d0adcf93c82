//! Fixed-point contraction bound
//! `β = ∫₀^∞‖e^{𝒜s}·M‖_F ds · ∫₀^∞‖e^{𝒜ᵀτ}·Q_Γ‖_F dτ`.
//!
//! Each integral is truncated at a horizon where a Lyapunov certificate
//! bounds the tail below the configured tolerance, then evaluated by
//! composite Simpson with panel doubling and a Richardson correction.

use crate::error::{Error, Result};
use crate::linalg::{mat_exp, singular_values, solve_lyapunov, spectral_abscissa, Matrix};
use crate::riccati::{control_weight, solve_discounted_are};
use crate::scalar::Scalar;
use crate::social::{gamma_weights, resolve_tol, shifted_closed_loop, ProblemData};

const MAX_DOUBLINGS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Target for the certified bound on each truncated tail.
    pub truncation_tol: f64,
    /// Initial Simpson panel count; doubled until convergence.
    pub panels: usize,
    /// Relative change between successive doublings that stops refinement.
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            truncation_tol: 1e-10,
            panels: 2048,
            rel_tol: 1e-6,
        }
    }
}

impl QuadratureConfig {
    fn check(&self) -> Result<()> {
        if !(self.truncation_tol > 0.0 && self.rel_tol > 0.0 && self.panels >= 2) {
            return Err(Error::InvalidConfig(format!(
                "quadrature needs positive tolerances and at least 2 panels, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// One truncated integral `∫₀^∞‖e^{G·t}·W‖_F dt`.
#[derive(Debug, Clone, Copy)]
pub struct NormIntegral<T> {
    pub value: T,
    pub horizon: T,
    /// Certified bound on the discarded tail `∫_horizon^∞`.
    pub tail_bound: T,
    /// Panels of the finest Simpson rule used.
    pub panels: usize,
    /// Relative change between the last two Simpson estimates.
    pub last_rel_change: T,
}

#[derive(Debug, Clone)]
pub struct ContractionReport<T> {
    pub beta: T,
    pub i1: NormIntegral<T>,
    pub i2: NormIntegral<T>,
    /// Spectral abscissa of `𝒜`.
    pub abscissa: T,
    /// `sup_t ‖e^{(𝒜 − μI)t}‖₂` bound from the Lyapunov certificate.
    pub kappa: T,
}

impl<T: Scalar> ContractionReport<T> {
    pub fn is_contraction(&self) -> bool {
        self.beta < T::one()
    }

    pub fn verdict(&self) -> &'static str {
        if self.is_contraction() {
            "contraction"
        } else {
            "not a contraction"
        }
    }
}

/// Caveat attached to every verdict.
pub const BOUND_CAVEAT: &str =
    "beta is a sufficient condition only; the estimate may not be tight, so beta >= 1 does not rule out a unique solution";

/// `(κ, μ)` with `‖e^{G·t}‖₂ ≤ κ·e^{μt}` for stable `g`, `μ = α/2`.
fn growth_certificate<T: Scalar>(g: &Matrix<T>, abscissa: T) -> Result<(T, T)> {
    let mu = abscissa * T::half();
    let shifted = g.shift_diagonal(-mu);
    let n = g.rows();
    let p = solve_lyapunov(&shifted, &Matrix::identity(n))?;
    let sv = singular_values(&p)?;
    let (hi, lo) = (sv[0], sv[n - 1]);
    if !(lo > T::zero()) {
        return Err(Error::NoConvergence {
            context: "Lyapunov growth certificate",
        });
    }
    Ok(((hi / lo).sqrt(), mu))
}

fn simpson<T: Scalar>(g: &Matrix<T>, w: &Matrix<T>, horizon: T, panels: usize) -> Result<T> {
    let h = horizon / T::lit(panels as f64);
    let step = mat_exp(&g.scale(h))?;
    let mut x = w.clone();
    let mut acc = x.norm_fro();
    for k in 1..=panels {
        x = step.matmul(&x);
        let weight = if k == panels {
            T::one()
        } else if k % 2 == 1 {
            T::lit(4.0)
        } else {
            T::two()
        };
        acc += weight * x.norm_fro();
    }
    Ok(acc * h / T::lit(3.0))
}

fn norm_integral<T: Scalar>(
    g: &Matrix<T>,
    w: &Matrix<T>,
    kappa: T,
    mu: T,
    cfg: &QuadratureConfig,
) -> Result<NormIntegral<T>> {
    let w_norm = w.norm_fro();
    if w_norm == T::zero() {
        return Ok(NormIntegral {
            value: T::zero(),
            horizon: T::zero(),
            tail_bound: T::zero(),
            panels: 0,
            last_rel_change: T::zero(),
        });
    }
    // ‖e^{Gt}W‖_F ≤ ‖e^{Gt}‖₂‖W‖_F ≤ κ‖W‖_F e^{μt}, so the tail beyond T is
    // at most κ‖W‖_F e^{μT}/|μ|.
    let tol = T::lit(cfg.truncation_tol);
    let coeff = kappa * w_norm / mu.abs();
    let horizon = if coeff <= tol {
        T::zero()
    } else {
        ((tol / coeff).ln() / mu).ceil()
    };
    let tail_bound = coeff * (mu * horizon).exp();
    if horizon == T::zero() {
        return Ok(NormIntegral {
            value: T::zero(),
            horizon,
            tail_bound,
            panels: 0,
            last_rel_change: T::zero(),
        });
    }
    let mut panels = cfg.panels + cfg.panels % 2;
    let mut prev = simpson(g, w, horizon, panels)?;
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let next = simpson(g, w, horizon, panels)?;
        let change = (next - prev).abs() / next.abs().max(T::min_positive_value());
        if change < T::lit(cfg.rel_tol) {
            return Ok(NormIntegral {
                value: next + (next - prev) / T::lit(15.0),
                horizon,
                tail_bound,
                panels,
                last_rel_change: change,
            });
        }
        prev = next;
    }
    Err(Error::NoConvergence {
        context: "Simpson panel doubling",
    })
}

/// `β = I₁·I₂` for `𝒜 = A − M·Π − (ρ/2)I`.
pub fn contraction_bound<T: Scalar>(
    p: &ProblemData<T>,
    pi: &Matrix<T>,
    cfg: &QuadratureConfig,
) -> Result<ContractionReport<T>> {
    cfg.check()?;
    let m = control_weight(p.b(), p.r())?;
    let a_cal = shifted_closed_loop(p, &m, pi);
    let abscissa = spectral_abscissa(&a_cal)?;
    if !(abscissa < T::zero()) {
        return Err(Error::StabilityCheckFailure {
            what: "contraction generator 𝒜",
            abscissa: abscissa.to_f64_lossy(),
        });
    }
    let weights = gamma_weights(p.q(), p.gamma(), p.eta())?;
    let (kappa, mu) = growth_certificate(&a_cal, abscissa)?;
    let a_t = a_cal.transpose();
    let (i1, i2) = rayon::join(
        || norm_integral(&a_cal, &m, kappa, mu, cfg),
        || norm_integral(&a_t, &weights.q_gamma, kappa, mu, cfg),
    );
    let (i1, i2) = (i1?, i2?);
    Ok(ContractionReport {
        beta: i1.value * i2.value,
        i1,
        i2,
        abscissa,
        kappa,
    })
}

/// Solves for `Π` first, then evaluates the bound.
pub fn contraction_bound_for<T: Scalar>(
    p: &ProblemData<T>,
    axis_tol: Option<T>,
    cfg: &QuadratureConfig,
) -> Result<ContractionReport<T>> {
    let h_a = p.hamiltonian_a()?;
    let pi = solve_discounted_are(
        p.a(),
        p.b(),
        p.q(),
        p.r(),
        p.rho(),
        resolve_tol(axis_tol, &h_a),
    )?;
    contraction_bound(p, &pi.x, cfg)
}
