//! Monte Carlo simulation of `N` agents under the decentralized feedback.
//!
//! Each replication integrates the coupled SDEs by Euler–Maruyama and
//! accumulates the discounted costs by left Riemann sums. Replication `r`
//! draws from ChaCha20 stream `r` of the master seed, so results do not
//! depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::scalar::Scalar;
use crate::social::{ProblemData, StrategySpec};

/// Law of the i.i.d. initial states `xᵢ(0) = mean + L·ξ`, `ξ ~ N(0, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution<T> {
    pub mean: Vec<T>,
    /// Lower-triangular factor `L` with `L·Lᵀ` the covariance.
    pub factor: Matrix<T>,
}

impl<T: Scalar> InitialDistribution<T> {
    /// Every agent starts at `mean`.
    pub fn point(mean: Vec<T>) -> Self {
        let n = mean.len();
        Self {
            mean,
            factor: Matrix::zeros(n, n),
        }
    }

    /// Independent coordinates with common standard deviation.
    pub fn isotropic(mean: Vec<T>, std: T) -> Self {
        let n = mean.len();
        Self {
            mean,
            factor: Matrix::identity(n).scale(std),
        }
    }

    /// Gaussian with the given positive semidefinite covariance.
    pub fn gaussian(mean: Vec<T>, cov: &Matrix<T>) -> Result<Self> {
        let n = mean.len();
        if cov.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                context: "initial covariance",
                expected: (n, n),
                found: cov.shape(),
            });
        }
        let tol = T::lit(1e-12) * (T::one() + cov.max_abs());
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = cov[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d < -tol {
                return Err(Error::InvalidConfig(
                    "initial covariance must be positive semidefinite".into(),
                ));
            }
            let ljj = d.max(T::zero()).sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = cov[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = if ljj > tol.sqrt() { s / ljj } else { T::zero() };
            }
        }
        Ok(Self { mean, factor: l })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub agents: usize,
    pub horizon: T,
    pub dt: T,
    pub replications: usize,
    pub seed: u64,
    pub initial: InitialDistribution<T>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Keep the mean-field path of the first replication.
    pub record_path: bool,
}

impl<T: Scalar> SimConfig<T> {
    fn steps(&self) -> Result<usize> {
        let finite = self.horizon.is_finite() && self.dt.is_finite();
        if !(finite && self.dt > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon >= self.dt) {
            return Err(Error::InvalidConfig(format!(
                "horizon {} must be at least dt {}",
                self.horizon, self.dt
            )));
        }
        if self.agents == 0 || self.replications == 0 {
            return Err(Error::InvalidConfig(
                "agents and replications must be at least 1".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        let steps = (self.horizon / self.dt)
            .round()
            .to_usize()
            .unwrap_or(usize::MAX);
        if steps > 100_000_000 {
            return Err(Error::InvalidConfig(format!(
                "{steps} time steps requested"
            )));
        }
        Ok(steps.max(1))
    }
}

/// Mean and standard error over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub std_dev: T,
    pub std_error: T,
}

fn estimate<T: Scalar>(xs: &[T]) -> Estimate<T> {
    let n = T::lit(xs.len() as f64);
    let mean = xs.iter().copied().sum::<T>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (n - T::one())
    } else {
        T::zero()
    };
    let std_dev = var.sqrt();
    Estimate {
        mean,
        std_dev,
        std_error: std_dev / n.sqrt(),
    }
}

/// Empirical mean field of one replication against the reference `x̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<T> {
    pub t: Vec<T>,
    pub empirical: Vec<Vec<T>>,
    pub reference: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T> {
    /// `(1/N)·Σᵢ Ĵᵢ` across replications.
    pub per_agent_cost: Estimate<T>,
    /// `sup_t ‖x^{(N)}(t) − x̄(t)‖` across replications.
    pub mean_field_gap: Estimate<T>,
    pub replication_costs: Vec<T>,
    pub replication_gaps: Vec<T>,
    /// `e^{−ρT}·c/ρ` with `c` the largest replication-averaged running cost
    /// on the grid; an estimate of the truncated part of the cost.
    pub tail_bound: T,
    pub steps: usize,
    pub path: Option<SamplePath<T>>,
}

struct Replication<T> {
    cost: T,
    gap: T,
    running: Vec<T>,
    path: Option<Vec<Vec<T>>>,
}

struct Model<T> {
    n: usize,
    n2: usize,
    /// `A + B·K_x`.
    closed: Matrix<T>,
    d: Matrix<T>,
    q: Matrix<T>,
    r: Matrix<T>,
    gamma: Matrix<T>,
    eta: Vec<T>,
    rho: T,
    k_x: Matrix<T>,
    l: Matrix<T>,
    /// `B·L·s(t_k)`.
    offsets: Vec<Vec<T>>,
    costate: Vec<Vec<T>>,
    reference: Vec<Vec<T>>,
}

fn quad_form<T: Scalar>(m: &Matrix<T>, v: &[T]) -> T {
    m.matvec(v).iter().zip(v).map(|(&a, &b)| a * b).sum()
}

impl<T: Scalar> Model<T> {
    fn run(&self, cfg: &SimConfig<T>, steps: usize, rep: usize) -> Replication<T> {
        let (n, agents) = (self.n, cfg.agents);
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep as u64);
        let normal = |rng: &mut ChaCha20Rng| -> T {
            let z: f64 = StandardNormal.sample(rng);
            T::lit(z)
        };
        let mut x: Vec<Vec<T>> = (0..agents)
            .map(|_| {
                let xi: Vec<T> = (0..n).map(|_| normal(&mut rng)).collect();
                cfg.initial
                    .mean
                    .iter()
                    .zip(cfg.initial.factor.matvec(&xi))
                    .map(|(&m, e)| m + e)
                    .collect()
            })
            .collect();
        let inv_n = T::one() / T::lit(agents as f64);
        let sqrt_dt = cfg.dt.sqrt();
        let mut cost = T::zero();
        let mut gap = T::zero();
        let mut running = Vec::with_capacity(steps + 1);
        let mut path = cfg.record_path.then(|| Vec::with_capacity(steps + 1));
        for k in 0..=steps {
            let mut mean = vec![T::zero(); n];
            for xi in &x {
                for j in 0..n {
                    mean[j] += xi[j] * inv_n;
                }
            }
            let dev: Vec<T> = (0..n).map(|j| mean[j] - self.reference[k][j]).collect();
            gap = gap.max(norm2(&dev));
            if let Some(p) = path.as_mut() {
                p.push(mean.clone());
            }
            if k == steps {
                break;
            }
            let target: Vec<T> = self
                .gamma
                .matvec(&mean)
                .iter()
                .zip(&self.eta)
                .map(|(&g, &e)| g + e)
                .collect();
            let ls = self.l.matvec(&self.costate[k]);
            let t = T::lit(k as f64) * cfg.dt;
            let weight = (-self.rho * t).exp() * cfg.dt;
            let mut step_cost = T::zero();
            for xi in x.iter_mut() {
                let u: Vec<T> = self
                    .k_x
                    .matvec(xi)
                    .iter()
                    .zip(&ls)
                    .map(|(&a, &b)| a + b)
                    .collect();
                let e: Vec<T> = xi.iter().zip(&target).map(|(&a, &b)| a - b).collect();
                step_cost += quad_form(&self.q, &e) + quad_form(&self.r, &u);
                let drift = self.closed.matvec(xi);
                let noise = if self.n2 > 0 {
                    let w: Vec<T> = (0..self.n2).map(|_| normal(&mut rng) * sqrt_dt).collect();
                    self.d.matvec(&w)
                } else {
                    vec![T::zero(); n]
                };
                for j in 0..n {
                    xi[j] += (drift[j] + self.offsets[k][j]) * cfg.dt + noise[j];
                }
            }
            let per_agent = step_cost * inv_n;
            running.push(per_agent);
            cost += weight * per_agent;
        }
        Replication {
            cost,
            gap,
            running,
            path,
        }
    }
}

/// Runs `cfg.replications` independent replications of the `N`-agent system.
pub fn simulate<T: Scalar>(
    p: &ProblemData<T>,
    strategy: &StrategySpec<T>,
    cfg: &SimConfig<T>,
) -> Result<SimResult<T>> {
    let steps = cfg.steps()?;
    let n = p.n();
    let d = p
        .d()
        .cloned()
        .ok_or_else(|| Error::InvalidConfig("simulation requires the noise loading D".into()))?;
    if cfg.initial.mean.len() != n || cfg.initial.factor.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "initial distribution",
            expected: (n, n),
            found: cfg.initial.factor.shape(),
        });
    }
    if strategy.dim() != n || strategy.k_x.shape() != (p.n1(), n) {
        return Err(Error::DimensionMismatch {
            context: "strategy gain K_x",
            expected: (p.n1(), n),
            found: strategy.k_x.shape(),
        });
    }
    let grid: Vec<T> = (0..=steps).map(|k| T::lit(k as f64) * cfg.dt).collect();
    let paths = strategy.paths(&grid)?;
    let bl = p.b().matmul(&strategy.l);
    let model = Model {
        n,
        n2: d.cols(),
        closed: p.a() + &p.b().matmul(&strategy.k_x),
        d,
        q: p.q().clone(),
        r: p.r().clone(),
        gamma: p.gamma().clone(),
        eta: p.eta().to_vec(),
        rho: p.rho(),
        k_x: strategy.k_x.clone(),
        l: strategy.l.clone(),
        offsets: paths.iter().map(|s| bl.matvec(&s.s)).collect(),
        costate: paths.iter().map(|s| s.s.clone()).collect(),
        reference: paths.iter().map(|s| s.xbar.clone()).collect(),
    };

    let run_all = || -> Vec<Replication<T>> {
        (0..cfg.replications)
            .into_par_iter()
            .map(|rep| model.run(cfg, steps, rep))
            .collect()
    };
    let reps = match cfg.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };

    let costs: Vec<T> = reps.iter().map(|r| r.cost).collect();
    let gaps: Vec<T> = reps.iter().map(|r| r.gap).collect();
    let inv_reps = T::one() / T::lit(reps.len() as f64);
    let running_scale = (0..steps)
        .map(|k| reps.iter().map(|r| r.running[k]).sum::<T>() * inv_reps)
        .fold(T::zero(), T::max);
    let tail_bound = (-p.rho() * cfg.horizon).exp() * running_scale / p.rho();
    let path = reps[0].path.clone().map(|empirical| SamplePath {
        t: grid.clone(),
        empirical,
        reference: model.reference.clone(),
    });
    Ok(SimResult {
        per_agent_cost: estimate(&costs),
        mean_field_gap: estimate(&gaps),
        replication_costs: costs,
        replication_gaps: gaps,
        tail_bound,
        steps,
        path,
    })
}
