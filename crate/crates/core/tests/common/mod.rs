//! Instance generators and independent oracles shared by the property and
//! acceptance suites.
#![allow(dead_code)]

use lqmf::linalg::{eigenvalues, inverse, norm2, Matrix};
use lqmf::{ProblemData64, ProblemParts};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type M = Matrix<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> M {
    M::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn rand_symmetric(rng: &mut ChaCha8Rng, n: usize) -> M {
    randn(rng, n, n).symmetrize()
}

pub fn scalar(x: f64) -> M {
    M::from_diagonal(&[x])
}

pub fn scalar_case() -> ProblemData64 {
    ProblemData64::new(ProblemParts {
        a: scalar(2.0),
        b: scalar(1.0),
        d: None,
        q: scalar(2.0),
        r: scalar(1.0),
        gamma: scalar(1.0),
        eta: vec![1.0],
        rho: 1.0,
        x0: vec![1.0],
    })
    .unwrap()
}

pub fn coupled_case(gamma: f64) -> ProblemData64 {
    ProblemData64::new(ProblemParts {
        a: M::from_rows(&[[1.0, -1.0], [0.0, 2.0]]).unwrap(),
        b: M::from_rows(&[[1.0], [1.0]]).unwrap(),
        d: None,
        q: M::from_rows(&[[1.0, 0.0], [0.0, -0.5]]).unwrap(),
        r: M::identity(1),
        gamma: M::from_rows(&[[1.0, 0.0], [0.5, 1.0]])
            .unwrap()
            .scale(gamma),
        eta: vec![1.0, 0.0],
        rho: 1.0,
        x0: vec![1.0, 1.0],
    })
    .unwrap()
}

pub fn game_case() -> ProblemData64 {
    ProblemData64::new(ProblemParts {
        a: M::from_rows(&[[5.0, -5.0], [0.0, 10.0]]).unwrap(),
        b: M::from_rows(&[[1.0], [1.0]]).unwrap(),
        d: None,
        q: M::identity(2),
        r: M::identity(1),
        gamma: M::from_rows(&[[5.0, 0.0], [2.5, 5.0]]).unwrap(),
        eta: vec![1.0, 0.0],
        rho: 2.0,
        x0: vec![1.0, 1.0],
    })
    .unwrap()
}

/// Degenerate scalar instance with `a = ρ/2` and `γ = 1`.
pub fn degenerate_scalar() -> ProblemData64 {
    ProblemData64::new(ProblemParts {
        a: scalar(0.5),
        b: scalar(1.0),
        d: None,
        q: scalar(1.0),
        r: scalar(1.0),
        gamma: scalar(1.0),
        eta: vec![1.0],
        rho: 1.0,
        x0: vec![1.0],
    })
    .unwrap()
}

/// Random instance with positive definite `Q` and `R`; `gamma_scale = 0`
/// gives `Γ = 0`.
pub fn random_problem(rng: &mut ChaCha8Rng, gamma_scale: f64) -> ProblemData64 {
    let n = rng.random_range(1..=3);
    let m = rng.random_range(1..=n);
    let lq = randn(rng, n, n);
    let lr = randn(rng, m, m);
    ProblemData64::new(ProblemParts {
        a: randn(rng, n, n),
        b: randn(rng, n, m),
        d: None,
        q: (&lq.matmul(&lq.transpose()) + &M::identity(n).scale(0.1)).symmetrize(),
        r: (&lr.matmul(&lr.transpose()) + &M::identity(m).scale(0.5)).symmetrize(),
        gamma: randn(rng, n, n).scale(gamma_scale),
        eta: rand_vec(rng, n),
        rho: rng.random_range(0.2..2.0),
        x0: rand_vec(rng, n),
    })
    .unwrap()
}

/// `K = P·Λ·P⁻¹` with `n` stable and `n` antistable eigenvalues, antistable
/// real parts in `[0.2, 1.5]`. Returns `K` and the smallest antistable real part.
pub fn constructed_dichotomy(rng: &mut ChaCha8Rng, n: usize) -> (M, f64) {
    let mut lam = M::zeros(2 * n, 2 * n);
    let mut fill = |rng: &mut ChaCha8Rng, offset: usize, sign: f64, lo: f64, hi: f64| -> f64 {
        let mut min_re = f64::INFINITY;
        let mut i = 0;
        while i < n {
            if i + 1 < n && rng.random_bool(0.4) {
                let re = sign * rng.random_range(lo..hi);
                let im = rng.random_range(0.2..2.0);
                lam[(offset + i, offset + i)] = re;
                lam[(offset + i + 1, offset + i + 1)] = re;
                lam[(offset + i, offset + i + 1)] = im;
                lam[(offset + i + 1, offset + i)] = -im;
                min_re = min_re.min(re.abs());
                i += 2;
            } else {
                let re = sign * rng.random_range(lo..hi);
                lam[(offset + i, offset + i)] = re;
                min_re = min_re.min(re.abs());
                i += 1;
            }
        }
        min_re
    };
    fill(rng, 0, -1.0, 0.2, 3.0);
    let lambda_plus = fill(rng, n, 1.0, 0.2, 1.5);
    let p = &M::identity(2 * n) + &randn(rng, 2 * n, 2 * n).scale(0.3);
    let k = p.matmul(&lam).matmul(&inverse(&p).unwrap());
    (k, lambda_plus)
}

/// Classical RK4 for `dz/dt = K·z + ψ₀·e^{−ρt/2}`, sampled every `every` steps.
pub fn rk4(
    k: &M,
    psi0: &[f64],
    rho: f64,
    z0: &[f64],
    h: f64,
    steps: usize,
    every: usize,
) -> Vec<Vec<f64>> {
    let rhs = |t: f64, z: &[f64]| -> Vec<f64> {
        let e = (-rho * t / 2.0).exp();
        k.matvec(z)
            .iter()
            .zip(psi0)
            .map(|(a, p)| a + p * e)
            .collect()
    };
    let axpy = |z: &[f64], d: &[f64], s: f64| -> Vec<f64> {
        z.iter().zip(d).map(|(a, b)| a + s * b).collect()
    };
    let mut z = z0.to_vec();
    let mut out = vec![z.clone()];
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(t, &z);
        let k2 = rhs(t + h / 2.0, &axpy(&z, &k1, h / 2.0));
        let k3 = rhs(t + h / 2.0, &axpy(&z, &k2, h / 2.0));
        let k4 = rhs(t + h, &axpy(&z, &k3, h));
        for j in 0..z.len() {
            z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if (i + 1) % every == 0 {
            out.push(z.clone());
        }
    }
    out
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Largest distance from each eigenvalue of `k` to the nearest eigenvalue of
/// `−k`, using a greedy one-to-one matching.
pub fn negation_symmetry_gap(k: &M) -> f64 {
    let ev: Vec<Complex64> = eigenvalues(k).unwrap().eigenvalues;
    let mut pool: Vec<Complex64> = ev.iter().map(|z| -z).collect();
    let mut worst: f64 = 0.0;
    for z in &ev {
        let (idx, d) = pool
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        worst = worst.max(d);
        pool.swap_remove(idx);
    }
    worst
}

/// Random Hamiltonian-form matrix `[[A, −M], [−Q, −Aᵀ]]` with `M ⪰ 0`.
pub fn random_hamiltonian(rng: &mut ChaCha8Rng, n: usize) -> M {
    let a = randn(rng, n, n);
    let cols = rng.random_range(1..=n);
    let b = randn(rng, n, cols);
    let m = b.matmul(&b.transpose()).symmetrize();
    let q = rand_symmetric(rng, n);
    M::from_blocks(&a, &(-&m), &(-&q), &(-&a.transpose()))
}

pub fn sup_norm(samples: &[Vec<f64>]) -> f64 {
    samples.iter().map(|z| norm2(z)).fold(0.0, f64::max)
}
