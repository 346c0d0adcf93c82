//! Bartels–Stewart solver for `A·X + X·B = C`.

use super::lu::solve_vec;
use super::matrix::Matrix;
use super::schur::real_schur;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn blocks<T: Scalar>(t: &Matrix<T>) -> Vec<(usize, usize)> {
    let n = t.rows();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let size = if i + 1 < n && t[(i + 1, i)] != T::zero() {
            2
        } else {
            1
        };
        out.push((i, size));
        i += size;
    }
    out
}

/// Solves `A·X + X·B = C`; requires `spec(A) ∩ spec(−B) = ∅`.
pub fn solve_sylvester<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    c: &Matrix<T>,
) -> Result<Matrix<T>> {
    let m = a.require_square()?;
    let n = b.require_square()?;
    if c.shape() != (m, n) {
        return Err(Error::DimensionMismatch {
            context: "solve_sylvester",
            expected: (m, n),
            found: c.shape(),
        });
    }
    let (ta, u) = real_schur(a)?;
    let (tb, v) = real_schur(b)?;
    let f = u.tr_matmul(&c.matmul(&v));
    let mut y = Matrix::zeros(m, n);
    let row_blocks = blocks(&ta);
    for &(cj, qj) in &blocks(&tb) {
        for &(ri, pi) in row_blocks.iter().rev() {
            let mut rhs = vec![T::zero(); pi * qj];
            for i in 0..pi {
                for k in 0..qj {
                    let (r, c) = (ri + i, cj + k);
                    let mut acc = f[(r, c)];
                    for l in ri + pi..m {
                        acc -= ta[(r, l)] * y[(l, c)];
                    }
                    for l in 0..cj {
                        acc -= y[(r, l)] * tb[(l, c)];
                    }
                    rhs[i * qj + k] = acc;
                }
            }
            let mut kron = Matrix::zeros(pi * qj, pi * qj);
            for i in 0..pi {
                for k in 0..qj {
                    let row = i * qj + k;
                    for l in 0..pi {
                        kron[(row, l * qj + k)] += ta[(ri + i, ri + l)];
                    }
                    for l in 0..qj {
                        kron[(row, i * qj + l)] += tb[(cj + l, cj + k)];
                    }
                }
            }
            let sol = solve_vec(&kron, &rhs)?;
            for i in 0..pi {
                for k in 0..qj {
                    y[(ri + i, cj + k)] = sol[i * qj + k];
                }
            }
        }
    }
    Ok(u.matmul(&y).matmul(&v.transpose()))
}

/// Solves `Aᵀ·X + X·A + Q = 0`, returning the symmetrized solution.
pub fn solve_lyapunov<T: Scalar>(a: &Matrix<T>, q: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(solve_sylvester(&a.transpose(), a, &(-q))?.symmetrize())
}
