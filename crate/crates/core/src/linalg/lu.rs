use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative pivot threshold below which a matrix is treated as singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Scalar> Lu<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.require_square()?;
        let threshold = T::lit(SINGULAR_PIVOT_RTOL) * a.norm_fro();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold(
                        (k, -T::one()),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if !(pivot > threshold) || pivot == T::zero() {
                return Err(Error::SingularMatrix {
                    pivot: pivot.to_f64_lossy(),
                    threshold: threshold.to_f64_lossy(),
                });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn determinant(&self) -> T {
        (0..self.dim()).fold(self.sign, |acc, i| acc * self.lu[(i, i)])
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu.row(i)[..i];
            let dot = row.iter().zip(&x[..i]).map(|(&l, &xj)| l * xj).sum::<T>();
            x[i] -= dot;
        }
        for i in (0..n).rev() {
            let row = &self.lu.row(i)[i + 1..];
            let acc = x[i]
                - row
                    .iter()
                    .zip(&x[i + 1..])
                    .map(|(&u, &xj)| u * xj)
                    .sum::<T>();
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        if b.rows() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "solve_linear",
                expected: (self.dim(), b.cols()),
                found: b.shape(),
            });
        }
        let mut x = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let col = self.solve_vec(&b.column(j));
            for (i, v) in col.into_iter().enumerate() {
                x[(i, j)] = v;
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Matrix<T> {
        self.solve(&Matrix::identity(self.dim()))
            .expect("identity has matching dimension")
    }
}

/// Solves `A·X = B` by pivoted LU.
pub fn solve_linear<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    Lu::new(a)?.solve(b)
}

/// Solves `A·x = b` for a single right-hand side.
pub fn solve_vec<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let lu = Lu::new(a)?;
    if b.len() != lu.dim() {
        return Err(Error::DimensionMismatch {
            context: "solve_vec",
            expected: (lu.dim(), 1),
            found: (b.len(), 1),
        });
    }
    Ok(lu.solve_vec(b))
}

pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(Lu::new(a)?.inverse())
}

/// One-norm condition number `‖A‖₁‖A⁻¹‖₁`; infinite when `A` is singular.
pub fn condition_number<T: Scalar>(a: &Matrix<T>) -> T {
    match Lu::new(a) {
        Ok(lu) => a.norm_one() * lu.inverse().norm_one(),
        Err(_) => T::infinity(),
    }
}
