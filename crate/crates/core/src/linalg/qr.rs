use super::matrix::Matrix;
use crate::scalar::{copysign, Scalar};

/// Householder QR, returning the full orthogonal `Q` (m×m) and `R` (m×n).
pub fn householder_qr<T: Scalar>(a: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut q = Matrix::identity(m);
    for k in 0..n.min(m.saturating_sub(1)) {
        let alpha = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<T>().sqrt();
        if alpha == T::zero() {
            continue;
        }
        let mut v: Vec<T> = (k..m).map(|i| r[(i, k)]).collect();
        let v0 = v[0];
        v[0] += copysign(alpha, v0);
        let vnorm2: T = v.iter().map(|&x| x * x).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let tau = T::two() / vnorm2;
        // R ← (I − τvvᵀ)R
        for j in k..n {
            let dot: T = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
            let f = tau * dot;
            for i in k..m {
                r[(i, j)] -= f * v[i - k];
            }
        }
        // Q ← Q(I − τvvᵀ)
        for i in 0..m {
            let dot: T = (k..m).map(|l| q[(i, l)] * v[l - k]).sum();
            let f = tau * dot;
            for l in k..m {
                q[(i, l)] -= f * v[l - k];
            }
        }
        for i in k + 1..m {
            r[(i, k)] = T::zero();
        }
    }
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_and_is_orthogonal() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, -1.0], [0.5, 4.0], [2.0, 2.0]]).unwrap();
        let (q, r) = householder_qr(&a);
        assert!((&q.matmul(&r) - &a).norm_fro() < 1e-13);
        assert!((&q.tr_matmul(&q) - &Matrix::identity(4)).norm_fro() < 1e-14);
        for i in 0..4 {
            for j in 0..i.min(2) {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }
}
