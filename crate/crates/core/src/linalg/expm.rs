//! Matrix exponential by scaling and squaring with diagonal Padé approximants.

use super::lu::solve_linear;
use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `e^A`.
pub fn mat_exp<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.require_square()?;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let norm = a.norm_one().to_f64_lossy();
    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, coeffs);
            return finish(&u, &v, 0);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.scale(T::lit(0.5f64.powi(s)));
    let (u, v) = pade13(&scaled);
    finish(&u, &v, s)
}

fn pade_low<T: Scalar>(a: &Matrix<T>, b: &[f64]) -> (Matrix<T>, Matrix<T>) {
    let n = a.rows();
    let a2 = a.matmul(a);
    let mut u = Matrix::identity(n).scale(T::lit(b[1]));
    let mut v = Matrix::identity(n).scale(T::lit(b[0]));
    let mut pow = Matrix::identity(n);
    for k in 1..b.len() / 2 {
        pow = pow.matmul(&a2);
        u = &u + &pow.scale(T::lit(b[2 * k + 1]));
        v = &v + &pow.scale(T::lit(b[2 * k]));
    }
    (a.matmul(&u), v)
}

fn pade13<T: Scalar>(a: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let n = a.rows();
    let b = |k: usize| T::lit(B13[k]);
    let id = Matrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let inner_u = &(&a6.scale(b(13)) + &a4.scale(b(11))) + &a2.scale(b(9));
    let u = &(&(&a6.matmul(&inner_u) + &a6.scale(b(7))) + &a4.scale(b(5)))
        + &(&a2.scale(b(3)) + &id.scale(b(1)));
    let u = a.matmul(&u);
    let inner_v = &(&a6.scale(b(12)) + &a4.scale(b(10))) + &a2.scale(b(8));
    let v = &(&(&a6.matmul(&inner_v) + &a6.scale(b(6))) + &a4.scale(b(4)))
        + &(&a2.scale(b(2)) + &id.scale(b(0)));
    (u, v)
}

fn finish<T: Scalar>(u: &Matrix<T>, v: &Matrix<T>, squarings: i32) -> Result<Matrix<T>> {
    let mut r = solve_linear(&(v - u), &(v + u))?;
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) -> bool {
        (a - b).norm_fro() <= tol * b.norm_fro().max(1.0)
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(
            mat_exp(&Matrix::<f64>::zeros(2, 2)).unwrap(),
            Matrix::identity(2)
        );
        let e = mat_exp(&Matrix::from_diagonal(&[1.0, -1.0])).unwrap();
        assert!(close(
            &e,
            &Matrix::from_diagonal(&[1f64.exp(), (-1f64).exp()]),
            1e-14
        ));
        let nil = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        let e = mat_exp(&nil).unwrap();
        assert!(close(
            &e,
            &Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap(),
            1e-15
        ));
    }

    #[test]
    fn rotation_generator_all_degrees() {
        // exp([[0, θ], [−θ, 0]]) = rotation by θ; θ spans every Padé branch
        for &theta in &[1e-3, 0.2, 0.9, 2.0, 5.0, 40.0] {
            let a = Matrix::from_rows(&[[0.0, theta], [-theta, 0.0]]).unwrap();
            let e = mat_exp(&a).unwrap();
            let (c, s) = (f64::cos(theta), f64::sin(theta));
            let want = Matrix::from_rows(&[[c, s], [-s, c]]).unwrap();
            assert!(close(&e, &want, 1e-12), "theta {theta}");
        }
    }

    #[test]
    fn overflow_reported() {
        let a = Matrix::from_diagonal(&[1000.0]);
        assert!(matches!(mat_exp(&a), Err(Error::Overflow)));
    }
}
