//! Real Schur decomposition with stable-first reordering.
//!
//! The unordered form comes from Householder reduction to Hessenberg form
//! followed by Francis double-shift QR. Diagonal 2×2 blocks are kept in
//! standard form (equal diagonal, off-diagonal entries of opposite sign), so
//! each block holds exactly one complex-conjugate pair. Reordering moves
//! selected blocks upward by adjacent swaps, each swap computed from a small
//! Sylvester equation and an orthogonal QR factor.

use num_complex::Complex;

use super::lu::solve_vec;
use super::matrix::Matrix;
use super::qr::householder_qr;
use crate::error::{Error, Result};
use crate::scalar::{copysign, Scalar};

/// Default imaginary-axis tolerance `1e-9·(1 + ‖K‖_F)`.
pub fn default_axis_tol<T: Scalar>(k: &Matrix<T>) -> T {
    T::lit(1e-9) * (T::one() + k.norm_fro())
}

/// Eigenvalues of a real square matrix together with the tolerance used to
/// classify them relative to the imaginary axis.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub eigenvalues: Vec<Complex<T>>,
    pub axis_tol: T,
    /// Two eigenvalues on opposite sides of the axis closer than this are
    /// treated as a split defective eigenvalue sitting on the axis.
    pub collision_tol: T,
}

impl<T: Scalar> Spectrum<T> {
    fn new(mut eigenvalues: Vec<Complex<T>>, axis_tol: T, scale: T) -> Self {
        eigenvalues.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        let collision_tol = (axis_tol * (T::one() + scale)).sqrt();
        Self {
            eigenvalues,
            axis_tol,
            collision_tol,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `max Re λ`; `-∞` for the empty spectrum.
    pub fn abscissa(&self) -> T {
        self.eigenvalues
            .iter()
            .fold(T::neg_infinity(), |m, z| m.max(z.re))
    }

    pub fn stable_count(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|z| z.re < -self.axis_tol)
            .count()
    }

    pub fn antistable_count(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|z| z.re > self.axis_tol)
            .count()
    }

    /// Eigenvalues that cannot be separated from the imaginary axis: those
    /// with `|Re λ| ≤ axis_tol`, and stable/antistable pairs closer to each
    /// other than `collision_tol` (the numerical signature of a defective
    /// eigenvalue on the axis split by rounding).
    pub fn axis_eigenvalues(&self) -> Vec<Complex<T>> {
        let mut out: Vec<Complex<T>> = Vec::new();
        let mut flagged = vec![false; self.eigenvalues.len()];
        for (i, z) in self.eigenvalues.iter().enumerate() {
            if z.re.abs() <= self.axis_tol {
                flagged[i] = true;
            }
        }
        for i in 0..self.eigenvalues.len() {
            for j in 0..self.eigenvalues.len() {
                let (a, b) = (self.eigenvalues[i], self.eigenvalues[j]);
                if a.re < T::zero() && b.re > T::zero() && (a - b).norm() <= self.collision_tol {
                    flagged[i] = true;
                    flagged[j] = true;
                }
            }
        }
        for (i, z) in self.eigenvalues.iter().enumerate() {
            if flagged[i] {
                out.push(*z);
            }
        }
        out
    }

    pub(crate) fn axis_error(&self) -> Option<Error> {
        let bad = self.axis_eigenvalues();
        if bad.is_empty() {
            None
        } else {
            Some(Error::ImaginaryAxisEigenvalue {
                eigenvalues: bad
                    .iter()
                    .map(|z| Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy()))
                    .collect(),
            })
        }
    }
}

/// Real Schur form `K = W·T·Wᵀ` with stable eigenvalues leading.
#[derive(Debug, Clone)]
pub struct OrderedSchurForm<T> {
    /// Orthogonal Schur vectors.
    pub w: Matrix<T>,
    /// Quasi-upper-triangular factor.
    pub t: Matrix<T>,
    /// Number of eigenvalues (with multiplicity) in the leading stable block.
    pub k_stable: usize,
}

impl<T: Scalar> OrderedSchurForm<T> {
    pub fn stable_block(&self) -> Matrix<T> {
        self.t.block(0, 0, self.k_stable, self.k_stable)
    }

    pub fn eigenvalues(&self) -> Vec<Complex<T>> {
        quasi_triangular_eigenvalues(&self.t)
    }
}

/// All eigenvalues of `a` with the default axis tolerance attached.
pub fn eigenvalues<T: Scalar>(a: &Matrix<T>) -> Result<Spectrum<T>> {
    eigenvalues_with_tol(a, default_axis_tol(a))
}

pub fn eigenvalues_with_tol<T: Scalar>(a: &Matrix<T>, axis_tol: T) -> Result<Spectrum<T>> {
    a.require_square()?;
    let (t, _) = real_schur(a)?;
    Ok(Spectrum::new(
        quasi_triangular_eigenvalues(&t),
        axis_tol,
        a.norm_fro(),
    ))
}

/// `max Re λ` over the eigenvalues of `a`.
pub fn spectral_abscissa<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    Ok(eigenvalues(a)?.abscissa())
}

/// Ordered real Schur form with every eigenvalue of negative real part in
/// the leading block.
pub fn real_schur_ordered<T: Scalar>(k: &Matrix<T>, axis_tol: T) -> Result<OrderedSchurForm<T>> {
    k.require_square()?;
    let (mut t, mut w) = real_schur(k)?;
    let spectrum = Spectrum::new(quasi_triangular_eigenvalues(&t), axis_tol, k.norm_fro());
    if let Some(err) = spectrum.axis_error() {
        return Err(err);
    }
    let k_stable = reorder(&mut t, &mut w, |z| z.re < T::zero())?;
    Ok(OrderedSchurForm { w, t, k_stable })
}

/// Unordered real Schur form `(T, Z)` with `A = Z·T·Zᵀ`.
pub fn real_schur<T: Scalar>(a: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    a.require_square()?;
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let (mut h, mut z) = hessenberg(a);
    francis_qr(&mut h, &mut z)?;
    Ok((h, z))
}

/// Householder reduction `A = Q·H·Qᵀ` to upper Hessenberg form.
pub fn hessenberg<T: Scalar>(a: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = Matrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let alpha = (k + 1..n).map(|i| h[(i, k)] * h[(i, k)]).sum::<T>().sqrt();
        if alpha == T::zero() {
            continue;
        }
        let mut v: Vec<T> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let v0 = v[0];
        v[0] += copysign(alpha, v0);
        let vn: T = v.iter().map(|&x| x * x).sum();
        let tau = T::two() / vn;
        for j in 0..n {
            let d: T = (k + 1..n).map(|i| v[i - k - 1] * h[(i, j)]).sum();
            let f = tau * d;
            for i in k + 1..n {
                h[(i, j)] -= f * v[i - k - 1];
            }
        }
        for i in 0..n {
            let d: T = (k + 1..n).map(|j| h[(i, j)] * v[j - k - 1]).sum();
            let f = tau * d;
            for j in k + 1..n {
                h[(i, j)] -= f * v[j - k - 1];
            }
            let d: T = (k + 1..n).map(|j| q[(i, j)] * v[j - k - 1]).sum();
            let f = tau * d;
            for j in k + 1..n {
                q[(i, j)] -= f * v[j - k - 1];
            }
        }
        for i in k + 2..n {
            h[(i, k)] = T::zero();
        }
    }
    (h, q)
}

/// Reflector `I − τ·v·vᵀ` with `v[0] = 1` mapping `x` onto a multiple of `e₁`.
fn reflector<T: Scalar, const N: usize>(x: [T; N]) -> ([T; N], T) {
    let mut v = [T::zero(); N];
    v[0] = T::one();
    let tail: T = x[1..].iter().map(|&a| a * a).sum();
    if tail == T::zero() {
        return (v, T::zero());
    }
    let norm = (x[0] * x[0] + tail).sqrt();
    let beta = -copysign(norm, x[0]);
    let tau = (beta - x[0]) / beta;
    let denom = x[0] - beta;
    for i in 1..N {
        v[i] = x[i] / denom;
    }
    (v, tau)
}

fn apply_reflector_rows<T: Scalar, const N: usize>(
    m: &mut Matrix<T>,
    r0: usize,
    v: &[T; N],
    tau: T,
    cols: std::ops::Range<usize>,
) {
    for j in cols {
        let mut d = T::zero();
        for (i, &vi) in v.iter().enumerate() {
            d += vi * m[(r0 + i, j)];
        }
        let f = tau * d;
        for (i, &vi) in v.iter().enumerate() {
            m[(r0 + i, j)] -= f * vi;
        }
    }
}

fn apply_reflector_cols<T: Scalar, const N: usize>(
    m: &mut Matrix<T>,
    c0: usize,
    v: &[T; N],
    tau: T,
    rows: std::ops::Range<usize>,
) {
    for i in rows {
        let mut d = T::zero();
        for (j, &vj) in v.iter().enumerate() {
            d += vj * m[(i, c0 + j)];
        }
        let f = tau * d;
        for (j, &vj) in v.iter().enumerate() {
            m[(i, c0 + j)] -= f * vj;
        }
    }
}

const MAX_SWEEPS_PER_BLOCK: usize = 80;

/// Francis double-shift QR on an upper Hessenberg matrix, accumulating the
/// orthogonal transformations into `z`.
fn francis_qr<T: Scalar>(h: &mut Matrix<T>, z: &mut Matrix<T>) -> Result<()> {
    let n = h.rows();
    if n == 0 {
        return Ok(());
    }
    let eps = T::epsilon();
    let safe_min = T::min_positive_value();
    let hnorm = h.norm_fro().max(safe_min);
    let mut hi = n - 1;
    let mut iter = 0usize;
    loop {
        if hi == 0 {
            break;
        }
        // Deflation search.
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == T::zero() {
                s = hnorm;
            }
            if h[(l, l - 1)].abs() <= eps * s || h[(l, l - 1)].abs() <= safe_min {
                h[(l, l - 1)] = T::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        if l + 1 == hi {
            standardize_block(h, z, hi - 1);
            if hi < 2 {
                break;
            }
            hi -= 2;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_SWEEPS_PER_BLOCK {
            return Err(Error::NoConvergence {
                context: "Francis QR iteration",
            });
        }
        let (shift_sum, shift_prod) = if iter.is_multiple_of(10) {
            let mut s = h[(hi, hi - 1)].abs();
            if hi >= 2 {
                s += h[(hi - 1, hi - 2)].abs();
            }
            let h11 = T::lit(0.75) * s + h[(hi, hi)];
            let h12 = T::lit(-0.4375) * s;
            (h11 + h11, h11 * h11 - h12 * s)
        } else {
            let (a, b, c, d) = (
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            );
            (a + d, a * d - b * c)
        };
        let mut x = h[(l, l)] * h[(l, l)] + h[(l, l + 1)] * h[(l + 1, l)] - shift_sum * h[(l, l)]
            + shift_prod;
        let mut y = h[(l + 1, l)] * (h[(l, l)] + h[(l + 1, l + 1)] - shift_sum);
        let mut w = h[(l + 1, l)] * h[(l + 2, l + 1)];
        for k in l..=hi - 2 {
            let (v, tau) = reflector([x, y, w]);
            if tau != T::zero() {
                let q = if k > l { k - 1 } else { l };
                apply_reflector_rows(h, k, &v, tau, q..n);
                let r = (k + 3).min(hi);
                apply_reflector_cols(h, k, &v, tau, 0..r + 1);
                apply_reflector_cols(z, k, &v, tau, 0..n);
            }
            if k > l {
                h[(k + 1, k - 1)] = T::zero();
                h[(k + 2, k - 1)] = T::zero();
            }
            x = h[(k + 1, k)];
            y = h[(k + 2, k)];
            if k + 3 <= hi {
                w = h[(k + 3, k)];
            }
        }
        let (v, tau) = reflector([x, y]);
        if tau != T::zero() {
            apply_reflector_rows(h, hi - 1, &v, tau, hi - 2..n);
            apply_reflector_cols(h, hi - 1, &v, tau, 0..hi + 1);
            apply_reflector_cols(z, hi - 1, &v, tau, 0..n);
        }
        h[(hi, hi - 2)] = T::zero();
    }
    Ok(())
}

/// Standardized 2×2 block and the rotation producing it.
struct Standard2<T> {
    a: T,
    b: T,
    c: T,
    d: T,
    cs: T,
    sn: T,
}

/// Schur factorization of a real 2×2 matrix,
/// `[a b; c d] = [cs −sn; sn cs]·[aa bb; cc dd]·[cs sn; −sn cs]`,
/// where either `cc = 0` or `aa = dd` with `bb·cc < 0`.
fn standardize_2x2<T: Scalar>(mut a: T, mut b: T, mut c: T, mut d: T) -> Standard2<T> {
    let zero = T::zero();
    let one = T::one();
    let eps = T::epsilon();
    let (mut cs, mut sn);
    if c == zero {
        cs = one;
        sn = zero;
    } else if b == zero {
        cs = zero;
        sn = one;
        std::mem::swap(&mut a, &mut d);
        b = -c;
        c = zero;
    } else if a - d == zero && copysign(one, b) != copysign(one, c) {
        cs = one;
        sn = zero;
    } else {
        let temp = a - d;
        let mut p = T::half() * temp;
        let bcmax = b.abs().max(c.abs());
        let bcmis = b.abs().min(c.abs()) * copysign(one, b) * copysign(one, c);
        let scale = p.abs().max(bcmax);
        let mut zz = (p / scale) * p + (bcmax / scale) * bcmis;
        if zz >= T::lit(4.0) * eps {
            // Real eigenvalues.
            zz = p + copysign(scale.sqrt() * zz.sqrt(), p);
            a = d + zz;
            d -= (bcmax / zz) * bcmis;
            let tau = c.hypot(zz);
            cs = zz / tau;
            sn = c / tau;
            b -= c;
            c = zero;
        } else {
            // Complex or nearly equal real eigenvalues: equalize the diagonal.
            let sigma = b + c;
            let tau = sigma.hypot(temp);
            cs = (T::half() * (one + sigma.abs() / tau)).sqrt();
            sn = -(p / (tau * cs)) * copysign(one, sigma);
            let aa = a * cs + b * sn;
            let bb = -a * sn + b * cs;
            let cc = c * cs + d * sn;
            let dd = -c * sn + d * cs;
            a = aa * cs + cc * sn;
            b = bb * cs + dd * sn;
            c = -aa * sn + cc * cs;
            d = -bb * sn + dd * cs;
            let mid = T::half() * (a + d);
            a = mid;
            d = mid;
            if c != zero {
                if b != zero {
                    if copysign(one, b) == copysign(one, c) {
                        // Real eigenvalues after all: triangularize.
                        let sab = b.abs().sqrt();
                        let sac = c.abs().sqrt();
                        p = copysign(sab * sac, c);
                        let tau = one / (b + c).abs().sqrt();
                        a = mid + p;
                        d = mid - p;
                        b -= c;
                        c = zero;
                        let cs1 = sab * tau;
                        let sn1 = sac * tau;
                        let t = cs * cs1 - sn * sn1;
                        sn = cs * sn1 + sn * cs1;
                        cs = t;
                    }
                } else {
                    b = -c;
                    c = zero;
                    let t = cs;
                    cs = -sn;
                    sn = t;
                }
            }
        }
    }
    Standard2 { a, b, c, d, cs, sn }
}

/// Standardizes the diagonal 2×2 block at `(p, p)` in place, updating the
/// rest of `t` and the Schur vectors `z`.
fn standardize_block<T: Scalar>(t: &mut Matrix<T>, z: &mut Matrix<T>, p: usize) {
    let n = t.rows();
    let s = standardize_2x2(t[(p, p)], t[(p, p + 1)], t[(p + 1, p)], t[(p + 1, p + 1)]);
    if p + 2 < n {
        t.rotate_rows(p, p + 1, s.cs, s.sn, p + 2..n);
    }
    t.rotate_cols(p, p + 1, s.cs, s.sn, 0..p);
    z.rotate_cols(p, p + 1, s.cs, s.sn, 0..z.rows());
    t[(p, p)] = s.a;
    t[(p, p + 1)] = s.b;
    t[(p + 1, p)] = s.c;
    t[(p + 1, p + 1)] = s.d;
}

fn block_size<T: Scalar>(t: &Matrix<T>, i: usize) -> usize {
    if i + 1 < t.rows() && t[(i + 1, i)] != T::zero() {
        2
    } else {
        1
    }
}

fn block_eigenvalues<T: Scalar>(t: &Matrix<T>, i: usize, size: usize) -> [Complex<T>; 2] {
    if size == 1 {
        let z = Complex::new(t[(i, i)], T::zero());
        return [z, z];
    }
    let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
    let mid = T::half() * (a + d);
    let p = T::half() * (a - d);
    let disc = p * p + b * c;
    if disc >= T::zero() {
        let r = disc.sqrt();
        [
            Complex::new(mid + r, T::zero()),
            Complex::new(mid - r, T::zero()),
        ]
    } else {
        let im = (-disc).sqrt();
        [Complex::new(mid, im), Complex::new(mid, -im)]
    }
}

/// Eigenvalues read off a quasi-upper-triangular matrix, in diagonal order.
pub fn quasi_triangular_eigenvalues<T: Scalar>(t: &Matrix<T>) -> Vec<Complex<T>> {
    let n = t.rows();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let size = block_size(t, i);
        let eig = block_eigenvalues(t, i, size);
        out.extend_from_slice(&eig[..size]);
        i += size;
    }
    out
}

/// Swaps the adjacent diagonal blocks of sizes `p` (at `j`) and `q` (at `j + p`).
fn swap_blocks<T: Scalar>(
    t: &mut Matrix<T>,
    z: &mut Matrix<T>,
    j: usize,
    p: usize,
    q: usize,
) -> Result<()> {
    let n = t.rows();
    let m = p + q;
    let d = t.block(j, j, m, m);
    // A11·X − X·A22 = A12, in Kronecker form.
    let mut kron = Matrix::zeros(p * q, p * q);
    let mut rhs = vec![T::zero(); p * q];
    for i in 0..p {
        for k in 0..q {
            let row = i * q + k;
            rhs[row] = d[(i, p + k)];
            for l in 0..p {
                kron[(row, l * q + k)] += d[(i, l)];
            }
            for l in 0..q {
                kron[(row, i * q + l)] -= d[(p + l, p + k)];
            }
        }
    }
    let x = solve_vec(&kron, &rhs).map_err(|_| Error::NoConvergence {
        context: "Schur block swap (eigenvalues too close to separate)",
    })?;
    let mut basis = Matrix::zeros(m, q);
    for i in 0..p {
        for k in 0..q {
            basis[(i, k)] = -x[i * q + k];
        }
    }
    for k in 0..q {
        basis[(p + k, k)] = T::one();
    }
    let (qm, _) = householder_qr(&basis);

    // T ← Qᵀ T Q on the affected rows/columns, Z ← Z Q.
    let rows = t.block(j, j, m, n - j);
    let rows = qm.tr_matmul(&rows);
    t.set_block(j, j, &rows);
    let cols = t.block(0, j, j + m, m);
    let cols = cols.matmul(&qm);
    t.set_block(0, j, &cols);
    let zc = z.block(0, j, z.rows(), m);
    z.set_block(0, j, &zc.matmul(&qm));

    let mut lower = T::zero();
    for i in q..m {
        for k in 0..q {
            lower = lower.max(t[(j + i, j + k)].abs());
        }
    }
    let thresh = T::lit(100.0) * T::epsilon() * d.norm_fro().max(T::min_positive_value());
    if lower > thresh {
        return Err(Error::NoConvergence {
            context: "Schur block swap (ill-conditioned reordering)",
        });
    }
    for i in q..m {
        for k in 0..q {
            t[(j + i, j + k)] = T::zero();
        }
    }
    if q == 2 {
        standardize_block(t, z, j);
    } else if j + 1 < n && p == 1 {
        t[(j + 1, j)] = T::zero();
    }
    if p == 2 {
        standardize_block(t, z, j + q);
    }
    Ok(())
}

/// Moves all blocks whose eigenvalues satisfy `select` to the top of `t`.
/// Returns the number of selected eigenvalues.
fn reorder<T: Scalar>(
    t: &mut Matrix<T>,
    z: &mut Matrix<T>,
    select: impl Fn(Complex<T>) -> bool,
) -> Result<usize> {
    let n = t.rows();
    let mut ks = 0;
    let mut i = 0;
    while i < n {
        let size = block_size(t, i);
        let lam = block_eigenvalues(t, i, size)[0];
        if select(lam) {
            let mut pos = i;
            while pos > ks {
                let prev = if pos >= 2 && t[(pos - 1, pos - 2)] != T::zero() {
                    2
                } else {
                    1
                };
                let cur = block_size(t, pos);
                swap_blocks(t, z, pos - prev, prev, cur)?;
                pos -= prev;
            }
            ks += size;
        }
        i += size;
    }
    // Verify that the selected eigenvalues now lead.
    let mut k_stable = 0;
    let mut seen_unselected = false;
    let mut i = 0;
    while i < n {
        let size = block_size(t, i);
        let lam = block_eigenvalues(t, i, size)[0];
        if select(lam) {
            if seen_unselected {
                return Err(Error::NoConvergence {
                    context: "Schur reordering",
                });
            }
            k_stable += size;
        } else {
            seen_unselected = true;
        }
        i += size;
    }
    Ok(k_stable)
}
