//! Small dense matrices over `f64` and `Complex<f64>`.
//!
//! Everything here is sized for the groups the lab works with (at most
//! 6x6 group matrices, 2k x 2k quadratic forms), so the algorithms favour
//! accuracy and simplicity: partial-pivot LU, diagonal Padé exponential with
//! scaling and squaring, and cyclic Jacobi for symmetric/Hermitian spectra.

use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::Float;
use smallvec::SmallVec;

pub type C64 = Complex<f64>;

/// Field operations needed by the dense routines.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn conj(self) -> Self;
    fn modulus(self) -> f64;
    fn re(self) -> f64;
    fn im(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        Float::abs(self)
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    fn modulus(self) -> f64 {
        Float::hypot(self.re, self.im)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
}

/// Row-major dense matrix. Up to 3x3 lives inline.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: SmallVec<[T; 9]>,
}

pub type RMat = Mat<f64>;
pub type CMat = Mat<C64>;

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: core::iter::repeat_n(T::zero(), rows * cols).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = SmallVec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row-major entries; panics on a length mismatch.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[T]) -> Self {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry count does not match shape"
        );
        Self {
            rows,
            cols,
            data: entries.iter().copied().collect(),
        }
    }

    pub fn diag(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let idx = i * rhs.cols + j;
                    out.data[idx] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mat_vec shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..self.cols {
                    acc += self.data[i * self.cols + j] * v[j];
                }
                acc
            })
            .collect()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> T {
        let mut t = T::zero();
        for i in 0..self.rows.min(self.cols) {
            t += self[(i, i)];
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        Float::sqrt(
            self.data
                .iter()
                .map(|x| {
                    let m = x.modulus();
                    m * m
                })
                .sum::<f64>(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0, |m, x| Float::max(m, x.modulus()))
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.sub(rhs).max_abs()
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].modulus()).sum::<f64>())
            .fold(0.0, Float::max)
    }

    /// LU factorisation with partial pivoting. `None` when singular to
    /// working precision.
    pub fn lu(&self) -> Option<Lu<T>> {
        assert!(self.is_square(), "lu needs a square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].modulus();
            for i in (k + 1)..n {
                let v = a[(i, k)].modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-300 || best / scale < 1e-15 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                for j in (k + 1)..n {
                    let v = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * v;
                }
            }
        }
        Some(Lu { lu: a, perm, sign })
    }

    pub fn inverse(&self) -> Option<Self> {
        let lu = self.lu()?;
        Some(lu.solve_mat(&Self::identity(self.rows)))
    }

    pub fn determinant(&self) -> T {
        match self.lu() {
            Some(lu) => lu.determinant(),
            None => T::zero(),
        }
    }

    /// Matrix exponential: [6/6] Padé with scaling and squaring.
    pub fn expm(&self) -> Self {
        assert!(self.is_square(), "expm needs a square matrix");
        let n = self.rows;
        let norm = self.norm_one();
        let mut squarings = 0u32;
        if norm > 0.5 {
            squarings = Float::ceil(Float::log2(norm / 0.5)) as u32;
        }
        let a = self.scale(T::from_f64(Float::powi(0.5, squarings as i32)));
        // Padé coefficients c_j = (2q-j)! q! / ((2q)! j! (q-j)!) with q = 6.
        const C: [f64; 7] = [
            1.0,
            0.5,
            5.0 / 44.0,
            1.0 / 66.0,
            1.0 / 792.0,
            1.0 / 15840.0,
            1.0 / 665280.0,
        ];
        let id = Self::identity(n);
        let mut num = id.scale(T::from_f64(C[0]));
        let mut den = id.scale(T::from_f64(C[0]));
        let mut power = id;
        for (j, &c) in C.iter().enumerate().skip(1) {
            power = power.matmul(&a);
            let term = power.scale(T::from_f64(c));
            num = num.add(&term);
            den = if j % 2 == 0 {
                den.add(&term)
            } else {
                den.sub(&term)
            };
        }
        let mut r = den
            .lu()
            .expect("Padé denominator is nonsingular for ||A|| <= 1/2")
            .solve_mat(&num);
        for _ in 0..squarings {
            r = r.matmul(&r);
        }
        r
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl RMat {
    pub fn to_complex(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| C64::new(self[(i, j)], 0.0))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.transpose()) <= tol
    }
}

impl CMat {
    pub fn real_part(&self) -> RMat {
        RMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].re)
    }

    pub fn imag_max(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0, |m, z| Float::max(m, Float::abs(z.im)))
    }

    /// Real symmetric embedding `[[Re, -Im], [Im, Re]]` of a complex matrix.
    pub fn real_embedding(&self) -> RMat {
        let (r, c) = (self.rows, self.cols);
        RMat::from_fn(2 * r, 2 * c, |i, j| {
            let z = self[(i % r, j % c)];
            match (i < r, j < c) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        })
    }

    /// Inverse of [`CMat::real_embedding`] for an embedded matrix.
    pub fn from_real_embedding(m: &RMat) -> CMat {
        let r = m.rows / 2;
        let c = m.cols / 2;
        CMat::from_fn(r, c, |i, j| C64::new(m[(i, j)], m[(i + r, j)]))
    }
}

pub struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
    sign: f64,
}

impl<T: Scalar> Lu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = x[k];
                x[i] = x[i] - self.lu[(i, k)] * v;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let v = x[k];
                x[i] = x[i] - self.lu[(i, k)] * v;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn solve_mat(&self, b: &Mat<T>) -> Mat<T> {
        let mut out = Mat::zeros(b.rows, b.cols);
        let mut col = Vec::with_capacity(b.rows);
        for j in 0..b.cols {
            col.clear();
            col.extend((0..b.rows).map(|i| b[(i, j)]));
            let x = self.solve(&col);
            for i in 0..b.rows {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    pub fn determinant(&self) -> T {
        let mut d = T::from_f64(self.sign);
        for i in 0..self.lu.rows {
            d = d * self.lu[(i, i)];
        }
        d
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Returns eigenvalues ascending and the orthogonal matrix of eigenvectors
/// (columns), so that `a = v diag(w) v^T`.
pub fn sym_eigen(a: &RMat) -> (Vec<f64>, RMat) {
    assert!(a.is_square(), "sym_eigen needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = RMat::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        let total = m.frobenius_norm();
        if off.sqrt() <= 1e-17 * total.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = RMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    (values, vectors)
}

/// Applies `f` to a real symmetric matrix through its spectrum.
pub fn sym_fn(a: &RMat, f: impl Fn(f64) -> f64) -> RMat {
    let (w, v) = sym_eigen(a);
    let n = a.rows();
    RMat::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * f(w[k]) * v[(j, k)]).sum()
    })
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn herm_eigenvalues(h: &CMat) -> Vec<f64> {
    let (w, _) = sym_eigen(&h.real_embedding());
    // The embedding doubles every eigenvalue; keep one of each pair.
    w.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Applies `f` to a Hermitian matrix; `f` may be complex-valued.
pub fn herm_fn(h: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let (w, v) = sym_eigen(&h.real_embedding());
    let n2 = w.len();
    // f(H) = A + iB; the embedding of (A + iB) is built from the real and
    // imaginary parts of f applied to the doubled spectrum.
    let fr = RMat::from_fn(n2, n2, |i, j| {
        (0..n2).map(|k| v[(i, k)] * f(w[k]).re * v[(j, k)]).sum()
    });
    let fi = RMat::from_fn(n2, n2, |i, j| {
        (0..n2).map(|k| v[(i, k)] * f(w[k]).im * v[(j, k)]).sum()
    });
    let a = CMat::from_real_embedding(&fr);
    let b = CMat::from_real_embedding(&fi);
    a.zip_with(&b, |x, y| x + C64::new(0.0, 1.0) * y)
}

/// Pairwise (cascade) summation in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().fold(0.0, |a, &b| a + b),
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot(theta: f64) -> RMat {
        RMat::from_row_major(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
    }

    #[test]
    fn expm_of_generator_is_rotation() {
        let x = RMat::from_row_major(2, 2, &[0.0, -1.3, 1.3, 0.0]);
        assert!(x.expm().max_abs_diff(&rot(1.3)) < 1e-14);
        let big = x.scale(7.0);
        assert!(big.expm().max_abs_diff(&rot(9.1)) < 1e-12);
    }

    #[test]
    fn expm_of_nilpotent() {
        let n = RMat::from_row_major(3, 3, &[0.0, 1.0, 2.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        let want = RMat::from_row_major(3, 3, &[1.0, 1.0, 3.5, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0]);
        assert!(n.expm().max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn lu_solves_and_inverts() {
        let a = RMat::from_row_major(3, 3, &[4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 5.0]);
        let inv = a.inverse().unwrap();
        assert!(a.matmul(&inv).max_abs_diff(&RMat::identity(3)) < 1e-14);
        let singular = RMat::from_row_major(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(singular.lu().is_none());
        assert!((a.determinant() - 44.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = RMat::from_row_major(3, 3, &[2.0, -1.0, 0.3, -1.0, 2.0, -1.0, 0.3, -1.0, 2.0]);
        let (w, v) = sym_eigen(&a);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        let back = RMat::from_fn(3, 3, |i, j| {
            (0..3).map(|k| v[(i, k)] * w[k] * v[(j, k)]).sum()
        });
        assert!(back.max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn hermitian_spectrum_and_function() {
        let i = C64::new(0.0, 1.0);
        let h = CMat::from_row_major(
            2,
            2,
            &[C64::new(1.0, 0.0), -i * 2.0, i * 2.0, C64::new(1.0, 0.0)],
        );
        let w = herm_eigenvalues(&h);
        assert!((w[0] + 1.0).abs() < 1e-14 && (w[1] - 3.0).abs() < 1e-14);
        let sq = herm_fn(&h, |x| C64::new(x * x, 0.0));
        assert!(sq.max_abs_diff(&h.matmul(&h)) < 1e-13);
    }
}
