//! Small dense complex matrices and a complex Schur eigensolver.
//!
//! Sector blocks are at most a few dozen rows, so everything here is plain
//! row-major storage with O(n^3) algorithms.

use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{cplx, re, Real, C};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from row-major entries; fails if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {rows}x{cols} = {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diag(d: &[C<T>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
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

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(C::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// Row vector times matrix.
    pub fn vecmat(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.rows, x.len());
        (0..self.cols)
            .map(|j| (0..self.rows).fold(C::zero(), |acc, i| acc + x[i] * self[(i, j)]))
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn norm_fro(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).fold(C::zero(), |acc, i| acc + self[(i, i)])
    }

    /// Largest entry of |A - A^H|.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(C::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn vec_norm<T: Real>(a: &[C<T>]) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Complex Schur form A = Z T Z^H with T upper triangular and Z unitary.
#[derive(Clone, Debug)]
pub struct Schur<T: Real> {
    pub t: CMatrix<T>,
    pub z: CMatrix<T>,
}

/// Householder reduction to upper Hessenberg form, accumulating the transform.
fn hessenberg<T: Real>(a: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    if n < 3 {
        return (h, q);
    }
    for k in 0..n - 2 {
        let x: Vec<C<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = vec_norm(&x);
        if xnorm == T::zero() {
            continue;
        }
        let phase = if x[0].norm() > T::zero() { x[0] / re(x[0].norm()) } else { C::one() };
        let alpha = -phase * re(xnorm);
        let mut v = x;
        v[0] -= alpha;
        let vnorm = vec_norm(&v);
        if vnorm == T::zero() {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= re(vnorm);
        }
        let two = re(T::lit(2.0));
        // H <- P H with P = I - 2 v v^H acting on rows k+1..n
        for j in 0..n {
            let s = v.iter().enumerate().fold(C::zero(), |acc, (r, vr)| acc + vr.conj() * h[(k + 1 + r, j)]);
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r, j)] -= two * *vr * s;
            }
        }
        // H <- H P and Q <- Q P on columns k+1..n
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let s = v.iter().enumerate().fold(C::zero(), |acc, (r, vr)| acc + m[(i, k + 1 + r)] * *vr);
                for (r, vr) in v.iter().enumerate() {
                    m[(i, k + 1 + r)] -= two * s * vr.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C::zero();
        }
    }
    (h, q)
}

/// Givens rotation (c, s) with [c s; -s* c] (a, b)^T = (r, 0)^T.
fn givens<T: Real>(a: C<T>, b: C<T>) -> (T, C<T>) {
    let an = a.norm();
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == T::zero() {
        return (T::one(), C::zero());
    }
    if an == T::zero() {
        return (T::zero(), C::one());
    }
    let phase = a / re(an);
    (an / r, phase * b.conj() / re(r))
}

fn wilkinson_shift<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> C<T> {
    let half = re(T::lit(0.5));
    let tr = (a + d) * half;
    let disc = ((a - d) * half * ((a - d) * half) + b * c).sqrt();
    let l1 = tr + disc;
    let l2 = tr - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Shifted QR iteration on a Hessenberg matrix.
pub fn schur<T: Real>(a: &CMatrix<T>) -> Result<Schur<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("schur needs a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let (mut h, mut z) = hessenberg(a);
    if n <= 1 {
        return Ok(Schur { t: h, z });
    }
    let eps = T::epsilon();
    let scale = a.max_abs().max(T::min_positive_value());
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n.max(4);
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == T::zero() { scale } else { s };
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = C::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_total {
            return Err(Error::NoConvergence(format!("complex QR did not converge for a {n}x{n} matrix")));
        }
        let mu = if iter % 11 == 0 {
            h[(hi, hi)] + re(h[(hi, hi - 1)].norm() * T::lit(0.75))
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * re(c) + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * re(c);
            }
            h[(k + 1, k)] = C::zero();
            rots.push((k, c, s));
        }
        for &(k, c, s) in &rots {
            let top = (k + 2).min(hi + 1);
            for i in 0..top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * re(c) + y * s.conj();
                h[(i, k + 1)] = -x * s + y * re(c);
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = x * re(c) + y * s.conj();
                z[(i, k + 1)] = -x * s + y * re(c);
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = C::zero();
        }
    }
    Ok(Schur { t: h, z })
}

/// Right eigenvectors of A from its Schur form, unit 2-norm, in diagonal order of T.
pub fn schur_eigenvectors<T: Real>(s: &Schur<T>) -> Vec<Vec<C<T>>> {
    let n = s.t.rows();
    let tiny = T::epsilon() * s.t.max_abs().max(T::min_positive_value());
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let lam = s.t[(k, k)];
        let mut y = vec![C::zero(); n];
        y[k] = C::one();
        for i in (0..k).rev() {
            let mut acc = C::<T>::zero();
            for j in i + 1..=k {
                acc += s.t[(i, j)] * y[j];
            }
            let mut den = s.t[(i, i)] - lam;
            if den.norm() < tiny {
                den = re(tiny);
            }
            y[i] = -acc / den;
        }
        let mut x = s.z.matvec(&y);
        let nrm = vec_norm(&x);
        for xi in x.iter_mut() {
            *xi /= re(nrm);
        }
        out.push(x);
    }
    out
}

/// Solve A x = b by LU with partial pivoting.
pub fn solve<T: Real>(a: &CMatrix<T>, b: &[C<T>]) -> Result<Vec<C<T>>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(Error::Dimension("solve: shape mismatch".into()));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[(i, k)].norm().partial_cmp(&m[(j, k)].norm()).unwrap())
            .unwrap();
        if m[(p, k)].norm() == T::zero() {
            return Err(Error::Singular("solve: singular matrix".into()));
        }
        if p != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = tmp;
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let v = m[(k, j)];
                m[(i, j)] -= f * v;
            }
            let v = x[k];
            x[i] -= f * v;
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= m[(i, j)] * x[j];
        }
        x[i] = acc / m[(i, i)];
    }
    Ok(x)
}

/// Eigen-decomposition of a Hermitian matrix: ascending real eigenvalues and
/// orthonormal eigenvector columns. Degenerate eigenvalues are fine.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> Result<(Vec<T>, CMatrix<T>)> {
    let s = schur(a)?;
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.t[(i, i)].re.partial_cmp(&s.t[(j, j)].re).unwrap().then(i.cmp(&j)));
    let vals = order.iter().map(|&i| s.t[(i, i)].re).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| s.z[(r, order[c])]);
    Ok((vals, vecs))
}

#[allow(dead_code)]
pub(crate) fn c<T: Real>(re_: f64, im: f64) -> C<T> {
    cplx(T::lit(re_), T::lit(im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, seed: u64) -> CMatrix<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        CMatrix::from_fn(n, n, |_, _| cplx(next(), next()))
    }

    #[test]
    fn schur_reconstructs() {
        for n in 1..9 {
            let a = random_matrix(n, n as u64 + 3);
            let s = schur(&a).unwrap();
            let back = s.z.matmul(&s.t).matmul(&s.z.adjoint());
            assert!(back.sub(&a).norm_fro() < 1e-12 * a.norm_fro().max(1.0), "n={n}");
            let zz = s.z.adjoint().matmul(&s.z);
            assert!(zz.sub(&CMatrix::identity(n)).norm_fro() < 1e-13);
            for i in 1..n {
                for j in 0..i {
                    assert_eq!(s.t[(i, j)], C::zero());
                }
            }
        }
    }

    #[test]
    fn eigenvectors_satisfy_equation() {
        let a = random_matrix(6, 11);
        let s = schur(&a).unwrap();
        let vecs = schur_eigenvectors(&s);
        for (k, v) in vecs.iter().enumerate() {
            let av = a.matvec(v);
            let lam = s.t[(k, k)];
            let res: f64 = av.iter().zip(v).map(|(x, y)| (x - lam * y).norm_sqr()).sum::<f64>().sqrt();
            assert!(res < 1e-12, "residual {res}");
        }
    }

    #[test]
    fn hermitian_degenerate() {
        let a = CMatrix::from_diag(&[c::<f64>(2.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&a).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 2.0]);
        assert!(vecs.adjoint().matmul(&vecs).sub(&CMatrix::identity(3)).norm_fro() < 1e-14);
    }

    #[test]
    fn solve_roundtrip() {
        let a = random_matrix(5, 2);
        let x: Vec<C<f64>> = (0..5).map(|i| cplx(i as f64, 1.0 - i as f64)).collect();
        let b = a.matvec(&x);
        let y = solve(&a, &b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn schur_f32() {
        let a: CMatrix<f32> = CMatrix::from_fn(4, 4, |i, j| cplx((i * 3 + j) as f32 * 0.1, (i as f32 - j as f32) * 0.2));
        let s = schur(&a).unwrap();
        let back = s.z.matmul(&s.t).matmul(&s.z.adjoint());
        assert!(back.sub(&a).norm_fro() < 1e-5);
    }
}
