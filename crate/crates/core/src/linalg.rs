//! Dense and sparse complex linear algebra for small square matrices.
//!
//! Everything here works on row-major square matrices of modest size (the
//! largest object in the crate is the 256×256 Liouvillian of a 16-level
//! system), so the algorithms are plain textbook ones: cyclic Jacobi for
//! Hermitian eigenproblems and LU with partial pivoting for linear solves.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use num_traits::Zero;
#[allow(unused_imports)]
use num_traits::Float;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from row-major data. Panics if `data.len()` is not a
    /// perfect square.
    pub fn from_row_major(data: Vec<C64>) -> Self {
        let n = isqrt(data.len());
        assert_eq!(n * n, data.len(), "row-major data must describe a square matrix");
        Self { n, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| {
            assert_eq!(rows[i].len(), n, "rows must be square");
            C64::new(rows[i][j], 0.0)
        })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matmul");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.n, rhs.n);
        Self::from_fn(n * m, |i, j| self[(i / m, j / m)] * rhs[(i % m, j % m)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Element-wise max |M − M†|.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum; an upper bound on the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl Add<&CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in add");
        CMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.n, rhs.n, "dimension mismatch in add");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Sub<&CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in sub");
        CMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul<&CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

fn isqrt(len: usize) -> usize {
    let mut n = (len as f64).sqrt() as usize;
    while n * n > len {
        n -= 1;
    }
    while (n + 1) * (n + 1) <= len {
        n += 1;
    }
    n
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨u|v⟩
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors (columns) of
/// a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Cyclic complex Jacobi eigensolver.
///
/// Only the Hermitian part of `a` is used. Eigenvalues come back in ascending
/// order (stable with respect to the original diagonal position on exact
/// ties), and each eigenvector is rephased so that its largest-magnitude
/// component is real and positive, picking the lowest index among components
/// of equal magnitude.
pub fn eigh(a: &CMatrix) -> HermitianEigen {
    let n = a.dim();
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();
    if n > 1 && scale > 0.0 {
        let tol = 1e-15 * scale;
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
                .map(|(p, q)| m[(p, q)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut m, &mut v, p, q, scale);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap_or(core::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let mut vec = v.column(src);
        fix_phase(&mut vec);
        for (row, z) in vec.into_iter().enumerate() {
            vectors[(row, col)] = z;
        }
    }
    HermitianEigen { values, vectors }
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &CMatrix) -> Vec<f64> {
    eigh(a).values
}

fn jacobi_rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize, scale: f64) {
    let n = m.dim();
    let apq = m[(p, q)];
    let r = apq.norm();
    if r <= 1e-300 || r <= f64::EPSILON * 1e-3 * scale {
        m[(p, q)] = ZERO;
        m[(q, p)] = ZERO;
        return;
    }
    // Rotate the phase out of a_pq: column q scaled by w, row q by conj(w).
    let w = (apq / r).conj();
    for k in 0..n {
        m[(k, q)] *= w;
        v[(k, q)] *= w;
    }
    let wc = w.conj();
    for k in 0..n {
        m[(q, k)] *= wc;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = 0.5 * (2.0 * r).atan2(aqq - app);
    let (s, c) = theta.sin_cos();
    for k in 0..n {
        let (akp, akq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = akp * c - akq * s;
        m[(k, q)] = akp * s + akq * c;
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * c - vkq * s;
        v[(k, q)] = vkp * s + vkq * c;
    }
    for k in 0..n {
        let (apk, aqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = apk * c - aqk * s;
        m[(q, k)] = apk * s + aqk * c;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
}

/// Rephase so that the largest-magnitude component is real positive (lowest
/// index wins among near-equal magnitudes).
pub fn fix_phase(v: &mut [C64]) {
    let max = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = C64::new(v[pivot].re, 0.0);
}

/// Error from [`lu_solve`]: the pivot ratio fell below the tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Singular {
    pub pivot_ratio: f64,
}

/// Solves `a x = b` by LU with partial pivoting.
///
/// Fails when the smallest pivot is below `rel_tol` times the largest, which
/// is how callers detect a rank-deficient system.
pub fn lu_solve(mut a: CMatrix, mut b: Vec<C64>, rel_tol: f64) -> Result<Vec<C64>, Singular> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let mut max_pivot: f64 = 0.0;
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, a[(r, col)].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        max_pivot = max_pivot.max(mag);
        min_pivot = min_pivot.min(mag);
        if mag == 0.0 {
            return Err(Singular { pivot_ratio: 0.0 });
        }
        if piv != col {
            for k in 0..n {
                let tmp = a[(col, k)];
                a[(col, k)] = a[(piv, k)];
                a[(piv, k)] = tmp;
            }
            b.swap(col, piv);
        }
        let inv = ONE / a[(col, col)];
        for r in (col + 1)..n {
            let f = a[(r, col)] * inv;
            if f.is_zero() {
                continue;
            }
            a[(r, col)] = ZERO;
            for k in (col + 1)..n {
                let t = a[(col, k)];
                a[(r, k)] -= f * t;
            }
            let bc = b[col];
            b[r] -= f * bc;
        }
    }
    let ratio = if max_pivot > 0.0 { min_pivot / max_pivot } else { 0.0 };
    if ratio < rel_tol {
        return Err(Singular { pivot_ratio: ratio });
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[(row, k)] * b[k];
        }
        b[row] = acc / a[(row, row)];
    }
    Ok(b)
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet out of bounds");
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let keep: Vec<bool> = vals.iter().map(|v| !v.is_zero()).collect();
        let mut k_cols = Vec::with_capacity(cols.len());
        let mut k_vals = Vec::with_capacity(vals.len());
        for (i, keep) in keep.into_iter().enumerate() {
            if keep {
                row_ptr[rows[i] + 1] += 1;
                k_cols.push(cols[i]);
                k_vals.push(vals[i]);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols: k_cols, vals: k_vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y = A x
    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        for (i, out) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] += self.vals[k];
            }
        }
        m
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
