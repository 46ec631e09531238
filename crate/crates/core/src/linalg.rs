//! Small dense/sparse complex matrix kernels used by the trace evaluators.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<C64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
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
        Mat { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Mat { n, data })
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Mat::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        let n = self.n;
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Mat {
        Mat {
            n: self.n,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Mat {
        Mat {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.n, rhs.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = Mat::zeros(n);
        if n == 0 {
            return out;
        }
        let ld = n as isize;
        // SAFETY: Complex64 is repr(C) { re, im }, layout-compatible with
        // [f64; 2]; all three buffers hold n*n row-major entries.
        unsafe {
            matrixmultiply::zgemm(
                matrixmultiply::CGemmOption::Standard,
                matrixmultiply::CGemmOption::Standard,
                n,
                n,
                n,
                [1.0, 0.0],
                self.data.as_ptr() as *const [f64; 2],
                ld,
                1,
                rhs.data.as_ptr() as *const [f64; 2],
                ld,
                1,
                [0.0, 0.0],
                out.data.as_mut_ptr() as *mut [f64; 2],
                ld,
                1,
            );
        }
        out
    }

    /// Straightforward triple loop, kept as a reference for the gemm path.
    pub fn matmul_naive(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.n, rhs.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    /// `Tr(self * rhs)` without forming the product.
    pub fn trace_of_product(&self, rhs: &Mat) -> C64 {
        assert_eq!(self.n, rhs.n, "trace dimension mismatch");
        let n = self.n;
        let mut acc = ZERO;
        for i in 0..n {
            let row = self.row(i);
            for (j, &a) in row.iter().enumerate() {
                acc += a * rhs.data[j * n + i];
            }
        }
        acc
    }

    pub fn is_hermitian_exact(&self) -> bool {
        (0..self.n).all(|i| (i..self.n).all(|j| self[(i, j)] == self[(j, i)].conj()))
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Power-iteration estimate of the operator norm (largest singular value).
    pub fn op_norm_estimate(&self, iterations: usize) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let adj = self.adjoint();
        // deterministic, non-degenerate start vector
        let mut v: Vec<C64> = (0..n)
            .map(|i| C64::new(1.0 + (i as f64 * 0.618_034).fract(), 0.25))
            .collect();
        let mut estimate = 0.0;
        for _ in 0..iterations {
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|z| *z /= norm);
            let w = adj.apply(&self.apply(&v));
            let lambda = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            estimate = lambda.sqrt();
            v = w;
        }
        estimate
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|z| **z != ZERO).count()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Compressed sparse rows, for right-multiplying dense samples by structured
/// deterministic matrices (diagonals, banded circulants).
#[derive(Clone, Debug)]
pub struct Csr {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    pub fn from_dense(m: &Mat) -> Csr {
        let n = m.dim();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for i in 0..n {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != ZERO {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Csr {
            n,
            row_start,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (s, e) = (self.row_start[k], self.row_start[k + 1]);
        self.cols[s..e].iter().copied().zip(self.vals[s..e].iter().copied())
    }

    /// `dense * self`
    pub fn left_mul(&self, dense: &Mat) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            let src = dense.row(i);
            let dst = out.row_mut(i);
            for (k, &x) in src.iter().enumerate() {
                if x == ZERO {
                    continue;
                }
                for (j, s) in self.row(k) {
                    dst[j] += x * s;
                }
            }
        }
        out
    }

    /// `dense * self` for a real dense factor and real values.
    pub fn left_mul_real(&self, dense: &RMat) -> RMat {
        let n = self.n;
        let mut out = RMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = dense.data[i * n + k];
                if x == 0.0 {
                    continue;
                }
                for (j, s) in self.row(k) {
                    out.data[i * n + j] += x * s.re;
                }
            }
        }
        out
    }

    /// `Tr(dense * self)`
    pub fn trace_left(&self, dense: &Mat) -> C64 {
        let mut acc = ZERO;
        for k in 0..self.n {
            for (i, s) in self.row(k) {
                acc += dense[(i, k)] * s;
            }
        }
        acc
    }
}

/// Real square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RMat {
    n: usize,
    data: Vec<f64>,
}

impl RMat {
    pub fn zeros(n: usize) -> Self {
        RMat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_real_parts(m: &Mat) -> Self {
        RMat {
            n: m.dim(),
            data: m.as_slice().iter().map(|z| z.re).collect(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn to_complex(&self) -> Mat {
        Mat {
            n: self.n,
            data: self.data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn matmul(&self, rhs: &RMat) -> RMat {
        assert_eq!(self.n, rhs.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = RMat::zeros(n);
        if n == 0 {
            return out;
        }
        let ld = n as isize;
        // SAFETY: all three buffers hold n*n row-major entries.
        unsafe {
            matrixmultiply::dgemm(
                n,
                n,
                n,
                1.0,
                self.data.as_ptr(),
                ld,
                1,
                rhs.data.as_ptr(),
                ld,
                1,
                0.0,
                out.data.as_mut_ptr(),
                ld,
                1,
            );
        }
        out
    }

    pub fn trace_of_product(&self, rhs: &RMat) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.data[i * n + j] * rhs.data[j * n + i];
            }
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }
}

/// Dense working matrix that stays real as long as its inputs are.
#[derive(Clone, Debug, PartialEq)]
pub enum Work {
    Real(RMat),
    Complex(Mat),
}

impl Work {
    pub fn dim(&self) -> usize {
        match self {
            Work::Real(r) => r.dim(),
            Work::Complex(c) => c.dim(),
        }
    }

    pub fn to_complex(&self) -> Mat {
        match self {
            Work::Real(r) => r.to_complex(),
            Work::Complex(c) => c.clone(),
        }
    }

    pub fn matmul(&self, rhs: &Work) -> Work {
        match (self, rhs) {
            (Work::Real(a), Work::Real(b)) => Work::Real(a.matmul(b)),
            (Work::Complex(a), Work::Complex(b)) => Work::Complex(a.matmul(b)),
            (Work::Real(a), Work::Complex(b)) => Work::Complex(a.to_complex().matmul(b)),
            (Work::Complex(a), Work::Real(b)) => Work::Complex(a.matmul(&b.to_complex())),
        }
    }

    pub fn trace(&self) -> C64 {
        match self {
            Work::Real(r) => C64::new(r.trace(), 0.0),
            Work::Complex(c) => c.trace(),
        }
    }

    pub fn trace_of_product(&self, rhs: &Work) -> C64 {
        match (self, rhs) {
            (Work::Real(a), Work::Real(b)) => C64::new(a.trace_of_product(b), 0.0),
            (Work::Complex(a), Work::Complex(b)) => a.trace_of_product(b),
            (Work::Real(a), Work::Complex(b)) => mixed_trace(a, b),
            (Work::Complex(a), Work::Real(b)) => mixed_trace(b, a),
        }
    }
}

// Tr(A B) = Tr(B A) for real A, complex B
fn mixed_trace(a: &RMat, b: &Mat) -> C64 {
    let n = a.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += b[(j, i)] * a.get(i, j);
        }
    }
    acc
}

/// Deterministic right factor of a Monte Carlo product `X·D`.
#[derive(Clone, Debug)]
pub enum Operand {
    Identity,
    Sparse { csr: Csr, real: bool },
    Dense(Work),
}

impl Operand {
    /// Sparse when at most `max_row_fill` nonzeros per row on average.
    pub fn from_mat(m: &Mat, max_row_fill: usize) -> Operand {
        if *m == Mat::identity(m.dim()) {
            return Operand::Identity;
        }
        let real = m.is_real();
        if m.nnz() <= max_row_fill * m.dim() {
            Operand::Sparse {
                csr: Csr::from_dense(m),
                real,
            }
        } else if real {
            Operand::Dense(Work::Real(RMat::from_real_parts(m)))
        } else {
            Operand::Dense(Work::Complex(m.clone()))
        }
    }

    /// `x · self`
    pub fn right_apply(&self, x: &Work) -> Work {
        match (self, x) {
            (Operand::Identity, _) => x.clone(),
            (Operand::Dense(d), _) => x.matmul(d),
            (Operand::Sparse { csr, real: true }, Work::Real(r)) => Work::Real(csr.left_mul_real(r)),
            (Operand::Sparse { csr, .. }, Work::Complex(c)) => Work::Complex(csr.left_mul(c)),
            (Operand::Sparse { csr, .. }, Work::Real(r)) => Work::Complex(csr.left_mul(&r.to_complex())),
        }
    }

    /// `Tr(x · self)`
    pub fn trace_right(&self, x: &Work) -> C64 {
        match (self, x) {
            (Operand::Identity, _) => x.trace(),
            (Operand::Dense(d), _) => x.trace_of_product(d),
            (Operand::Sparse { csr, .. }, Work::Complex(c)) => csr.trace_left(c),
            (Operand::Sparse { csr, .. }, Work::Real(r)) => {
                let mut acc = ZERO;
                for k in 0..csr.n {
                    for (i, s) in csr.row(k) {
                        acc += s * r.get(i, k);
                    }
                }
                acc
            }
        }
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier(acc: &mut (f64, f64), x: f64) {
    let (sum, c) = *acc;
    let t = sum + x;
    let c = if sum.abs() >= x.abs() {
        c + ((sum - t) + x)
    } else {
        c + ((x - t) + sum)
    };
    *acc = (t, c);
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: C64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

impl FromIterator<C64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for z in iter {
            s.add(z);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> Mat {
        Mat::from_fn(n, |i, j| C64::new((i * 3 + j) as f64 - 2.0, (i as f64) - (j as f64) * 0.5))
    }

    #[test]
    fn sparse_and_dense_products_agree() {
        let a = sample(5);
        let mut s = Mat::zeros(5);
        s[(0, 1)] = C64::new(2.0, 1.0);
        s[(3, 3)] = C64::new(-1.0, 0.0);
        s[(4, 0)] = C64::new(0.5, 0.0);
        let csr = Csr::from_dense(&s);
        assert!(a.matmul(&s).max_abs_diff(&a.matmul_naive(&s)) < 1e-12);
        assert!(a.matmul(&s).max_abs_diff(&csr.left_mul(&a)) < 1e-12);
        assert!((a.matmul(&s).trace() - csr.trace_left(&a)).norm() < 1e-12);
        assert!((a.trace_of_product(&s) - a.matmul(&s).trace()).norm() < 1e-12);
    }

    #[test]
    fn work_paths_agree() {
        let a = sample(6);
        let r = Mat::from_fn(6, |i, j| C64::new((i as f64 - 2.5) * (j as f64 + 1.0), 0.0));
        let wr = Work::Real(RMat::from_real_parts(&r));
        let wc = Work::Complex(a.clone());
        let full = a.matmul(&r);
        assert!(wc.matmul(&wr).to_complex().max_abs_diff(&full) < 1e-9);
        assert!(wr.matmul(&wr).to_complex().max_abs_diff(&r.matmul_naive(&r)) < 1e-9);
        assert!((wr.trace_of_product(&wc) - r.matmul(&a).trace()).norm() < 1e-9);
        let mut d = Mat::zeros(6);
        d[(1, 2)] = C64::new(2.0, 0.0);
        d[(5, 5)] = C64::new(-1.0, 0.0);
        let op = Operand::from_mat(&d, 2);
        assert!(matches!(op, Operand::Sparse { real: true, .. }));
        assert!(op.right_apply(&wr).to_complex().max_abs_diff(&r.matmul(&d)) < 1e-12);
        assert!((op.trace_right(&wr) - r.matmul(&d).trace()).norm() < 1e-12);
        assert!((op.trace_right(&wc) - a.matmul(&d).trace()).norm() < 1e-12);
        assert!(matches!(Operand::from_mat(&Mat::identity(3), 2), Operand::Identity));
    }

    #[test]
    fn norm_estimate_of_diagonal() {
        let d = Mat::diagonal(&[C64::new(1.0, 0.0), C64::new(-3.0, 0.0), C64::new(0.5, 0.0)]);
        assert!((d.op_norm_estimate(200) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let s: CompensatedSum = [1e16, 1.0, -1e16]
            .iter()
            .map(|&x| C64::new(x, 0.0))
            .collect();
        assert_eq!(s.value(), C64::new(1.0, 0.0));
    }
}
