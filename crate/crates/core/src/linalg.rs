//! Small dense linear algebra: row-major matrices, Jacobi SVD least squares,
//! symmetric Jacobi eigenvalues and Cholesky. Sizes in this crate are modest
//! (thousands at most), so everything here is straightforward `O(n^3)` code.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ * y`.
    pub fn tr_matvec(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..self.rows {
            let row = self.row(i);
            for (a, &ra) in row.iter().enumerate() {
                if ra == T::zero() {
                    continue;
                }
                let grow = g.row_mut(a);
                for b in a..n {
                    grow[b] += ra * row[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                g.data[a * n + b] = g.data[b * n + a];
            }
        }
        g
    }

    /// Columns `indices` gathered into column-major storage.
    pub fn gather_columns(&self, indices: &[usize]) -> Vec<Vec<T>> {
        indices.iter().map(|&j| self.column(j)).collect()
    }

    pub fn column_norms(&self) -> Vec<T> {
        let mut sq = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (s, &a) in sq.iter_mut().zip(self.row(i)) {
                *s += a * a;
            }
        }
        sq.into_iter().map(Float::sqrt).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm_sq<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

pub fn norm<T: Real>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

/// Pairwise (cascade) summation; the result depends only on the order of
/// `values`, never on how work was scheduled.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().copied().fold(T::zero(), |a, b| a + b);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_mean<T: Real>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    pairwise_sum(values) / T::from_usize_lossy(values.len())
}

/// Thin SVD of a tall-or-wide matrix given by its columns, computed with
/// one-sided (Hestenes) Jacobi rotations.
#[derive(Debug, Clone)]
pub struct ColumnSvd<T> {
    /// `U Σ`, one vector per column of the input.
    scaled_left: Vec<Vec<T>>,
    /// Right singular vectors, column `i` is `right[i]`.
    right: Vec<Vec<T>>,
    singular: Vec<T>,
}

impl<T: Real> ColumnSvd<T> {
    pub fn new(columns: &[Vec<T>]) -> Self {
        let n = columns.len();
        let mut w: Vec<Vec<T>> = columns.to_vec();
        let mut v: Vec<Vec<T>> = (0..n)
            .map(|i| {
                let mut e = vec![T::zero(); n];
                e[i] = T::one();
                e
            })
            .collect();
        let eps = T::epsilon();
        // Columns driven to rounding level (rank deficiency, n > m) are left
        // alone; rotating them against each other never converges.
        let frob_sq = w.iter().fold(T::zero(), |acc, c| acc + norm_sq(c));
        let negligible = eps * eps * frob_sq;
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let alpha = norm_sq(&w[p]);
                    let beta = norm_sq(&w[q]);
                    if alpha <= negligible || beta <= negligible {
                        continue;
                    }
                    let gamma = dot(&w[p], &w[q]);
                    if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (gamma + gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut w, p, q, c, s);
                    rotate(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let singular = w.iter().map(|c| norm(c)).collect();
        Self {
            scaled_left: w,
            right: v,
            singular,
        }
    }

    pub fn singular_values(&self) -> &[T] {
        &self.singular
    }

    /// Minimum-norm least-squares solution `x = A† b`, discarding singular
    /// values below `rank_tol * σ_max`. Returns the solution and the
    /// numerical rank.
    pub fn solve(&self, b: &[T], rank_tol: T) -> (Vec<T>, usize) {
        let n = self.singular.len();
        let smax = self
            .singular
            .iter()
            .copied()
            .fold(T::zero(), |a, s| if s > a { s } else { a });
        let mut x = vec![T::zero(); n];
        let mut rank = 0;
        if smax == T::zero() {
            return (x, 0);
        }
        let cutoff = rank_tol * smax;
        for i in 0..n {
            let s = self.singular[i];
            if s <= cutoff || s == T::zero() {
                continue;
            }
            rank += 1;
            // u_i = w_i / s, coefficient = u_iᵀ b / s = w_iᵀ b / s²
            let coeff = dot(&self.scaled_left[i], b) / (s * s);
            for (xk, &vk) in x.iter_mut().zip(&self.right[i]) {
                *xk += coeff * vk;
            }
        }
        (x, rank)
    }
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Least squares over the given columns with a rank cutoff.
pub fn least_squares<T: Real>(columns: &[Vec<T>], b: &[T], rank_tol: T) -> (Vec<T>, usize) {
    if columns.is_empty() {
        return (Vec::new(), 0);
    }
    ColumnSvd::new(columns).solve(b, rank_tol)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi, ascending.
pub fn symmetric_eigenvalues<T: Real>(a: &DenseMatrix<T>) -> Vec<T> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "symmetric_eigenvalues needs a square matrix");
    let mut m = a.clone();
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += m[(i, i)] * m[(i, i)];
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off == T::zero() || off <= eps * eps * diag {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
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
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    ev
}

/// Square-root-free Cholesky factorization `A = L·D·Lᵀ` (unit lower `L`,
/// diagonal `D`) of a symmetric positive-definite matrix. Avoiding square
/// roots keeps exactly representable systems exact.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: DenseMatrix<T>,
    diag: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factorizes `a`. Fails when a pivot drops to or below
    /// `pivot_tol * max_diag`.
    pub fn new(a: &DenseMatrix<T>, pivot_tol: T) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::Dimension("cholesky needs a square matrix".into()));
        }
        let max_diag = (0..n)
            .map(|i| a[(i, i)].abs())
            .fold(T::zero(), |m, v| if v > m { v } else { m });
        let floor = pivot_tol * max_diag;
        let mut l = DenseMatrix::identity(n);
        let mut diag = vec![T::zero(); n];
        // ld[k] = L[j, k]·D[k] for the current column j.
        let mut ld = vec![T::zero(); n];
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                ld[k] = l[(j, k)] * diag[k];
                d -= ld[k] * l[(j, k)];
            }
            if !(d > floor) || d <= T::zero() {
                return Err(Error::Conditioning(format!(
                    "matrix is not numerically positive definite (pivot {j} = {d:e})"
                )));
            }
            diag[j] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * ld[k];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { lower: l, diag })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lower.rows();
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s;
        }
        for (yi, &di) in y.iter_mut().zip(&self.diag) {
            *yi /= di;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s;
        }
        y
    }
}
