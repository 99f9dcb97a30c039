//! Base learner: multi-output ridge regression, and the compressed-label
//! training loop built on it.
//!
//! All `m` outputs share one Cholesky factorization of `XᵀX + λI`. There is
//! no intercept; append a constant feature if one is wanted.

use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::MultiLabelDataset;
use crate::error::{data, Error, Result};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::scalar::Real;
use crate::sensing::{read_array, CompressionMatrix};
use crate::sparse::FeatureVector;

/// Pivot floor (relative to the largest diagonal) for the normal matrix.
pub const NORMAL_PIVOT_TOLERANCE: f64 = 1e-10;

/// `m` linear regressors over `p` features; column `i` of `weights` is `h_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorBank<T> {
    weights: DenseMatrix<T>,
    ridge_lambda: T,
    trained_on: usize,
}

impl<T: Real> RegressorBank<T> {
    pub fn from_weights(
        weights: DenseMatrix<T>,
        ridge_lambda: T,
        trained_on: usize,
    ) -> Result<Self> {
        if !weights.is_finite() {
            return Err(data("regressor weights must be finite"));
        }
        Ok(Self {
            weights,
            ridge_lambda,
            trained_on,
        })
    }

    pub fn p(&self) -> usize {
        self.weights.rows()
    }

    pub fn m(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &DenseMatrix<T> {
        &self.weights
    }

    pub fn ridge_lambda(&self) -> T {
        self.ridge_lambda
    }

    pub fn trained_on(&self) -> usize {
        self.trained_on
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.p() as u64).to_le_bytes())?;
        w.write_all(&(self.m() as u64).to_le_bytes())?;
        w.write_all(&self.ridge_lambda.to_f64_lossy().to_le_bytes())?;
        w.write_all(&(self.trained_on as u64).to_le_bytes())?;
        for j in 0..self.m() {
            for i in 0..self.p() {
                w.write_all(&self.weights[(i, j)].to_f64_lossy().to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let magic: [u8; 4] = read_array(&mut r)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Format(
                "not a regressor bank file (bad magic)".into(),
            ));
        }
        let version = u16::from_le_bytes(read_array(&mut r)?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model file version {version}"
            )));
        }
        let p = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let m = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let lambda = f64::from_le_bytes(read_array(&mut r)?);
        let trained_on = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let count = p
            .checked_mul(m)
            .ok_or_else(|| Error::Format("model dimensions overflow".into()))?;
        // Column-major on disk; capacity capped against corrupt headers.
        let mut column_major = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            column_major.push(T::lit(f64::from_le_bytes(read_array(&mut r)?)));
        }
        let weights = DenseMatrix::from_fn(p, m, |i, j| column_major[j * p + i]);
        Self::from_weights(weights, T::lit(lambda), trained_on)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::read(path)?.as_slice())
    }
}

const MODEL_MAGIC: &[u8; 4] = b"LSRB";
const FORMAT_VERSION: u16 = 1;

/// Ridge regression `W = (XᵀX + λI)⁻¹ XᵀZ` for an `n×p` design and `n×m`
/// targets.
pub fn fit_ridge<T: Real>(
    x: &DenseMatrix<T>,
    z: &DenseMatrix<T>,
    lambda: T,
) -> Result<RegressorBank<T>> {
    let n = x.rows();
    if n == 0 {
        return Err(data("ridge regression needs at least one example"));
    }
    if z.rows() != n {
        return Err(data(format!(
            "design has {n} rows but targets have {}",
            z.rows()
        )));
    }
    if !x.is_finite() || !z.is_finite() {
        return Err(data("design and targets must be finite"));
    }
    let gram = x.gram();
    let rhs = x.transpose().matmul(z)?;
    solve_normal_equations(gram, rhs, lambda, n)
}

fn solve_normal_equations<T: Real>(
    mut gram: DenseMatrix<T>,
    rhs: DenseMatrix<T>,
    lambda: T,
    trained_on: usize,
) -> Result<RegressorBank<T>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "ridge lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    let p = gram.rows();
    for i in 0..p {
        gram[(i, i)] += lambda;
    }
    let chol = Cholesky::new(&gram, T::lit(NORMAL_PIVOT_TOLERANCE)).map_err(|e| match e {
        Error::Conditioning(msg) if lambda == T::zero() => Error::Conditioning(format!(
            "XᵀX is singular without regularization ({msg}); use lambda > 0"
        )),
        other => other,
    })?;
    let m = rhs.cols();
    let mut weights = DenseMatrix::zeros(p, m);
    for j in 0..m {
        let w = chol.solve(&rhs.column(j));
        for (i, wi) in w.into_iter().enumerate() {
            weights[(i, j)] = wi;
        }
    }
    RegressorBank::from_weights(weights, lambda, trained_on)
}

/// Trains `m = A.rows()` regressors on compressed targets `A·y`.
pub fn train_compressed<T: Real>(
    dataset: &MultiLabelDataset<T>,
    a: &CompressionMatrix<T>,
    lambda: T,
) -> Result<RegressorBank<T>> {
    if dataset.is_empty() {
        return Err(data("cannot train on an empty dataset"));
    }
    if dataset.d() != a.cols() {
        return Err(data(format!(
            "label dimension {} does not match compression matrix columns {}",
            dataset.d(),
            a.cols()
        )));
    }
    let p = dataset.p();
    let m = a.rows();
    let mut gram = DenseMatrix::zeros(p, p);
    let mut rhs = DenseMatrix::zeros(p, m);
    for ex in dataset.examples() {
        if ex.features.dim() != p {
            return Err(data("feature dimension mismatch"));
        }
        let z = a.compress(&ex.labels).map_err(|e| data(e.to_string()))?;
        let feats = ex.features.entries();
        for (t, &(ia, va)) in feats.iter().enumerate() {
            let grow = gram.row_mut(ia);
            for &(ib, vb) in &feats[t..] {
                grow[ib] += va * vb;
            }
            for (r, &zi) in rhs.row_mut(ia).iter_mut().zip(&z) {
                *r += va * zi;
            }
        }
    }
    for a_ in 0..p {
        for b in 0..a_ {
            gram[(a_, b)] = gram[(b, a_)];
        }
    }
    if !gram.is_finite() || !rhs.is_finite() {
        return Err(data("training data contains non-finite values"));
    }
    solve_normal_equations(gram, rhs, lambda, dataset.len())
}

/// `H(x) = Wᵀx`.
pub fn predict_compressed<T: Real>(
    bank: &RegressorBank<T>,
    x: &FeatureVector<T>,
) -> Result<Vec<T>> {
    if x.dim() != bank.p() {
        return Err(data(format!(
            "feature dimension {} does not match model dimension {}",
            x.dim(),
            bank.p()
        )));
    }
    let mut out = vec![T::zero(); bank.m()];
    for (j, v) in x.iter() {
        for (o, &w) in out.iter_mut().zip(bank.weights.row(j)) {
            *o += v * w;
        }
    }
    Ok(out)
}

/// `H = B Aᵀ`: turns a predictor of `y` into a predictor of `A y`.
pub fn compress_linear_predictor<T: Real>(
    b: &RegressorBank<T>,
    a: &CompressionMatrix<T>,
) -> Result<RegressorBank<T>> {
    if b.m() != a.cols() {
        return Err(data(format!(
            "predictor has {} outputs but compression matrix has {} columns",
            b.m(),
            a.cols()
        )));
    }
    let weights = b.weights.matmul(&a.dense().transpose())?;
    RegressorBank::from_weights(weights, b.ridge_lambda, b.trained_on)
}
