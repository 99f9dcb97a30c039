//! Metrics: squared error, precision-at-k, the sparsity profile of a
//! predicted label distribution, and the end-to-end regret audit.

use serde::Serialize;

use crate::dataset::MultiLabelDataset;
use crate::error::{data, param, Result};
use crate::learner::{predict_compressed, RegressorBank};
use crate::linalg::{norm_sq, pairwise_mean};
use crate::recovery::{
    reconstruct, sparsity_error, Dictionary, ReconstructionConfig, RegretFactors, ZERO_RESIDUAL_SQ,
};
use crate::scalar::Real;
use crate::sensing::CompressionMatrix;
use crate::sparse::{rank_order, SparseLabelVector};

/// One `(algorithm, matrix kind, m, k)` evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub algorithm: String,
    pub matrix_kind: String,
    pub m: usize,
    pub k: usize,
    /// Mean of `‖ŷ^k − y‖₂²` against the observed labels.
    pub mean_squared_error: f64,
    pub precision_at_k: f64,
    pub n_test: usize,
    pub seed: u64,
}

/// `‖ŷ − y‖₂²` over the union of supports.
pub fn squared_error<T: Real>(y_hat: &SparseLabelVector<T>, y: &SparseLabelVector<T>) -> Result<T> {
    y_hat.distance_sq(y)
}

/// Fraction of the `k` highest-magnitude entries of `y_hat` (ties to the
/// smaller index) that lie in the support of `y_true`. Missing slots count
/// as misses.
pub fn precision_at_k<T: Real>(
    y_hat: &SparseLabelVector<T>,
    y_true: &SparseLabelVector<T>,
    k: usize,
) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = y_hat
        .ranked()
        .iter()
        .take(k)
        .filter(|&&(i, _)| y_true.get(i) != T::zero())
        .count();
    hits as f64 / k as f64
}

/// Sparsity level of the prediction used for precision-at-`k`: `ŷ^10` for
/// `k < 6`, `ŷ^{2k}` otherwise.
pub fn precision_level(k: usize) -> usize {
    if k < 6 {
        10
    } else {
        2 * k
    }
}

/// Correlation decoding: support = the `k` largest `|(Aᵀh)_j|`, values fitted
/// by least squares on those columns.
pub fn correlation_decode<T: Real>(
    a: &CompressionMatrix<T>,
    h: &[T],
    k: usize,
) -> Result<SparseLabelVector<T>> {
    let dict = Dictionary::new(a);
    let cfg = ReconstructionConfig::<T>::correlation_decode(k);
    Ok(reconstruct(&dict, h, &cfg)?.estimate)
}

/// `ε(k, p̂) = Σ_{i>k} p̂_(i)² / ‖p̂‖₂²` after clipping `p̂` to `[0, 1]`.
pub fn sparsity_profile<T: Real>(p_hat: &SparseLabelVector<T>, k: usize) -> Result<T> {
    let clipped = p_hat.map_values(|v| v.max(T::zero()).min(T::one()));
    let total = clipped.norm_sq();
    if total == T::zero() {
        return Err(data("sparsity profile of a zero vector is undefined"));
    }
    let (_, tail) = clipped.split_top_k(k);
    Ok(tail.norm_sq() / total)
}

/// `ε(k, p̂)` for each `k` in `ks`.
pub fn sparsity_profile_curve<T: Real>(
    p_hat: &SparseLabelVector<T>,
    ks: &[usize],
) -> Result<Vec<T>> {
    ks.iter().map(|&k| sparsity_profile(p_hat, k)).collect()
}

/// Least-squares slope of `log ε` against `log k`, over the points with
/// `ε > 0`. `None` with fewer than two usable points.
pub fn loglog_slope(ks: &[usize], eps: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(eps)
        .filter(|&(&k, &e)| k > 0 && e > 0.0)
        .map(|(&k, &e)| ((k as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Keeps the `k` largest-magnitude entries of a dense vector (ties to the
/// smaller index) without refitting.
pub fn top_k_truncation<T: Real>(values: &[T], k: usize) -> SparseLabelVector<T> {
    let mut idx: Vec<usize> = (0..values.len())
        .filter(|&j| values[j] != T::zero())
        .collect();
    idx.sort_by(|&a, &b| rank_order(a, values[a], b, values[b]));
    idx.truncate(k);
    SparseLabelVector::from_pairs(
        values.len(),
        idx.into_iter().map(|j| (j, values[j])).collect(),
    )
}

/// Outcome of checking `mean‖F(x) − E[y|x]‖² ≤ C₁·mean‖H(x) − A·E[y|x]‖² +
/// C₂·mean sperr(k, E[y|x])` on a test set with known conditional means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretAuditReport {
    pub n: usize,
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
    /// `mean ‖F(x) − E[y|x]‖₂²`.
    pub lhs: f64,
    /// `mean ‖H(x) − A·E[y|x]‖₂²`.
    pub compressed_error: f64,
    /// `mean sperr(k, E[y|x])`.
    pub sparsity_error: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Audits the composition of `model` and the reconstruction `recon` on a test
/// set carrying ground-truth conditional means.
pub fn regret_transform_audit<T: Real>(
    model: &RegressorBank<T>,
    a: &CompressionMatrix<T>,
    recon: &ReconstructionConfig<T>,
    test: &MultiLabelDataset<T>,
    factors: RegretFactors<T>,
) -> Result<RegretAuditReport> {
    if test.is_empty() {
        return Err(data("regret audit needs a nonempty test set"));
    }
    if !test.has_ground_truth() {
        return Err(data("regret audit needs ground-truth conditional means"));
    }
    if model.m() != a.rows() {
        return Err(param("model outputs do not match compression matrix rows"));
    }
    let dict = Dictionary::new(a);
    let mut lhs = Vec::with_capacity(test.len());
    let mut comp = Vec::with_capacity(test.len());
    let mut sperr = Vec::with_capacity(test.len());
    let mut scale = Vec::with_capacity(test.len());
    for ex in test.examples() {
        let mean = ex.ground_truth.as_ref().expect("checked above");
        let hx = predict_compressed(model, &ex.features)?;
        let fx = reconstruct(&dict, &hx, recon)?.estimate;
        lhs.push(squared_error(&fx, mean)?);
        let a_mean = a.compress(mean)?;
        let diff: Vec<T> = hx.iter().zip(&a_mean).map(|(&u, &v)| u - v).collect();
        comp.push(norm_sq(&diff));
        sperr.push(sparsity_error(recon.k, mean)?);
        scale.push(mean.norm_sq());
    }
    let lhs = pairwise_mean(&lhs).to_f64_lossy();
    let compressed_error = pairwise_mean(&comp).to_f64_lossy();
    let sparsity_error = pairwise_mean(&sperr).to_f64_lossy();
    let (c1, c2) = (factors.c1.to_f64_lossy(), factors.c2.to_f64_lossy());
    let rhs = c1 * compressed_error + c2 * sparsity_error;
    // Rounding floor so that exact recovery (0 ≤ 0) is not a failure.
    let floor = ZERO_RESIDUAL_SQ * pairwise_mean(&scale).to_f64_lossy().max(1.0);
    Ok(RegretAuditReport {
        n: test.len(),
        k: recon.k,
        c1,
        c2,
        lhs,
        compressed_error,
        sparsity_error,
        rhs,
        holds: lhs <= rhs + floor,
    })
}
