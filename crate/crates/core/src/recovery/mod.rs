//! Sparse reconstruction `R(k, A, h)`: recover a sparse label vector `ŷ`
//! with `A ŷ ≈ h` from a predicted compressed label `h`.
//!
//! Rankings everywhere break magnitude ties toward the smaller index.

mod cosamp;
mod omp;

use std::fmt;

pub use cosamp::cosamp;
pub use omp::{omp, omp_path};

use crate::error::{param, Error, Result};
use crate::linalg::{least_squares, norm, DenseMatrix};
use crate::scalar::Real;
use crate::sensing::CompressionMatrix;
use crate::sparse::{top_k_by_magnitude, SparseLabelVector};

/// Residual factor of the OMP guarantee: `‖Aŷ−h‖² ≤ 23·‖Ay_(1:k)−h‖²`.
pub const OMP_RESIDUAL_FACTOR: f64 = 23.0;
/// The OMP guarantee needs `μ(A) ≤ OMP_COHERENCE_LIMIT / k`.
pub const OMP_COHERENCE_LIMIT: f64 = 0.1;
/// Squared residuals at or below this (relative to `max(1, ‖h‖²)`) count
/// as zero when forming ratios.
pub const ZERO_RESIDUAL_SQ: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Algorithm {
    #[serde(rename = "omp")]
    Omp,
    #[serde(rename = "cosamp")]
    Cosamp,
    #[serde(rename = "cd")]
    CorrelationDecode,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Omp => "omp",
            Algorithm::Cosamp => "cosamp",
            Algorithm::CorrelationDecode => "cd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "omp" => Ok(Algorithm::Omp),
            "cosamp" => Ok(Algorithm::Cosamp),
            "cd" | "correlation_decode" => Ok(Algorithm::CorrelationDecode),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig<T> {
    /// Target sparsity level.
    pub k: usize,
    pub algorithm: Algorithm,
    /// `None` means the per-algorithm default (OMP: `2k`, CoSaMP: 50).
    pub max_iterations: Option<usize>,
    pub residual_tolerance: T,
    pub ls_rank_tolerance: T,
}

impl<T: Real> ReconstructionConfig<T> {
    pub fn new(algorithm: Algorithm, k: usize) -> Self {
        Self {
            k,
            algorithm,
            max_iterations: None,
            residual_tolerance: T::lit(1e-10),
            ls_rank_tolerance: T::lit(1e-10),
        }
    }

    pub fn omp(k: usize) -> Self {
        Self::new(Algorithm::Omp, k)
    }

    pub fn cosamp(k: usize) -> Self {
        Self::new(Algorithm::Cosamp, k)
    }

    pub fn correlation_decode(k: usize) -> Self {
        Self::new(Algorithm::CorrelationDecode, k)
    }

    pub fn with_k(&self, k: usize) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn effective_max_iterations(&self) -> usize {
        match self.algorithm {
            Algorithm::Omp => self
                .max_iterations
                .map_or(2 * self.k, |n| n.min(2 * self.k)),
            Algorithm::Cosamp => self.max_iterations.unwrap_or(50),
            Algorithm::CorrelationDecode => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(param("sparsity level k must be at least 1"));
        }
        if self.max_iterations == Some(0) {
            return Err(param("max_iterations must be positive"));
        }
        if !(self.residual_tolerance >= T::zero()) || !(self.ls_rank_tolerance >= T::zero()) {
            return Err(param("tolerances must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult<T> {
    pub estimate: SparseLabelVector<T>,
    /// Columns in the order they were selected.
    pub selected_support: Vec<usize>,
    /// `‖h − A·estimate‖₂`.
    pub final_residual_norm: T,
    pub iterations_used: usize,
}

/// A compression matrix prepared for repeated reconstructions: column norms
/// and, optionally, the Gram matrix `AᵀA` so correlations with the residual
/// cost `O(d·|J|)` instead of `O(m·d)` per step.
#[derive(Debug, Clone)]
pub struct Dictionary<'a, T> {
    matrix: &'a CompressionMatrix<T>,
    norms: Vec<T>,
    gram: Option<DenseMatrix<T>>,
}

impl<'a, T: Real> Dictionary<'a, T> {
    pub fn new(matrix: &'a CompressionMatrix<T>) -> Self {
        Self {
            matrix,
            norms: matrix.dense().column_norms(),
            gram: None,
        }
    }

    pub fn with_gram(matrix: &'a CompressionMatrix<T>) -> Self {
        Self {
            gram: Some(matrix.dense().gram()),
            ..Self::new(matrix)
        }
    }

    pub fn matrix(&self) -> &CompressionMatrix<T> {
        self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub(crate) fn norm(&self, j: usize) -> T {
        self.norms[j]
    }

    pub(crate) fn column(&self, j: usize) -> Vec<T> {
        self.matrix.dense().column(j)
    }

    pub(crate) fn columns(&self, idx: &[usize]) -> Vec<Vec<T>> {
        self.matrix.dense().gather_columns(idx)
    }

    pub(crate) fn check_measurement(&self, h: &[T]) -> Result<()> {
        if h.len() != self.rows() {
            return Err(param(format!(
                "measurement length {} does not match matrix rows {}",
                h.len(),
                self.rows()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite measurement".into()));
        }
        Ok(())
    }

    /// `Aᵀh`.
    pub(crate) fn proxy(&self, h: &[T]) -> Vec<T> {
        self.matrix.dense().tr_matvec(h)
    }

    /// `Aᵀ(h − A x)` for `x` given by `(index, value)` pairs.
    ///
    /// `proxy_h` must be `Aᵀh`; `residual` must be `h − A x`. With a Gram
    /// matrix the update is taken from `proxy_h`, otherwise from `residual`.
    pub(crate) fn residual_correlations(
        &self,
        proxy_h: &[T],
        residual: &[T],
        x: &[(usize, T)],
    ) -> Vec<T> {
        match &self.gram {
            Some(g) => {
                let mut out = proxy_h.to_vec();
                for &(j, c) in x {
                    if c == T::zero() {
                        continue;
                    }
                    for (o, &gj) in out.iter_mut().zip(g.row(j)) {
                        *o -= gj * c;
                    }
                }
                out
            }
            None => self.matrix.dense().tr_matvec(residual),
        }
    }

    /// `h − A x`.
    pub(crate) fn residual(&self, h: &[T], x: &[(usize, T)]) -> Vec<T> {
        let dense = self.matrix.dense();
        let mut r = h.to_vec();
        for (i, ri) in r.iter_mut().enumerate() {
            let row = dense.row(i);
            for &(j, c) in x {
                *ri -= row[j] * c;
            }
        }
        r
    }
}

/// Dispatches to the configured algorithm.
pub fn reconstruct<T: Real>(
    dict: &Dictionary<'_, T>,
    h: &[T],
    cfg: &ReconstructionConfig<T>,
) -> Result<ReconstructionResult<T>> {
    match cfg.algorithm {
        Algorithm::Omp => Ok(omp_path(dict, h, &[cfg.k], cfg)?.remove(0)),
        Algorithm::Cosamp => cosamp(dict, h, cfg),
        Algorithm::CorrelationDecode => {
            correlation_decode_with(dict, h, cfg.k, cfg.ls_rank_tolerance)
        }
    }
}

/// Correlation decoding: support = the `k` largest `|(Aᵀh)_j|`, values fitted
/// by least squares on those columns.
pub(crate) fn correlation_decode_with<T: Real>(
    dict: &Dictionary<'_, T>,
    h: &[T],
    k: usize,
    rank_tol: T,
) -> Result<ReconstructionResult<T>> {
    dict.check_measurement(h)?;
    let d = dict.cols();
    if k == 0 || k > d {
        return Err(param(format!("k must lie in 1..={d}, got {k}")));
    }
    let proxy = dict.proxy(h);
    let support = top_k_by_magnitude(&proxy, k, |j| dict.norm(j) > T::zero());
    let coeffs = if support.is_empty() {
        Vec::new()
    } else {
        least_squares(&dict.columns(&support), h, rank_tol).0
    };
    let pairs: Vec<(usize, T)> = support.iter().copied().zip(coeffs).collect();
    let r = dict.residual(h, &pairs);
    Ok(ReconstructionResult {
        estimate: SparseLabelVector::from_pairs(d, pairs),
        selected_support: support,
        final_residual_norm: norm(&r),
        iterations_used: 1,
    })
}

/// `sperr(k, y) = ‖Δ‖₂² + ‖Δ‖₁²/k` with `Δ = y − y_(1:k)`.
pub fn sparsity_error<T: Real>(k: usize, y: &SparseLabelVector<T>) -> Result<T> {
    if k == 0 {
        return Err(param("sparsity level k must be at least 1"));
    }
    let (_, tail) = y.split_top_k(k);
    let l1 = tail.norm_l1();
    Ok(tail.norm_sq() + l1 * l1 / T::from_usize_lossy(k))
}

/// Regret factors `(C₁, C₂)` of a reconstruction algorithm whose residual is
/// within factor `C` of the best `k`-sparse fit, for a `(k + f(k), δ)`-RIP
/// matrix: `C₁ = 2(1+√C)²/(1−δ)`, `C₂ = 4(1 + (1+√C)/(1−δ))²`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RegretFactors<T> {
    pub c1: T,
    pub c2: T,
}

impl<T: Real> RegretFactors<T> {
    pub fn from_residual_factor(c: T, delta: T) -> Result<Self> {
        if !(delta >= T::zero() && delta < T::one()) {
            return Err(param(format!(
                "regret factors need an RIP constant in [0, 1), got {delta}"
            )));
        }
        if !(c >= T::zero()) {
            return Err(param("residual factor must be nonnegative"));
        }
        let one = T::one();
        let root = one + c.sqrt();
        let gap = one - delta;
        let c1 = T::lit(2.0) * root * root / gap;
        let inner = one + root / gap;
        let c2 = T::lit(4.0) * inner * inner;
        Ok(Self { c1, c2 })
    }

    /// Factors for OMP (`C = 23`).
    pub fn omp(delta: T) -> Result<Self> {
        Self::from_residual_factor(T::lit(OMP_RESIDUAL_FACTOR), delta)
    }

    /// Right-hand side `C₁‖h − Ay‖² + C₂·sperr(k, y)`.
    pub fn bound(&self, compressed_error_sq: T, sparsity_err: T) -> T {
        self.c1 * compressed_error_sq + self.c2 * sparsity_err
    }
}

/// Measured residual ratio of a reconstruction against the exact best
/// `k`-sparse least-squares fit.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidityReport {
    pub k: usize,
    pub heuristic_residual_sq: f64,
    pub oracle_residual_sq: f64,
    /// `‖Aŷ−h‖² / ‖Ay*_(1:k)−h‖²`; `+∞` when only the denominator vanishes.
    pub ratio: f64,
    pub within_factor: bool,
    pub coherence: f64,
    /// Whether `μ(A) ≤ 0.1/k`, the hypothesis of the OMP guarantee.
    pub coherence_precondition: bool,
}

/// Compares `result` against the exact best `k`-sparse fit `oracle_best_k`.
pub fn validity_certificate<T: Real>(
    a: &CompressionMatrix<T>,
    h: &[T],
    k: usize,
    result: &ReconstructionResult<T>,
    oracle_best_k: &ReconstructionResult<T>,
) -> Result<ValidityReport> {
    if k == 0 {
        return Err(param("sparsity level k must be at least 1"));
    }
    let fitted = a.compress(&result.estimate)?;
    let num: f64 = fitted
        .iter()
        .zip(h)
        .map(|(&f, &hv)| (f - hv).to_f64_lossy().powi(2))
        .sum();
    let den = oracle_best_k.final_residual_norm.to_f64_lossy().powi(2);
    let scale = h
        .iter()
        .map(|v| v.to_f64_lossy().powi(2))
        .sum::<f64>()
        .max(1.0);
    let ratio = residual_ratio(num, den, scale);
    let mu = a.coherence()?.to_f64_lossy();
    Ok(ValidityReport {
        k,
        heuristic_residual_sq: num,
        oracle_residual_sq: den,
        ratio,
        within_factor: ratio <= OMP_RESIDUAL_FACTOR,
        coherence: mu,
        coherence_precondition: mu <= OMP_COHERENCE_LIMIT / k as f64,
    })
}

/// `num / den` with both treated as zero at or below
/// `ZERO_RESIDUAL_SQ * scale`: `0/0 = 1`, `x/0 = ∞`.
pub fn residual_ratio(num: f64, den: f64, scale: f64) -> f64 {
    let floor = ZERO_RESIDUAL_SQ * scale;
    match (num <= floor, den <= floor) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        (true, false) => 0.0,
        (false, false) => num / den,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::MatrixKind;

    #[test]
    fn sparsity_error_examples() {
        let y = SparseLabelVector::from_dense(&[1.0f64, 0.5, 0.25, 0.0]);
        assert!((sparsity_error(2, &y).unwrap() - 0.09375).abs() < 1e-15);
        let ones = SparseLabelVector::from_dense(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(sparsity_error(2, &ones).unwrap(), 4.0);
        let exact = SparseLabelVector::from_dense(&[0.0, 3.0, 0.0, -1.0]);
        assert_eq!(sparsity_error(2, &exact).unwrap(), 0.0);
        assert!(sparsity_error(0, &exact).is_err());
    }

    #[test]
    fn regret_factor_formulas() {
        let f = RegretFactors::<f64>::omp(0.0).unwrap();
        let root = 1.0 + 23f64.sqrt();
        assert!((f.c1 - 2.0 * root * root).abs() < 1e-12);
        assert!((f.c2 - 4.0 * (1.0 + root).powi(2)).abs() < 1e-12);
        assert!(RegretFactors::<f64>::omp(1.0).is_err());
        assert!(RegretFactors::<f64>::omp(-0.1).is_err());
    }

    #[test]
    fn correlation_decode_identity() {
        let a = CompressionMatrix::<f64>::generate(MatrixKind::Identity, 4, 4, 0).unwrap();
        let dict = Dictionary::new(&a);
        let r = correlation_decode_with(&dict, &[0.1, 0.9, 0.3, 0.7], 2, 1e-10).unwrap();
        assert_eq!(r.estimate.to_dense(), vec![0.0, 0.9, 0.0, 0.7]);
        let zero = correlation_decode_with(&dict, &[0.0; 4], 2, 1e-10).unwrap();
        assert_eq!(zero.estimate.nnz(), 0);
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(residual_ratio(0.0, 0.0, 1.0), 1.0);
        assert_eq!(residual_ratio(1e-3, 0.0, 1.0), f64::INFINITY);
        assert_eq!(residual_ratio(1.0, 5.0, 1.0), 0.2);
    }
}
