//! Brute-force references for small instances: the exact best `k`-sparse
//! least-squares fit, exact RIP constants, and the randomized sweeps that
//! certify the recovery algorithms against them.
//!
//! Every enumeration is bounded by an [`OracleBudget`] and fails with a
//! scale error instead of silently sampling. The one sampling routine,
//! [`sampled_rip_delta`], is named as such and only yields a lower bound.

use itertools::Itertools;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::linalg::{least_squares, norm, norm_sq, DenseMatrix};
use crate::recovery::{
    reconstruct, residual_ratio, sparsity_error, Algorithm, Dictionary, ReconstructionConfig,
    ReconstructionResult, RegretFactors, OMP_COHERENCE_LIMIT, OMP_RESIDUAL_FACTOR,
    ZERO_RESIDUAL_SQ,
};
use crate::rng::{seeded, streams, Rng};
use crate::scalar::Real;
use crate::sensing::{restricted_eigen_extremes, welch_bound, CompressionMatrix, MatrixKind};
use crate::sparse::SparseLabelVector;

/// Limits on brute-force enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleBudget {
    pub max_dim: usize,
    pub max_sparsity: usize,
    pub max_supports: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_dim: 20,
            max_sparsity: 3,
            max_supports: 1_000_000,
        }
    }
}

impl OracleBudget {
    pub fn with_max_sparsity(self, max_sparsity: usize) -> Self {
        Self {
            max_sparsity,
            ..self
        }
    }

    /// Checks that enumerating all `s`-subsets of `0..d` fits the budget.
    pub fn check(&self, d: usize, s: usize) -> Result<()> {
        let count = binomial(d, s);
        if d > self.max_dim || s > self.max_sparsity || count > self.max_supports as u128 {
            return Err(Error::Scale(format!(
                "enumerating C({d}, {s}) = {count} supports exceeds the oracle budget \
                 (max_dim={}, max_sparsity={}, max_supports={})",
                self.max_dim, self.max_sparsity, self.max_supports
            )));
        }
        Ok(())
    }
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Exact minimizer of `‖Ay − h‖₂²` over `k`-sparse `y`, by enumerating all
/// `k`-supports (least squares on each). Ties keep the lexicographically
/// smallest support. `iterations_used` is the number of supports examined.
pub fn best_k_sparse_ls<T: Real>(
    a: &CompressionMatrix<T>,
    h: &[T],
    k: usize,
    budget: &OracleBudget,
) -> Result<ReconstructionResult<T>> {
    let d = a.cols();
    if k == 0 || k > d {
        return Err(param(format!("k must lie in 1..={d}, got {k}")));
    }
    if h.len() != a.rows() {
        return Err(param("measurement length does not match matrix rows"));
    }
    budget.check(d, k)?;
    let columns: Vec<Vec<T>> = (0..d).map(|j| a.dense().column(j)).collect();
    let tol = T::lit(1e-12);

    let mut best: Option<(T, Vec<usize>, Vec<T>)> = None;
    let mut examined = 0;
    for support in (0..d).combinations(k) {
        examined += 1;
        let cols: Vec<Vec<T>> = support.iter().map(|&j| columns[j].clone()).collect();
        let (coef, _) = least_squares(&cols, h, tol);
        let mut r = h.to_vec();
        for (col, &c) in cols.iter().zip(&coef) {
            for (ri, &v) in r.iter_mut().zip(col) {
                *ri -= v * c;
            }
        }
        let res = norm_sq(&r);
        if best.as_ref().is_none_or(|(b, _, _)| res < *b) {
            best = Some((res, support, coef));
        }
    }
    let (res, support, coef) = best.expect("at least one support");
    Ok(ReconstructionResult {
        estimate: SparseLabelVector::from_pairs(d, support.iter().copied().zip(coef).collect()),
        selected_support: support,
        final_residual_norm: res.sqrt(),
        iterations_used: examined,
    })
}

/// The smallest `δ` for which `A` is `(s, δ)`-RIP:
/// `max_S max(λ_max(A_SᵀA_S) − 1, 1 − λ_min(A_SᵀA_S))` over all `|S| = s`.
pub fn measure_rip_delta<T: Real>(
    a: &CompressionMatrix<T>,
    s: usize,
    budget: &OracleBudget,
) -> Result<T> {
    let d = a.cols();
    if s == 0 || s > d {
        return Err(param(format!("sparsity must lie in 1..={d}, got {s}")));
    }
    budget.check(d, s)?;
    let gram = a.dense().gram();
    let mut delta = T::zero();
    for support in (0..d).combinations(s) {
        delta = delta.max(support_delta(&gram, &support));
    }
    Ok(delta)
}

/// Lower bound on the `s`-RIP constant from `samples` uniformly drawn
/// supports. Advisory only: the true constant can be larger.
pub fn sampled_rip_delta<T: Real>(
    a: &CompressionMatrix<T>,
    s: usize,
    samples: usize,
    seed: u64,
) -> Result<T> {
    let d = a.cols();
    if s == 0 || s > d {
        return Err(param(format!("sparsity must lie in 1..={d}, got {s}")));
    }
    let gram = a.dense().gram();
    let mut rng = seeded(seed, streams::AUDIT);
    let mut delta = T::zero();
    for _ in 0..samples {
        let mut support = rand::seq::index::sample(&mut rng, d, s).into_vec();
        support.sort_unstable();
        delta = delta.max(support_delta(&gram, &support));
    }
    Ok(delta)
}

/// Lower bound on the `s`-RIP constant from `restarts` hill climbs: start
/// from a random support and apply the best single-element swap while it
/// increases the restricted deviation. Finds structured bad supports (such
/// as rank-deficient column sets) that uniform sampling misses. Advisory
/// only: the true constant can be larger.
pub fn searched_rip_delta<T: Real>(
    a: &CompressionMatrix<T>,
    s: usize,
    restarts: usize,
    seed: u64,
) -> Result<T> {
    let d = a.cols();
    if s == 0 || s > d {
        return Err(param(format!("sparsity must lie in 1..={d}, got {s}")));
    }
    let gram = a.dense().gram();
    let mut rng = seeded(seed, streams::AUDIT);
    let mut best = T::zero();
    for _ in 0..restarts {
        let mut support = rand::seq::index::sample(&mut rng, d, s).into_vec();
        support.sort_unstable();
        let mut current = support_delta(&gram, &support);
        loop {
            let mut step: Option<(T, Vec<usize>)> = None;
            for pos in 0..s {
                for j in (0..d).filter(|j| !support.contains(j)) {
                    let mut cand = support.clone();
                    cand[pos] = j;
                    cand.sort_unstable();
                    let v = support_delta(&gram, &cand);
                    if v > step.as_ref().map_or(current, |(b, _)| *b) {
                        step = Some((v, cand));
                    }
                }
            }
            match step {
                Some((v, cand)) => {
                    current = v;
                    support = cand;
                }
                None => break,
            }
        }
        best = best.max(current);
    }
    Ok(best)
}

fn support_delta<T: Real>(gram: &DenseMatrix<T>, support: &[usize]) -> T {
    let (lo, hi) = restricted_eigen_extremes(gram, support);
    (hi - T::one()).max(T::one() - lo)
}

/// Planted `k`-sparse vector: uniform support, values `±U[0.5, 1]`.
pub fn planted_sparse(rng: &mut Rng, d: usize, k: usize) -> SparseLabelVector<f64> {
    let support = rand::seq::index::sample(rng, d, k).into_vec();
    let pairs = support
        .into_iter()
        .map(|j| {
            let mag: f64 = rng.random_range(0.5..=1.0);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            (j, sign * mag)
        })
        .collect();
    SparseLabelVector::from_pairs(d, pairs)
}

/// Adds spherical gaussian noise to `signal` at the given SNR in dB
/// (`None` = noiseless): per-entry variance `‖signal‖² / (m · 10^{snr/10})`.
pub fn add_noise(rng: &mut Rng, signal: &[f64], snr_db: Option<f64>) -> Vec<f64> {
    let Some(snr) = snr_db else {
        return signal.to_vec();
    };
    let power = norm_sq(signal) / signal.len() as f64;
    let sigma = (power / 10f64.powf(snr / 10.0)).sqrt();
    signal
        .iter()
        .map(|&v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// The noise levels swept by default: noiseless, 20 dB, 6 dB.
pub const DEFAULT_SNR_DB: [Option<f64>; 3] = [None, Some(20.0), Some(6.0)];

/// Configuration of an OMP-versus-oracle sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub trials: usize,
    pub d: usize,
    pub m: usize,
    pub k: usize,
    pub kind: MatrixKind,
    pub seed: u64,
    /// Noise levels, cycled over trials.
    pub snr_db: Vec<Option<f64>>,
    /// Reject matrices with `μ(A) > 0.1/k`.
    pub require_coherence: bool,
    /// Also evaluate the regret certificate with `δ = measure_rip_delta(A, 3k)`.
    pub certificate: bool,
    pub budget: OracleBudget,
}

impl SweepConfig {
    pub fn residual(trials: usize, d: usize, m: usize, k: usize) -> Self {
        let base = OracleBudget::default();
        Self {
            trials,
            d,
            m,
            k,
            kind: MatrixKind::Gaussian,
            seed: 1,
            snr_db: DEFAULT_SNR_DB.to_vec(),
            require_coherence: true,
            certificate: true,
            budget: base.with_max_sparsity(base.max_sparsity.max(3 * k)),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.k == 0 || self.snr_db.is_empty() {
            return Err(Error::Config(
                "sweep needs trials, k and at least one noise level".into(),
            ));
        }
        if self.m == 0 || self.m > self.d {
            return Err(Error::Config(format!(
                "sweep needs 1 <= m <= d (m={}, d={})",
                self.m, self.d
            )));
        }
        Ok(())
    }
}

/// One sweep trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub coherence: f64,
    pub snr_db: Option<f64>,
    pub omp_residual_sq: f64,
    pub oracle_residual_sq: f64,
    pub ratio: f64,
    pub pass: bool,
    /// `δ = measure_rip_delta(A, 3k)` when the certificate is evaluated.
    pub delta: Option<f64>,
    /// `‖ŷ − y‖₂²`.
    pub certificate_lhs: Option<f64>,
    /// `C₁‖h − Ay‖₂² + C₂·sperr(k, y)`; absent when `δ ≥ 1`.
    pub certificate_rhs: Option<f64>,
    /// `Some(false)` when `δ ≥ 1` (the factors are undefined).
    pub certificate_pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub attempts: usize,
    pub rejected: usize,
    pub max_ratio: f64,
    pub all_pass: bool,
    pub certificate_all_pass: Option<bool>,
    pub trials: Vec<TrialRecord>,
}

impl SweepReport {
    /// One JSON object per trial.
    pub fn to_json_lines(&self) -> String {
        self.trials
            .iter()
            .map(|t| serde_json::to_string(t).expect("trial record serializes") + "\n")
            .collect()
    }
}

/// Matrix seed of sweep attempt `attempt`.
pub fn sweep_matrix_seed(base: u64, attempt: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(attempt as u64)
}

/// OMP against the exact oracle on random instances: draw `A` (rejecting
/// those with `μ(A) > 0.1/k` when required), plant a `k`-sparse `y`, add
/// noise, run OMP for `2k` steps and compare residuals.
pub fn residual_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let limit = OMP_COHERENCE_LIMIT / cfg.k as f64;
    if cfg.require_coherence {
        let welch = welch_bound(cfg.m, cfg.d);
        if welch > limit {
            return Err(Error::Config(format!(
                "no {}x{} matrix has coherence <= 0.1/k = {limit:.4}: the Welch bound is {welch:.4}; \
                 increase m",
                cfg.m, cfg.d
            )));
        }
    }
    cfg.budget.check(cfg.d, cfg.k)?;
    if cfg.certificate {
        cfg.budget.check(cfg.d, (3 * cfg.k).min(cfg.d))?;
    }

    let recon = ReconstructionConfig::<f64>::omp(cfg.k);
    let mut trials = Vec::with_capacity(cfg.trials);
    let mut attempts = 0;
    let mut rejected = 0;
    let max_attempts = cfg.trials.saturating_mul(100).max(1000);
    while trials.len() < cfg.trials {
        if attempts >= max_attempts {
            return Err(Error::Config(format!(
                "rejected {rejected} of {attempts} matrices for coherence > {limit:.4}; increase m"
            )));
        }
        let seed = sweep_matrix_seed(cfg.seed, attempts);
        attempts += 1;
        let a = CompressionMatrix::<f64>::generate(cfg.kind, cfg.m, cfg.d, seed)?;
        let mu = a.coherence()?;
        if cfg.require_coherence && mu > limit {
            rejected += 1;
            if attempts >= 1000 && rejected as f64 > 0.99 * attempts as f64 {
                return Err(Error::Config(format!(
                    "rejected {rejected} of {attempts} matrices for coherence > {limit:.4}; increase m"
                )));
            }
            continue;
        }
        let trial = trials.len();
        let snr = cfg.snr_db[trial % cfg.snr_db.len()];
        let mut rng = seeded(seed, streams::SWEEP);
        let y = planted_sparse(&mut rng, cfg.d, cfg.k);
        let clean = a.compress(&y)?;
        let h = add_noise(&mut rng, &clean, snr);

        let dict = Dictionary::new(&a);
        let est = reconstruct(&dict, &h, &recon)?;
        let oracle = best_k_sparse_ls(&a, &h, cfg.k, &cfg.budget)?;
        let num = est.final_residual_norm.powi(2);
        let den = oracle.final_residual_norm.powi(2);
        let ratio = residual_ratio(num, den, norm_sq(&h).max(1.0));

        let (mut delta, mut lhs, mut rhs, mut cert) = (None, None, None, None);
        if cfg.certificate {
            let dl = measure_rip_delta(&a, (3 * cfg.k).min(cfg.d), &cfg.budget)?;
            delta = Some(dl);
            let l = est.estimate.distance_sq(&y)?;
            lhs = Some(l);
            match RegretFactors::omp(dl) {
                Ok(f) => {
                    let resid: Vec<f64> = h.iter().zip(&clean).map(|(a, b)| a - b).collect();
                    let r = f.bound(norm_sq(&resid), sparsity_error(cfg.k, &y)?);
                    rhs = Some(r);
                    // Rounding floor: an exact recovery gives 0 ≤ 0.
                    cert = Some(l <= r + ZERO_RESIDUAL_SQ * y.norm_sq().max(1.0));
                }
                Err(_) => cert = Some(false),
            }
        }
        trials.push(TrialRecord {
            trial,
            seed,
            coherence: mu,
            snr_db: snr,
            omp_residual_sq: num,
            oracle_residual_sq: den,
            ratio,
            pass: ratio <= OMP_RESIDUAL_FACTOR,
            delta,
            certificate_lhs: lhs,
            certificate_rhs: rhs,
            certificate_pass: cert,
        });
    }
    let max_ratio = trials.iter().map(|t| t.ratio).fold(0.0, f64::max);
    let all_pass = trials.iter().all(|t| t.pass);
    let certificate_all_pass = cfg
        .certificate
        .then(|| trials.iter().all(|t| t.certificate_pass == Some(true)));
    Ok(SweepReport {
        config: cfg.clone(),
        attempts,
        rejected,
        max_ratio,
        all_pass,
        certificate_all_pass,
        trials,
    })
}

/// Lower isometry check for unit-column matrices: with `δ = μ(A)(k − 1)`,
/// every `k`-sparse unit `y` should satisfy `‖Ay‖₂² ≥ 1 − δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometryReport {
    pub d: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub coherence: f64,
    pub delta: f64,
    pub samples: usize,
    /// Smallest `‖Ay‖₂²` over the random unit vectors.
    pub min_sampled: f64,
    /// Smallest restricted eigenvalue over all `k`-supports, when enumerable.
    pub min_enumerated: Option<f64>,
    pub pass: bool,
}

/// Gaussian `m×d` matrix with columns scaled to unit norm.
pub fn unit_column_gaussian(m: usize, d: usize, seed: u64) -> Result<CompressionMatrix<f64>> {
    let a = CompressionMatrix::<f64>::generate(MatrixKind::Gaussian, m, d, seed)?;
    let norms = a.dense().column_norms();
    let dense = DenseMatrix::from_fn(m, d, |i, j| a.dense()[(i, j)] / norms[j]);
    Ok(CompressionMatrix::from_dense(dense))
}

pub fn lower_isometry_sweep(
    d: usize,
    m: usize,
    k: usize,
    samples: usize,
    seed: u64,
    budget: &OracleBudget,
) -> Result<IsometryReport> {
    if k == 0 || k > d {
        return Err(param(format!("k must lie in 1..={d}, got {k}")));
    }
    let a = unit_column_gaussian(m, d, seed)?;
    let mu = a.coherence()?;
    let delta = mu * (k as f64 - 1.0);
    let mut rng = seeded(seed, streams::SWEEP);
    let mut min_sampled = f64::INFINITY;
    for _ in 0..samples {
        let support = rand::seq::index::sample(&mut rng, d, k).into_vec();
        let vals: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&vals);
        let y = SparseLabelVector::from_pairs(
            d,
            support
                .into_iter()
                .zip(vals.iter().map(|v| v / n))
                .collect(),
        );
        min_sampled = min_sampled.min(norm_sq(&a.compress(&y)?));
    }
    let min_enumerated = match budget.check(d, k) {
        Ok(()) => {
            let gram = a.dense().gram();
            let min = (0..d)
                .combinations(k)
                .map(|s| restricted_eigen_extremes(&gram, &s).0)
                .fold(f64::INFINITY, f64::min);
            Some(min)
        }
        Err(_) => None,
    };
    let floor = 1.0 - delta - 1e-9;
    Ok(IsometryReport {
        d,
        m,
        k,
        seed,
        coherence: mu,
        delta,
        samples,
        min_sampled,
        min_enumerated,
        pass: min_sampled >= floor && min_enumerated.is_none_or(|e| e >= floor),
    })
}

/// One heuristic-versus-oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceRecord {
    pub trial: usize,
    pub seed: u64,
    pub algorithm: &'static str,
    /// Sparsity level compared at: the heuristic's output support size.
    pub level: usize,
    pub heuristic_residual_sq: f64,
    pub oracle_residual_sq: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub comparisons: usize,
    pub all_pass: bool,
    pub records: Vec<DominanceRecord>,
}

/// On random instances, checks that the exact oracle's residual at the
/// heuristic's output sparsity never exceeds the heuristic's residual, for
/// OMP, CoSaMP and correlation decoding run at level `cfg.k`. Coherence
/// filtering and the certificate are ignored.
pub fn dominance_sweep(cfg: &SweepConfig) -> Result<DominanceReport> {
    cfg.validate()?;
    let algorithms = [
        Algorithm::Omp,
        Algorithm::Cosamp,
        Algorithm::CorrelationDecode,
    ];
    let mut records = Vec::new();
    for trial in 0..cfg.trials {
        let seed = sweep_matrix_seed(cfg.seed, trial);
        let a = CompressionMatrix::<f64>::generate(cfg.kind, cfg.m, cfg.d, seed)?;
        let snr = cfg.snr_db[trial % cfg.snr_db.len()];
        let mut rng = seeded(seed, streams::SWEEP);
        let y = planted_sparse(&mut rng, cfg.d, cfg.k);
        let h = add_noise(&mut rng, &a.compress(&y)?, snr);
        let scale = norm_sq(&h).max(1.0);
        let dict = Dictionary::new(&a);
        let mut oracle_at: Vec<Option<f64>> = vec![None; cfg.d + 1];
        for alg in algorithms {
            let est = reconstruct(&dict, &h, &ReconstructionConfig::new(alg, cfg.k))?;
            let level = est.estimate.nnz().clamp(1, cfg.d);
            let oracle = match oracle_at[level] {
                Some(v) => v,
                None => {
                    let v = best_k_sparse_ls(&a, &h, level, &cfg.budget)?
                        .final_residual_norm
                        .powi(2);
                    oracle_at[level] = Some(v);
                    v
                }
            };
            let heur = norm_sq(&dict_residual(&a, &h, &est.estimate)?);
            records.push(DominanceRecord {
                trial,
                seed,
                algorithm: alg.name(),
                level,
                heuristic_residual_sq: heur,
                oracle_residual_sq: oracle,
                pass: oracle <= heur + 1e-10 * scale,
            });
        }
    }
    Ok(DominanceReport {
        comparisons: records.len(),
        all_pass: records.iter().all(|r| r.pass),
        records,
    })
}

fn dict_residual(
    a: &CompressionMatrix<f64>,
    h: &[f64],
    y: &SparseLabelVector<f64>,
) -> Result<Vec<f64>> {
    let fit = a.compress(y)?;
    Ok(h.iter().zip(&fit).map(|(u, v)| u - v).collect())
}
