//! The train → predict → reconstruct protocol.
//!
//! For each `m` in the run: generate `A`, train `m` ridge regressors on the
//! compressed training labels, predict `H(x)` on every test example, and
//! reconstruct `ŷ^k` for `k = 1..k_max` with each algorithm. Each
//! `(algorithm, m, k)` cell reports the mean squared error of `ŷ^k` against
//! the observed labels and precision-at-`k` of `ŷ^{10}` (`k < 6`) or
//! `ŷ^{2k}` (`k ≥ 6`). The one-against-all reference trains on the
//! uncompressed labels (`A = I`, `m = d`) and predicts the top-`k`
//! truncation of `H(x)`.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::{parse_dataset, MultiLabelDataset};
use crate::error::{Error, Result};
use crate::evaluation::{
    precision_at_k, precision_level, squared_error, top_k_truncation, ExperimentRecord,
};
use crate::learner::{predict_compressed, train_compressed, RegressorBank};
use crate::linalg::pairwise_mean;
use crate::recovery::{omp_path, reconstruct, Algorithm, Dictionary, ReconstructionConfig};
use crate::sensing::{CompressionMatrix, MatrixKind};
use crate::sparse::SparseLabelVector;

use super::synthetic::{generate_synthetic, SyntheticSpec};

/// Algorithm name used for the one-against-all reference rows.
pub const ONE_AGAINST_ALL: &str = "oaa";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DataSource {
    Files {
        train: PathBuf,
        test: PathBuf,
    },
    /// Generated, then split in half: the first `n/2` examples train.
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub data: DataSource,
    pub matrix: MatrixKind,
    pub m_list: Vec<usize>,
    pub k_max: usize,
    pub algorithms: Vec<Algorithm>,
    pub lambda: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Also emit the `m = d` identity-compression reference.
    pub one_against_all: bool,
    /// Directory for the generated matrices and trained models.
    pub artifacts: Option<PathBuf>,
}

impl RunConfig {
    /// Synthetic run with the data seed tied to `seed`.
    pub fn synthetic(spec: SyntheticSpec, seed: u64) -> Self {
        Self {
            data: DataSource::Synthetic(SyntheticSpec { seed, ..spec }),
            matrix: MatrixKind::Hadamard,
            m_list: vec![64, 128, 256],
            k_max: 5,
            algorithms: vec![Algorithm::Omp],
            lambda: 0.01,
            seed,
            out: None,
            one_against_all: false,
            artifacts: None,
        }
    }

    /// Checks the config against a label dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.m_list.is_empty() && !self.one_against_all {
            return cfg("no m values and no one-against-all reference requested".into());
        }
        if !self.m_list.is_empty() && self.algorithms.is_empty() {
            return cfg("no reconstruction algorithms requested".into());
        }
        if self.k_max == 0 {
            return cfg("k-max must be at least 1".into());
        }
        if let Some(&m) = self.m_list.iter().find(|&&m| m == 0 || m > d) {
            return cfg(format!("every m must lie in 1..={d}, got {m}"));
        }
        if let Some(&min_m) = self.m_list.iter().min() {
            if self.k_max > min_m {
                return cfg(format!(
                    "k-max {} exceeds the smallest m {min_m}",
                    self.k_max
                ));
            }
        }
        if self.k_max > d {
            return cfg(format!("k-max {} exceeds d={d}", self.k_max));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return cfg(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            ));
        }
        if self.matrix == MatrixKind::Hadamard && !d.is_power_of_two() {
            return cfg(format!("hadamard matrices need d a power of two, got {d}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub d: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Fingerprint of the training inputs; the test set never enters it.
    pub train_fingerprint: String,
    pub test_fingerprint: String,
}

/// Loads (or generates) the train and test sets. File datasets used with
/// hadamard matrices get their label dimension rounded up to a power of two.
pub fn load_data(cfg: &RunConfig) -> Result<(MultiLabelDataset<f64>, MultiLabelDataset<f64>)> {
    let (train, test) = match &cfg.data {
        DataSource::Files { train, test } => {
            let tr: MultiLabelDataset<f64> = parse_dataset(train)
                .map_err(|e| e.context(format!("training set {}", train.display())))?;
            let te: MultiLabelDataset<f64> = parse_dataset(test)
                .map_err(|e| e.context(format!("test set {}", test.display())))?;
            if tr.p() != te.p() || tr.d() != te.d() {
                return Err(Error::Data(format!(
                    "train dims (d={}, p={}) differ from test dims (d={}, p={})",
                    tr.d(),
                    tr.p(),
                    te.d(),
                    te.p()
                )));
            }
            if cfg.matrix == MatrixKind::Hadamard && !tr.d().is_power_of_two() {
                let d = tr.d().next_power_of_two();
                (tr.with_label_dim(d)?, te.with_label_dim(d)?)
            } else {
                (tr, te)
            }
        }
        DataSource::Synthetic(spec) => {
            let all = generate_synthetic(spec).map_err(|e| Error::Config(e.to_string()))?;
            let half = all.len() / 2;
            all.split_at(half)
        }
    };
    if train.is_empty() || test.is_empty() {
        return Err(Error::Data(
            "train and test sets must both be nonempty".into(),
        ));
    }
    Ok((train, test))
}

pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    let (train, test) = load_data(cfg)?;
    let d = train.d();
    cfg.validate(d)?;
    let train_fingerprint = train.fingerprint();
    let test_fingerprint = test.fingerprint();
    let lambda = cfg.lambda;

    let mut records = Vec::new();
    for &m in &cfg.m_list {
        let ctx = format!("{} matrix m={m}", cfg.matrix);
        let a = CompressionMatrix::<f64>::generate(cfg.matrix, m, d, cfg.seed)
            .map_err(|e| e.context(ctx.clone()))?;
        let bank = train_compressed(&train, &a, lambda).map_err(|e| e.context(ctx.clone()))?;
        if let Some(dir) = &cfg.artifacts {
            save_artifacts(dir, &a, &bank)?;
        }
        for &alg in &cfg.algorithms {
            records.extend(
                evaluate_model(&a, &bank, &test, alg, cfg.k_max, cfg.seed)
                    .map_err(|e| e.context(ctx.clone()))?,
            );
        }
    }
    if cfg.one_against_all {
        let a = CompressionMatrix::<f64>::generate(MatrixKind::Identity, d, d, cfg.seed)?;
        let bank =
            train_compressed(&train, &a, lambda).map_err(|e| e.context("one-against-all"))?;
        if let Some(dir) = &cfg.artifacts {
            save_artifacts(dir, &a, &bank)?;
        }
        records.extend(evaluate_one_against_all(&bank, &test, cfg.k_max, cfg.seed)?);
    }
    debug_assert_eq!(train.fingerprint(), train_fingerprint);

    if let Some(out) = &cfg.out {
        write_records_csv(out, &records)?;
    }
    Ok(ExperimentOutput {
        records,
        d,
        n_train: train.len(),
        n_test: test.len(),
        train_fingerprint,
        test_fingerprint,
    })
}

/// Paths under which a run stores the matrix and model for one `m`.
pub fn artifact_paths(dir: &Path, kind: MatrixKind, m: usize) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("matrix_{kind}_m{m}.lsmx")),
        dir.join(format!("model_{kind}_m{m}.lsrb")),
    )
}

fn save_artifacts(dir: &Path, a: &CompressionMatrix<f64>, bank: &RegressorBank<f64>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (mp, bp) = artifact_paths(dir, a.kind(), a.rows());
    a.save(mp)?;
    bank.save(bp)
}

/// Sparsity levels that must be reconstructed for `k = 1..=k_max`.
fn needed_levels(k_max: usize, d: usize) -> Vec<usize> {
    let mut levels: Vec<usize> = (1..=k_max)
        .chain((1..=k_max).map(|k| precision_level(k).min(d)))
        .collect();
    levels.sort_unstable();
    levels.dedup();
    levels
}

/// Evaluates a trained model and its matrix on `test` for `k = 1..=k_max`.
pub fn evaluate_model(
    a: &CompressionMatrix<f64>,
    bank: &RegressorBank<f64>,
    test: &MultiLabelDataset<f64>,
    algorithm: Algorithm,
    k_max: usize,
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    if bank.m() != a.rows() || test.d() != a.cols() {
        return Err(Error::Data(
            "model, matrix and test set dimensions disagree".into(),
        ));
    }
    let d = a.cols();
    let levels = needed_levels(k_max, d);
    let dict = match algorithm {
        Algorithm::CorrelationDecode => Dictionary::new(a),
        _ => Dictionary::with_gram(a),
    };
    let base = ReconstructionConfig::<f64>::new(algorithm, 1);
    score(test, k_max, |x| {
        let h = predict_compressed(bank, x)?;
        let estimates = match algorithm {
            Algorithm::Omp => omp_path(&dict, &h, &levels, &base)?
                .into_iter()
                .map(|r| r.estimate)
                .collect(),
            _ => levels
                .iter()
                .map(|&k| reconstruct(&dict, &h, &base.with_k(k)).map(|r| r.estimate))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(levels.iter().copied().zip(estimates).collect())
    })
    .map(|(mse, prec)| {
        records(
            algorithm.name(),
            a.kind().name(),
            a.rows(),
            k_max,
            seed,
            test.len(),
            mse,
            prec,
        )
    })
}

/// Evaluates an uncompressed model (`m = d`) by top-`k` truncation of `H(x)`.
pub fn evaluate_one_against_all(
    bank: &RegressorBank<f64>,
    test: &MultiLabelDataset<f64>,
    k_max: usize,
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    let d = test.d();
    if bank.m() != d {
        return Err(Error::Data(
            "one-against-all model must have one output per label".into(),
        ));
    }
    let levels = needed_levels(k_max, d);
    score(test, k_max, |x| {
        let h = predict_compressed(bank, x)?;
        Ok(levels
            .iter()
            .map(|&k| (k, top_k_truncation(&h, k)))
            .collect())
    })
    .map(|(mse, prec)| {
        records(
            ONE_AGAINST_ALL,
            MatrixKind::Identity.name(),
            d,
            k_max,
            seed,
            test.len(),
            mse,
            prec,
        )
    })
}

/// Re-evaluates a persisted matrix and model.
pub fn evaluate_persisted(
    matrix_path: impl AsRef<Path>,
    model_path: impl AsRef<Path>,
    test: &MultiLabelDataset<f64>,
    algorithm: Option<Algorithm>,
    k_max: usize,
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    let a = CompressionMatrix::<f64>::load(matrix_path)?;
    let bank = RegressorBank::<f64>::load(model_path)?;
    match algorithm {
        Some(alg) => evaluate_model(&a, &bank, test, alg, k_max, seed),
        None => evaluate_one_against_all(&bank, test, k_max, seed),
    }
}

type LevelEstimates = Vec<(usize, SparseLabelVector<f64>)>;

/// Per-`k` mean squared error and mean precision over the test set.
fn score(
    test: &MultiLabelDataset<f64>,
    k_max: usize,
    mut predict: impl FnMut(&crate::sparse::FeatureVector<f64>) -> Result<LevelEstimates>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = test.d();
    let n = test.len();
    let mut se = vec![Vec::with_capacity(n); k_max];
    let mut prec = vec![Vec::with_capacity(n); k_max];
    for ex in test.examples() {
        let est = predict(&ex.features)?;
        let at = |level: usize| {
            &est.iter()
                .find(|(l, _)| *l == level)
                .expect("level reconstructed")
                .1
        };
        for k in 1..=k_max {
            se[k - 1].push(squared_error(at(k), &ex.labels)?);
            prec[k - 1].push(precision_at_k(at(precision_level(k).min(d)), &ex.labels, k));
        }
    }
    Ok((
        se.iter().map(|v| pairwise_mean(v)).collect(),
        prec.iter().map(|v| pairwise_mean(v)).collect(),
    ))
}

#[allow(clippy::too_many_arguments)]
fn records(
    algorithm: &str,
    matrix: &str,
    m: usize,
    k_max: usize,
    seed: u64,
    n_test: usize,
    mse: Vec<f64>,
    prec: Vec<f64>,
) -> Vec<ExperimentRecord> {
    (1..=k_max)
        .map(|k| ExperimentRecord {
            algorithm: algorithm.to_string(),
            matrix_kind: matrix.to_string(),
            m,
            k,
            mean_squared_error: mse[k - 1],
            precision_at_k: prec[k - 1],
            n_test,
            seed,
        })
        .collect()
}

pub const CSV_HEADER: &str = "algo,matrix,m,k,mse,prec_at_k,n_test,seed";

/// CSV with a fixed header; floats carry 17 significant digits.
pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{:.16e},{:.16e},{},{}\n",
            r.algorithm,
            r.matrix_kind,
            r.m,
            r.k,
            r.mean_squared_error,
            r.precision_at_k,
            r.n_test,
            r.seed
        ));
    }
    out
}

/// Writes the CSV atomically: a temporary file in the target directory is
/// renamed over `path`.
pub fn write_records_csv(path: impl AsRef<Path>, records: &[ExperimentRecord]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(records_to_csv(records).as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
