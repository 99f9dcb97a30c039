//! Regression values recorded once from verified runs. Each recorded value
//! is also re-checked against an independent computation where one exists.
//! Re-record with `cargo test --test golden -- --ignored record_golden_reference`.

use std::path::PathBuf;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use labelsense::harness::synthetic::label_frequencies;
use labelsense::harness::{generate_synthetic, LabelSampling, SyntheticSpec};
use labelsense::learner::{predict_compressed, train_compressed};
use labelsense::oracles::{best_k_sparse_ls, measure_rip_delta, OracleBudget};
use labelsense::rng::seeded;
use labelsense::sensing::CompressionMatrix;
use labelsense::MatrixKind;

#[derive(Debug, Serialize, Deserialize)]
struct Reference {
    best_k: BestK,
    rip_delta_gaussian_16x20_seed11_s2: f64,
    synthetic_default: SyntheticSummary,
    model: ModelReference,
}

#[derive(Debug, Serialize, Deserialize)]
struct BestK {
    support: Vec<usize>,
    values: Vec<f64>,
    residual_sq: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SyntheticSummary {
    n: usize,
    total_labels: usize,
    /// `histogram[c]` = number of labels that occur exactly `c` times.
    frequency_histogram: Vec<usize>,
    fingerprint: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelReference {
    /// Row-major `p × m`.
    weights: Vec<f64>,
    prediction: Vec<f64>,
}

fn reference_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/reference.json")
}

fn load_reference() -> Reference {
    let text = std::fs::read_to_string(reference_path())
        .expect("golden reference missing; run the recorder");
    serde_json::from_str(&text).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn best_k_instance() -> (CompressionMatrix<f64>, Vec<f64>) {
    let a = CompressionMatrix::generate(MatrixKind::Gaussian, 12, 16, 42).unwrap();
    let mut rng = seeded(42, 0);
    let h = (0..12).map(|_| rng.sample(StandardNormal)).collect();
    (a, h)
}

fn compute_best_k() -> BestK {
    let (a, h) = best_k_instance();
    let r = best_k_sparse_ls(&a, &h, 2, &OracleBudget::default()).unwrap();
    BestK {
        support: r.estimate.support(),
        values: r.estimate.iter().map(|(_, v)| v).collect(),
        residual_sq: r.final_residual_norm.powi(2),
    }
}

fn compute_rip_delta() -> f64 {
    let a = CompressionMatrix::<f64>::generate(MatrixKind::Gaussian, 16, 20, 11).unwrap();
    measure_rip_delta(&a, 2, &OracleBudget::default()).unwrap()
}

fn compute_synthetic_summary() -> SyntheticSummary {
    let ds = generate_synthetic(&SyntheticSpec::default()).unwrap();
    let freq = label_frequencies(&ds);
    let max = freq.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0; max + 1];
    for &c in &freq {
        histogram[c] += 1;
    }
    SyntheticSummary {
        n: ds.len(),
        total_labels: freq.iter().sum(),
        frequency_histogram: histogram,
        fingerprint: ds.fingerprint(),
    }
}

fn model_spec() -> SyntheticSpec {
    SyntheticSpec {
        d: 64,
        p: 16,
        k_true: 3,
        n: 200,
        noise_level: 0.1,
        seed: 4,
        labels: LabelSampling::Bernoulli,
    }
}

fn compute_model() -> ModelReference {
    let ds = generate_synthetic(&model_spec()).unwrap();
    let a = CompressionMatrix::<f64>::generate(MatrixKind::Hadamard, 16, 64, 4).unwrap();
    let bank = train_compressed(&ds, &a, 0.01).unwrap();
    let prediction = predict_compressed(&bank, &ds.examples()[0].features).unwrap();
    ModelReference {
        weights: bank.weights().as_slice().to_vec(),
        prediction,
    }
}

#[test]
#[ignore = "writes the golden reference file"]
fn record_golden_reference() {
    let reference = Reference {
        best_k: compute_best_k(),
        rip_delta_gaussian_16x20_seed11_s2: compute_rip_delta(),
        synthetic_default: compute_synthetic_summary(),
        model: compute_model(),
    };
    std::fs::write(
        reference_path(),
        serde_json::to_string_pretty(&reference).unwrap() + "\n",
    )
    .unwrap();
}

#[test]
fn best_k_minimizer_matches_golden() {
    let golden = load_reference().best_k;
    let got = compute_best_k();
    assert_eq!(got.support, golden.support);
    assert!(got
        .values
        .iter()
        .zip(&golden.values)
        .all(|(a, b)| close(*a, *b)));
    assert!(close(got.residual_sq, golden.residual_sq));

    // Independent enumeration with nalgebra.
    let (a, h) = best_k_instance();
    let ad = DMatrix::from_row_slice(12, 16, a.dense().as_slice());
    let hv = DVector::from_vec(h);
    let best = (0..16)
        .combinations(2)
        .map(|s| {
            let cols = ad.select_columns(&s);
            let x = cols.clone().svd(true, true).solve(&hv, 1e-12).unwrap();
            ((&hv - cols * x).norm_squared(), s)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    assert_eq!(best.1, golden.support);
    assert!((best.0 - golden.residual_sq).abs() <= 1e-10);
}

#[test]
fn rip_delta_matches_golden() {
    let golden = load_reference().rip_delta_gaussian_16x20_seed11_s2;
    assert!(close(compute_rip_delta(), golden));
}

#[test]
fn default_synthetic_summary_matches_golden() {
    let golden = load_reference().synthetic_default;
    let got = compute_synthetic_summary();
    assert_eq!(got.n, golden.n);
    assert_eq!(got.total_labels, golden.total_labels);
    assert_eq!(got.frequency_histogram, golden.frequency_histogram);
    assert_eq!(got.fingerprint, golden.fingerprint);
    // Sanity: about k_true · E[mean] = 5 · 0.75 labels per example.
    let per_example = golden.total_labels as f64 / golden.n as f64;
    assert!((per_example - 3.75).abs() < 0.15, "{per_example}");
}

#[test]
fn trained_model_matches_golden() {
    let golden = load_reference().model;
    let got = compute_model();
    assert_eq!(got.weights.len(), 16 * 16);
    assert!(got
        .weights
        .iter()
        .zip(&golden.weights)
        .all(|(a, b)| close(*a, *b)));
    assert!(got
        .prediction
        .iter()
        .zip(&golden.prediction)
        .all(|(a, b)| close(*a, *b)));
}
