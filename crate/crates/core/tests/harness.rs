use std::path::{Path, PathBuf};

use labelsense::dataset::{parse_dataset, parse_dataset_str, MultiLabelDataset};
use labelsense::error::{Error, ErrorKind};
use labelsense::evaluation::ExperimentRecord;
use labelsense::harness::experiment::{artifact_paths, CSV_HEADER, ONE_AGAINST_ALL};
use labelsense::harness::synthetic::label_frequencies;
use labelsense::harness::{
    evaluate_persisted, generate_synthetic, records_to_csv, run_experiment, write_records_csv,
    DataSource, LabelSampling, RunConfig, SyntheticSpec,
};
use labelsense::learner::RegressorBank;
use labelsense::{Algorithm, MatrixKind};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sample.txt")
}

fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        d: 64,
        p: 32,
        k_true: 3,
        n: 400,
        noise_level: 0.1,
        seed,
        labels: LabelSampling::Bernoulli,
    }
}

fn small_run(seed: u64) -> RunConfig {
    RunConfig {
        m_list: vec![16, 32],
        k_max: 3,
        ..RunConfig::synthetic(small_spec(seed), seed)
    }
}

fn assert_records_close(a: &[ExperimentRecord], b: &[ExperimentRecord], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(
            (&x.algorithm, &x.matrix_kind, x.m, x.k, x.n_test),
            (&y.algorithm, &y.matrix_kind, y.m, y.k, y.n_test)
        );
        assert!(
            (x.mean_squared_error - y.mean_squared_error).abs() <= tol,
            "{x:?} vs {y:?}"
        );
        assert!(
            (x.precision_at_k - y.precision_at_k).abs() <= tol,
            "{x:?} vs {y:?}"
        );
    }
}

#[test]
fn sample_file_parses_to_the_expected_structure() {
    let ds: MultiLabelDataset<f64> = parse_dataset(fixture()).unwrap();
    assert_eq!((ds.n(), ds.d(), ds.p()), (10, 12, 10));
    let labels: Vec<Vec<usize>> = ds.examples().iter().map(|e| e.labels.support()).collect();
    assert_eq!(
        labels,
        vec![
            vec![0, 3],
            vec![5],
            vec![],
            vec![1, 2, 11],
            vec![7],
            vec![4, 10],
            vec![0],
            vec![6, 8, 9],
            vec![11],
            vec![2, 5],
        ]
    );
    let features: Vec<Vec<(usize, f64)>> = ds
        .examples()
        .iter()
        .map(|e| e.features.entries().to_vec())
        .collect();
    assert_eq!(
        features,
        vec![
            vec![(0, 1.0), (2, 0.5), (9, 0.25)],
            vec![(1, 1.0), (4, 0.75)],
            vec![(3, 1.0), (8, -0.5)],
            vec![(0, 0.125), (5, 2.0), (6, 1.5)],
            vec![],
            vec![(2, 1e-3), (7, 3.5)],
            vec![(6, 1.0)],
            vec![(1, 0.5), (2, 0.5), (3, 0.5)],
            vec![(9, -1.25)],
            vec![(0, 1.0), (1, 2.0), (2, 3.0), (3, 4.0)],
        ]
    );
    assert!(ds
        .examples()
        .iter()
        .all(|e| e.labels.iter().all(|(_, v)| v == 1.0)));
    assert!(!ds.has_ground_truth());
    // The text form round-trips.
    let again: MultiLabelDataset<f64> = parse_dataset_str(&ds.to_text()).unwrap();
    assert_eq!(again, ds);
}

#[test]
fn parse_errors_carry_line_and_offset() {
    let text = std::fs::read_to_string(fixture()).unwrap();
    let broken = text.replace("11 9:-1.25", "11 9:-1.25 4:x");
    match parse_dataset_str::<f64>(&broken) {
        Err(Error::Parse { line, offset, .. }) => {
            assert_eq!(line, 10);
            assert_eq!(&broken[offset..offset + 3], "4:x");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
    for (bad, line) in [
        ("#dims d=4 p=3\n4 0:1\n", 2),
        ("#dims d=4 p=3\n1 3:1\n", 2),
        ("#dims d=4 p=3\n1 1:1 0:1\n", 2),
        ("#dims d=4 p=3\n1,1 0:1\n", 2),
        ("#dims d=4 p=3\n1 0:1\n\n2 0:1\n", 3),
        ("#dims d=4 p=3\n1 0:inf\n", 2),
        ("d=4 p=3\n", 1),
    ] {
        match parse_dataset_str::<f64>(bad) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{bad:?}"),
            other => panic!("{bad:?}: {other:?}"),
        }
    }
    let crlf: MultiLabelDataset<f64> = parse_dataset_str("#dims d=4 p=3\r\n1 0:1\r\n").unwrap();
    assert_eq!(crlf.n(), 1);
}

#[test]
fn noiseless_threshold_labels_equal_the_planted_support() {
    let spec = SyntheticSpec {
        noise_level: 0.0,
        labels: LabelSampling::Threshold,
        ..small_spec(3)
    };
    let ds = generate_synthetic(&spec).unwrap();
    assert!(ds.has_ground_truth());
    for e in ds.examples() {
        let truth = e.ground_truth.as_ref().unwrap();
        assert_eq!(e.labels.support(), truth.support());
        assert_eq!(truth.nnz(), 3);
        assert!(truth.iter().all(|(_, v)| (0.5..=1.0).contains(&v)));
    }
}

#[test]
fn synthetic_generation_is_deterministic() {
    let a = generate_synthetic(&small_spec(9)).unwrap();
    let b = generate_synthetic(&small_spec(9)).unwrap();
    let c = generate_synthetic(&small_spec(10)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.fingerprint(), b.fingerprint());
    assert_ne!(a.fingerprint(), c.fingerprint());
    assert_eq!(label_frequencies(&a).len(), 64);
}

#[test]
fn synthetic_spec_parsing() {
    let spec: SyntheticSpec = "d=64,p=32,k=3,n=100,noise=0.2".parse().unwrap();
    assert_eq!(
        (spec.d, spec.p, spec.k_true, spec.n, spec.noise_level),
        (64, 32, 3, 100, 0.2)
    );
    let round: SyntheticSpec = spec.to_string().parse().unwrap();
    assert_eq!(round, spec);
    for bad in ["d=64,q=1", "d=x", "labels=maybe", "d"] {
        assert!(
            matches!(bad.parse::<SyntheticSpec>(), Err(Error::Config(_))),
            "{bad}"
        );
    }
    let mut cfg = RunConfig::synthetic(
        SyntheticSpec {
            d: 48,
            ..small_spec(1)
        },
        1,
    );
    cfg.m_list = vec![8];
    assert_eq!(run_experiment(&cfg).unwrap_err().kind(), ErrorKind::Config);
}

#[test]
fn experiment_emits_one_record_per_combination() {
    let mut cfg = small_run(1);
    cfg.algorithms = vec![
        Algorithm::Omp,
        Algorithm::Cosamp,
        Algorithm::CorrelationDecode,
    ];
    cfg.one_against_all = true;
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.records.len(), (2 * 3 + 1) * 3);
    assert_eq!((out.d, out.n_train, out.n_test), (64, 200, 200));
    let oaa: Vec<_> = out
        .records
        .iter()
        .filter(|r| r.algorithm == ONE_AGAINST_ALL)
        .collect();
    assert_eq!(oaa.len(), 3);
    assert!(oaa.iter().all(|r| r.m == 64 && r.matrix_kind == "identity"));
    for r in &out.records {
        assert!(r.mean_squared_error.is_finite() && r.mean_squared_error >= 0.0);
        assert!((0.0..=1.0).contains(&r.precision_at_k));
    }
    // Identical reruns are bit-identical.
    assert_eq!(run_experiment(&cfg).unwrap(), out);
}

#[test]
fn identity_compression_with_top_k_decoding_is_one_against_all() {
    let mut cfg = small_run(2);
    cfg.matrix = MatrixKind::Identity;
    cfg.m_list = vec![64];
    cfg.algorithms = vec![Algorithm::CorrelationDecode];
    cfg.one_against_all = true;
    let out = run_experiment(&cfg).unwrap();
    let (cd, oaa): (Vec<_>, Vec<_>) = out.records.into_iter().partition(|r| r.algorithm == "cd");
    let relabel: Vec<ExperimentRecord> = cd
        .into_iter()
        .map(|r| ExperimentRecord {
            algorithm: ONE_AGAINST_ALL.into(),
            ..r
        })
        .collect();
    assert_records_close(&relabel, &oaa, 1e-12);
}

#[test]
fn separable_data_gives_perfect_precision_at_one() {
    let spec = SyntheticSpec {
        d: 64,
        p: 128,
        k_true: 1,
        n: 600,
        noise_level: 0.0,
        seed: 4,
        labels: LabelSampling::Threshold,
    };
    let mut cfg = RunConfig::synthetic(spec, 4);
    cfg.m_list = vec![64];
    cfg.k_max = 1;
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].precision_at_k, 1.0);
}

#[test]
fn persisted_artifacts_reproduce_the_records() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_run(5);
    cfg.algorithms = vec![Algorithm::Omp, Algorithm::Cosamp];
    cfg.one_against_all = true;
    cfg.artifacts = Some(dir.path().to_path_buf());
    let out = run_experiment(&cfg).unwrap();
    let (_, test) = labelsense::harness::experiment::load_data(&cfg).unwrap();
    let mut again = Vec::new();
    for &m in &cfg.m_list {
        let (mp, bp) = artifact_paths(dir.path(), MatrixKind::Hadamard, m);
        for &alg in &cfg.algorithms {
            again.extend(
                evaluate_persisted(&mp, &bp, &test, Some(alg), cfg.k_max, cfg.seed).unwrap(),
            );
        }
    }
    let (mp, bp) = artifact_paths(dir.path(), MatrixKind::Identity, 64);
    again.extend(evaluate_persisted(&mp, &bp, &test, None, cfg.k_max, cfg.seed).unwrap());
    assert_records_close(&out.records, &again, 1e-12);
}

#[test]
fn test_set_never_influences_training() {
    let dir = tempfile::tempdir().unwrap();
    let all = generate_synthetic(&small_spec(6)).unwrap();
    let (train, test) = all.split_at(200);
    let (_, other_test) = generate_synthetic(&small_spec(7)).unwrap().split_at(200);
    let train_path = dir.path().join("train.txt");
    train.write(&train_path).unwrap();

    let mut outputs = Vec::new();
    for (i, t) in [&test, &other_test].into_iter().enumerate() {
        let test_path = dir.path().join(format!("test{i}.txt"));
        t.write(&test_path).unwrap();
        let artifacts = dir.path().join(format!("run{i}"));
        let cfg = RunConfig {
            data: DataSource::Files {
                train: train_path.clone(),
                test: test_path,
            },
            artifacts: Some(artifacts.clone()),
            ..small_run(6)
        };
        let out = run_experiment(&cfg).unwrap();
        let (_, bp) = artifact_paths(&artifacts, MatrixKind::Hadamard, 32);
        outputs.push((out, RegressorBank::<f64>::load(bp).unwrap()));
    }
    assert_eq!(
        outputs[0].0.train_fingerprint,
        outputs[1].0.train_fingerprint
    );
    assert_ne!(outputs[0].0.test_fingerprint, outputs[1].0.test_fingerprint);
    assert_eq!(outputs[0].1, outputs[1].1);
}

#[test]
fn file_data_is_padded_for_hadamard() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        data: DataSource::Files {
            train: fixture(),
            test: fixture(),
        },
        m_list: vec![4, 8],
        k_max: 2,
        artifacts: Some(dir.path().to_path_buf()),
        ..RunConfig::synthetic(SyntheticSpec::default(), 1)
    };
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.d, 16);
    let a = labelsense::sensing::CompressionMatrix::<f64>::load(
        artifact_paths(dir.path(), MatrixKind::Hadamard, 8).0,
    )
    .unwrap();
    assert_eq!(a.cols(), 16);
}

#[test]
fn config_errors() {
    let base = small_run(1);
    let cases: Vec<RunConfig> = vec![
        RunConfig {
            m_list: vec![128],
            ..base.clone()
        },
        RunConfig {
            m_list: vec![0],
            ..base.clone()
        },
        RunConfig {
            k_max: 0,
            ..base.clone()
        },
        RunConfig {
            k_max: 20,
            ..base.clone()
        },
        RunConfig {
            lambda: -1.0,
            ..base.clone()
        },
        RunConfig {
            algorithms: vec![],
            ..base.clone()
        },
        RunConfig {
            m_list: vec![],
            ..base.clone()
        },
    ];
    for cfg in cases {
        let err = run_experiment(&cfg).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert_eq!(err.kind(), ErrorKind::Config);
    }
    let missing = RunConfig {
        data: DataSource::Files {
            train: "/nonexistent/train.txt".into(),
            test: fixture(),
        },
        ..base
    };
    assert_eq!(
        run_experiment(&missing).unwrap_err().kind(),
        ErrorKind::Data
    );
    assert!(matches!(
        "lasso".parse::<Algorithm>(),
        Err(Error::Config(_))
    ));
    assert!("walsh".parse::<MatrixKind>().is_err());
}

#[test]
fn csv_output_is_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    std::fs::write(&path, "stale").unwrap();
    let cfg = RunConfig {
        out: Some(path.clone()),
        ..small_run(8)
    };
    let out = run_experiment(&cfg).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, records_to_csv(&out.records));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[..4], &["omp", "hadamard", "16", "1"]);
    let mse: f64 = first[4].parse().unwrap();
    assert_eq!(mse, out.records[0].mean_squared_error);
    assert_eq!(text.lines().count(), 1 + out.records.len());
    // Only the result file remains: no temporary siblings.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    assert!(write_records_csv(dir.path().join("missing/dir/x.csv"), &out.records).is_err());
}
