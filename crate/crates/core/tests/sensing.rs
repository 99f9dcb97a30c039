use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use labelsense::error::Error;
use labelsense::linalg::DenseMatrix;
use labelsense::rng::seeded;
use labelsense::sensing::{welch_bound, CompressionMatrix, RipOutcome};
use labelsense::sparse::SparseLabelVector;
use labelsense::MatrixKind;

fn dense(a: &CompressionMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.dense().as_slice())
}

fn explicit(rows: &[Vec<f64>]) -> CompressionMatrix<f64> {
    CompressionMatrix::from_dense(DenseMatrix::from_rows(rows).unwrap())
}

/// Max over all `s`-supports of `max(λ_max − 1, 1 − λ_min)`, via nalgebra.
fn enumerated_delta(a: &DMatrix<f64>, s: usize) -> f64 {
    let gram = a.transpose() * a;
    (0..a.ncols())
        .combinations(s)
        .map(|sup| {
            let sub = DMatrix::from_fn(s, s, |i, j| gram[(sup[i], sup[j])]);
            let ev = sub.symmetric_eigenvalues();
            let lo = ev.min();
            let hi = ev.max();
            (hi - 1.0).max(1.0 - lo)
        })
        .fold(0.0, f64::max)
}

fn coherence(a: &DMatrix<f64>) -> f64 {
    let gram = a.transpose() * a;
    let mut mu = 0.0f64;
    for i in 0..a.ncols() {
        for j in i + 1..a.ncols() {
            mu = mu.max(gram[(i, j)].abs() / (gram[(i, i)] * gram[(j, j)]).sqrt());
        }
    }
    mu
}

#[test]
fn hadamard_4x8_has_scaled_orthogonal_rows() {
    let a = CompressionMatrix::<f64>::generate(MatrixKind::Hadamard, 4, 8, 1).unwrap();
    let aat = dense(&a) * dense(&a).transpose();
    assert_eq!(aat, DMatrix::identity(4, 4) * 2.0);
}

#[test]
fn hadamard_rows_are_distinct_sylvester_rows() {
    let (m, d) = (16, 64);
    let a = CompressionMatrix::<f64>::generate(MatrixKind::Hadamard, m, d, 21).unwrap();
    let scale = (m as f64).sqrt();
    let mut seen = Vec::new();
    for i in 0..m {
        let signs: Vec<f64> = a.dense().row(i).iter().map(|v| v * scale).collect();
        // Column 1 and powers of two identify the row index bit by bit.
        let r = (0..6)
            .filter(|&b| signs[1 << b] < 0.0)
            .map(|b| 1usize << b)
            .sum::<usize>();
        for (j, &s) in signs.iter().enumerate() {
            let expected = if (r & j).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            assert_eq!(s, expected, "row {i} col {j}");
        }
        seen.push(r);
    }
    let n = seen.len();
    seen.dedup();
    assert_eq!(seen.len(), n, "rows must be distinct and ascending");
}

#[test]
fn bernoulli_4x16_entries_are_half() {
    let a = CompressionMatrix::<f64>::generate(MatrixKind::Bernoulli, 4, 16, 9).unwrap();
    assert!(a.dense().as_slice().iter().all(|&v| v == 0.5 || v == -0.5));
}

#[test]
fn gaussian_8x32_mean_is_small() {
    let a = CompressionMatrix::<f64>::generate(MatrixKind::Gaussian, 8, 32, 3).unwrap();
    let mean = a.dense().as_slice().iter().sum::<f64>() / 256.0;
    assert!(mean.abs() <= 3.0 / (8.0f64 * 256.0).sqrt(), "mean {mean}");
}

#[test]
fn generation_is_deterministic_and_seed_sensitive() {
    for kind in [
        MatrixKind::Gaussian,
        MatrixKind::Bernoulli,
        MatrixKind::Hadamard,
    ] {
        let a = CompressionMatrix::<f64>::generate(kind, 8, 32, 5).unwrap();
        let b = CompressionMatrix::<f64>::generate(kind, 8, 32, 5).unwrap();
        let c = CompressionMatrix::<f64>::generate(kind, 8, 32, 6).unwrap();
        assert_eq!(a.dense(), b.dense());
        assert_ne!(a.dense(), c.dense());
    }
}

#[test]
fn generation_errors() {
    assert!(matches!(
        CompressionMatrix::<f64>::generate(MatrixKind::Hadamard, 4, 12, 1),
        Err(Error::Dimension(_))
    ));
    assert!(matches!(
        CompressionMatrix::<f64>::generate(MatrixKind::Gaussian, 9, 8, 1),
        Err(Error::Parameter(_))
    ));
    assert!(matches!(
        CompressionMatrix::<f64>::generate(MatrixKind::Bernoulli, 0, 8, 1),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn compress_examples() {
    let a = explicit(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]);
    let y = SparseLabelVector::indicator(3, &[0, 2]);
    assert_eq!(a.compress(&y).unwrap(), vec![1.0, 1.0]);
    assert_eq!(
        a.compress(&SparseLabelVector::zero(3)).unwrap(),
        vec![0.0, 0.0]
    );
    assert!(matches!(
        a.compress(&SparseLabelVector::zero(4)),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn bernoulli_range_bound_on_binary_three_sparse() {
    let a = CompressionMatrix::<f64>::generate(MatrixKind::Bernoulli, 25, 100, 5).unwrap();
    let mut rng = seeded(77, 0);
    for _ in 0..200 {
        let support = rand::seq::index::sample(&mut rng, 100, 3).into_vec();
        let z = a
            .compress(&SparseLabelVector::indicator(100, &support))
            .unwrap();
        let max = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max <= 3.0 / 5.0, "‖Ay‖∞ = {max}");
    }
}

#[test]
fn compress_matches_dense_product() {
    let mut rng = seeded(8, 0);
    for kind in [
        MatrixKind::Gaussian,
        MatrixKind::Bernoulli,
        MatrixKind::Hadamard,
    ] {
        let a = CompressionMatrix::<f64>::generate(kind, 16, 64, 2).unwrap();
        let values: Vec<f64> = (0..64)
            .map(|_| {
                if rng.random_bool(0.2) {
                    rng.random_range(-1.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let y = SparseLabelVector::from_dense(&values);
        let reference = dense(&a) * DVector::from_vec(values.clone());
        let got = a.compress(&y).unwrap();
        for (g, r) in got.iter().zip(reference.iter()) {
            assert!((g - r).abs() <= 1e-12, "{kind:?}: {g} vs {r}");
        }
        assert_eq!(a.apply_dense(&values).unwrap().len(), 16);
    }
}

#[test]
fn coherence_examples() {
    assert_eq!(
        explicit(&[vec![1.0, 0.0], vec![0.0, 1.0]])
            .coherence()
            .unwrap(),
        0.0
    );
    assert_eq!(
        explicit(&[vec![1.0, 1.0], vec![0.0, 0.0]])
            .coherence()
            .unwrap(),
        1.0
    );
    let r = 0.5f64.sqrt();
    let mu = explicit(&[vec![1.0, r], vec![0.0, r]]).coherence().unwrap();
    assert!((mu - r).abs() < 1e-15);
    assert!(matches!(
        explicit(&[vec![1.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).coherence(),
        Err(Error::DegenerateColumn { column: 1 })
    ));
}

#[test]
fn coherence_matches_independent_computation() {
    for kind in [
        MatrixKind::Gaussian,
        MatrixKind::Bernoulli,
        MatrixKind::Hadamard,
    ] {
        let a = CompressionMatrix::<f64>::generate(kind, 12, 32, 4).unwrap();
        let got = a.coherence().unwrap();
        assert!((got - coherence(&dense(&a))).abs() < 1e-12);
        assert!(got + 1e-12 >= welch_bound(12, 32));
    }
}

#[test]
fn coherence_scales_like_sqrt_log_d_over_m() {
    let (m, d) = (64, 1024);
    let bound = 4.0 * ((d as f64).ln() / m as f64).sqrt();
    for kind in [MatrixKind::Bernoulli, MatrixKind::Hadamard] {
        let within = (0..100u64)
            .filter(|&seed| {
                let a = CompressionMatrix::<f64>::generate(kind, m, d, seed).unwrap();
                a.coherence().unwrap() <= bound
            })
            .count();
        assert!(within >= 95, "{kind:?}: {within}/100 within {bound}");
    }
}

#[test]
fn rip_check_examples() {
    let eye = CompressionMatrix::<f64>::generate(MatrixKind::Identity, 6, 6, 0).unwrap();
    for s in 1..=4 {
        assert!(eye.rip_check(s, 0.01).unwrap().holds());
    }
    let pair = explicit(&[vec![1.0, 1.0]]);
    assert_eq!(
        pair.rip_check(2, 0.5).unwrap(),
        RipOutcome::Violated {
            support: vec![0, 1]
        }
    );
    assert!(matches!(eye.rip_check(2, 1.0), Err(Error::Parameter(_))));
    assert!(matches!(eye.rip_check(2, 0.0), Err(Error::Parameter(_))));
    let wide = CompressionMatrix::<f64>::generate(MatrixKind::Gaussian, 8, 32, 1).unwrap();
    assert!(matches!(wide.rip_check(2, 0.5), Err(Error::Scale(_))));
}

#[test]
fn rip_check_on_gaussian_16x20_seed_11() {
    let a = CompressionMatrix::<f64>::generate(MatrixKind::Gaussian, 16, 20, 11).unwrap();
    let delta = enumerated_delta(&dense(&a), 2);
    // Raw N(0, 1/m) columns deviate from unit norm by more than 1 here, so
    // no admissible δ < 1 can hold.
    assert!(delta >= 1.0, "δ = {delta}");
    assert!(!a.rip_check(2, 1.0 - 1e-9).unwrap().holds());
}

#[test]
fn rip_check_brackets_the_enumerated_delta() {
    // Unit columns: for s = 2 the restricted eigenvalues are 1 ± |⟨a_i, a_j⟩|,
    // so δ equals the coherence.
    let raw = CompressionMatrix::<f64>::generate(MatrixKind::Gaussian, 16, 20, 11).unwrap();
    let norms = raw.dense().column_norms();
    let a = CompressionMatrix::from_dense(DenseMatrix::from_fn(16, 20, |i, j| {
        raw.dense()[(i, j)] / norms[j]
    }));
    let delta = enumerated_delta(&dense(&a), 2);
    assert!((delta - coherence(&dense(&a))).abs() < 1e-12);
    assert!(delta > 0.0 && delta < 1.0, "δ = {delta}");
    assert!(a.rip_check(2, delta + 1e-9).unwrap().holds());
    assert!(!a.rip_check(2, delta - 1e-9).unwrap().holds());
}

#[test]
fn matrix_file_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.lsmx");
    let a = CompressionMatrix::<f64>::generate(MatrixKind::Hadamard, 8, 32, 4).unwrap();
    a.save(&path).unwrap();
    let b = CompressionMatrix::<f64>::load(&path).unwrap();
    assert_eq!(b.dense(), a.dense());
    assert_eq!((b.kind(), b.seed()), (MatrixKind::Hadamard, 4));

    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"LSMX");
    assert_eq!(bytes.len(), 4 + 2 + 1 + 8 + 8 + 8 + 8 * 8 * 32);

    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(matches!(
        CompressionMatrix::<f64>::read_from(bad_magic.as_slice()),
        Err(Error::Format(_))
    ));
    let mut bad_version = bytes.clone();
    bad_version[4] = 9;
    assert!(matches!(
        CompressionMatrix::<f64>::read_from(bad_version.as_slice()),
        Err(Error::Format(_))
    ));
    let mut bad_kind = bytes.clone();
    bad_kind[6] = 200;
    assert!(CompressionMatrix::<f64>::read_from(bad_kind.as_slice()).is_err());
    for cut in [2, 10, bytes.len() - 1] {
        assert!(
            matches!(
                CompressionMatrix::<f64>::read_from(&bytes[..cut]),
                Err(Error::Format(_))
            ),
            "truncated at {cut}"
        );
    }
    let mut huge = bytes.clone();
    huge[7..15].copy_from_slice(&(1u64 << 40).to_le_bytes());
    assert!(matches!(
        CompressionMatrix::<f64>::read_from(huge.as_slice()),
        Err(Error::Format(_))
    ));
}

#[test]
fn f32_matrices_follow_f64_ones() {
    let a64 = CompressionMatrix::<f64>::generate(MatrixKind::Gaussian, 8, 16, 3).unwrap();
    let a32 = CompressionMatrix::<f32>::generate(MatrixKind::Gaussian, 8, 16, 3).unwrap();
    for (x, y) in a64.dense().as_slice().iter().zip(a32.dense().as_slice()) {
        assert_eq!(*x as f32, *y);
    }
}
