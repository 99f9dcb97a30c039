//! Planted-model synthetic data with known conditional means.
//!
//! A dictionary `W ∈ R^{p×d}` with `N(0, 1/p)` entries is drawn once. Each
//! example draws a support `S` of size `k_true` uniformly, sets
//! `E[y|x]_j ~ U[0.5, 1]` for `j ∈ S`, encodes `x = W·E[y|x] + noise·g/√p`
//! with `g` standard normal, and samples `y_j ~ Bernoulli(E[y|x]_j)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dataset::{Example, MultiLabelDataset};
use crate::error::{param, Error, Result};
use crate::rng::{seeded, streams};
use crate::sparse::{FeatureVector, SparseLabelVector};

/// How observed labels are drawn from the conditional mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LabelSampling {
    /// `y_j ~ Bernoulli(E[y|x]_j)`.
    Bernoulli,
    /// `y_j = 1` exactly on the support of `E[y|x]`.
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticSpec {
    pub d: usize,
    pub p: usize,
    pub k_true: usize,
    pub n: usize,
    pub noise_level: f64,
    pub seed: u64,
    pub labels: LabelSampling,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            d: 1024,
            p: 256,
            k_true: 5,
            n: 4000,
            noise_level: 0.1,
            seed: 1,
            labels: LabelSampling::Bernoulli,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.p == 0 || self.n == 0 {
            return Err(param("synthetic d, p and n must be positive"));
        }
        if !self.d.is_power_of_two() {
            return Err(param(format!(
                "synthetic d must be a power of two, got {}",
                self.d
            )));
        }
        if self.k_true == 0 || self.k_true > self.d {
            return Err(param(format!(
                "k_true must lie in 1..={}, got {}",
                self.d, self.k_true
            )));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(param("noise level must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Parses `d=..,p=..,k=..,n=..,noise=..[,seed=..][,labels=bernoulli|threshold]`.
/// Omitted keys keep their defaults.
impl FromStr for SyntheticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = SyntheticSpec::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "expected key=value in synthetic spec, got {part:?}"
                ))
            })?;
            let bad = || Error::Config(format!("invalid value for {key}: {value:?}"));
            match key {
                "d" => spec.d = value.parse().map_err(|_| bad())?,
                "p" => spec.p = value.parse().map_err(|_| bad())?,
                "k" => spec.k_true = value.parse().map_err(|_| bad())?,
                "n" => spec.n = value.parse().map_err(|_| bad())?,
                "noise" => spec.noise_level = value.parse().map_err(|_| bad())?,
                "seed" => spec.seed = value.parse().map_err(|_| bad())?,
                "labels" => {
                    spec.labels = match value {
                        "bernoulli" => LabelSampling::Bernoulli,
                        "threshold" => LabelSampling::Threshold,
                        _ => return Err(bad()),
                    }
                }
                _ => return Err(Error::Config(format!("unknown synthetic key {key:?}"))),
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "d={},p={},k={},n={},noise={},seed={}",
            self.d, self.p, self.k_true, self.n, self.noise_level, self.seed
        )
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiLabelDataset<f64>> {
    spec.validate()?;
    let SyntheticSpec {
        d, p, k_true, n, ..
    } = *spec;
    let mut rng = seeded(spec.seed, streams::SYNTHETIC);
    let col_scale = 1.0 / (p as f64).sqrt();
    // Column-major so each planted label adds one contiguous column.
    let w: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            (0..p)
                .map(|_| col_scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let noise_scale = spec.noise_level * col_scale;

    let mut examples = Vec::with_capacity(n);
    for _ in 0..n {
        let mut support = rand::seq::index::sample(&mut rng, d, k_true).into_vec();
        support.sort_unstable();
        let means: Vec<(usize, f64)> = support
            .iter()
            .map(|&j| (j, rng.random_range(0.5..=1.0)))
            .collect();
        let mut x = vec![0.0; p];
        for &(j, v) in &means {
            for (xi, &wij) in x.iter_mut().zip(&w[j]) {
                *xi += v * wij;
            }
        }
        for xi in x.iter_mut() {
            *xi += noise_scale * rng.sample::<f64, _>(StandardNormal);
        }
        let labels: Vec<usize> = match spec.labels {
            LabelSampling::Bernoulli => means
                .iter()
                .filter(|&&(_, v)| rng.random_bool(v))
                .map(|&(j, _)| j)
                .collect(),
            LabelSampling::Threshold => support.clone(),
        };
        examples.push(Example {
            features: FeatureVector::from_dense(&x),
            labels: SparseLabelVector::indicator(d, &labels),
            ground_truth: Some(SparseLabelVector::from_pairs(d, means)),
        });
    }
    MultiLabelDataset::new(p, d, examples)
}

/// Number of examples carrying each label.
pub fn label_frequencies(ds: &MultiLabelDataset<f64>) -> Vec<usize> {
    let mut freq = vec![0; ds.d()];
    for ex in ds.examples() {
        for (j, _) in ex.labels.iter() {
            freq[j] += 1;
        }
    }
    freq
}
