//! Multi-label datasets and their text format.
//!
//! ```text
//! #dims d=<label dim> p=<feature dim>
//! <labels> <index:value> <index:value> ...
//! ```
//!
//! `<labels>` is a comma-separated list of 0-based label indices and may be
//! empty, in which case the line starts with a space. Feature indices are
//! 0-based and strictly increasing. Files are UTF-8 with LF line endings.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{data, Error, Result};
use crate::scalar::Real;
use crate::sparse::{FeatureVector, SparseLabelVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Example<T> {
    pub features: FeatureVector<T>,
    /// Observed labels (binary for real data).
    pub labels: SparseLabelVector<T>,
    /// The conditional mean `E[y|x]`, known only for synthetic data.
    pub ground_truth: Option<SparseLabelVector<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelDataset<T> {
    p: usize,
    d: usize,
    examples: Vec<Example<T>>,
}

impl<T: Real> MultiLabelDataset<T> {
    pub fn new(p: usize, d: usize, examples: Vec<Example<T>>) -> Result<Self> {
        if p == 0 || d == 0 {
            return Err(data("dataset dimensions must be positive"));
        }
        for (t, ex) in examples.iter().enumerate() {
            if ex.features.dim() != p || ex.labels.dim() != d {
                return Err(data(format!("example {t} has inconsistent dimensions")));
            }
            if ex.ground_truth.as_ref().is_some_and(|g| g.dim() != d) {
                return Err(data(format!(
                    "example {t} ground truth has wrong dimension"
                )));
            }
        }
        Ok(Self { p, d, examples })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.examples.len()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[Example<T>] {
        &self.examples
    }

    pub fn has_ground_truth(&self) -> bool {
        !self.examples.is_empty() && self.examples.iter().all(|e| e.ground_truth.is_some())
    }

    /// Splits into `(first n_first examples, rest)`.
    pub fn split_at(&self, n_first: usize) -> (Self, Self) {
        let n_first = n_first.min(self.len());
        let (a, b) = self.examples.split_at(n_first);
        (
            Self {
                p: self.p,
                d: self.d,
                examples: a.to_vec(),
            },
            Self {
                p: self.p,
                d: self.d,
                examples: b.to_vec(),
            },
        )
    }

    /// Same examples with the label dimension widened to `d` (labels keep
    /// their indices; the new coordinates are never active).
    pub fn with_label_dim(&self, d: usize) -> Result<Self> {
        if d < self.d {
            return Err(data("cannot shrink label dimension"));
        }
        let widen =
            |v: &SparseLabelVector<T>| SparseLabelVector::from_pairs(d, v.entries().to_vec());
        let examples = self
            .examples
            .iter()
            .map(|e| Example {
                features: e.features.clone(),
                labels: widen(&e.labels),
                ground_truth: e.ground_truth.as_ref().map(widen),
            })
            .collect();
        Self::new(self.p, d, examples)
    }

    /// SHA-256 over dimensions and every stored entry, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.p as u64).to_le_bytes());
        hasher.update((self.d as u64).to_le_bytes());
        let mut put = |v: &SparseLabelVector<T>| {
            hasher.update((v.nnz() as u64).to_le_bytes());
            for (i, x) in v.iter() {
                hasher.update((i as u64).to_le_bytes());
                hasher.update(x.to_f64_lossy().to_le_bytes());
            }
        };
        for e in &self.examples {
            put(&e.features);
            put(&e.labels);
            if let Some(g) = &e.ground_truth {
                put(g);
            }
        }
        hex(&hasher.finalize())
    }

    /// Writes the text format. Label values are written as indices, so only
    /// the support of each label vector is kept.
    pub fn to_text(&self) -> String {
        let mut out = format!("#dims d={} p={}\n", self.d, self.p);
        for e in &self.examples {
            let labels: Vec<String> = e.labels.support().iter().map(usize::to_string).collect();
            out.push_str(&labels.join(","));
            for (i, v) in e.features.iter() {
                let _ = write!(out, " {i}:{}", format_float(v.to_f64_lossy()));
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes
        .iter()
        .fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Shortest round-trip representation.
fn format_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn parse_dataset<T: Real>(path: impl AsRef<Path>) -> Result<MultiLabelDataset<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    parse_dataset_str(&text)
}

pub fn parse_dataset_str<T: Real>(text: &str) -> Result<MultiLabelDataset<T>> {
    let mut offset = 0usize;
    let mut lines = text.split('\n').peekable();
    let header = lines.next().unwrap_or("");
    let (d, p) = parse_header(header.trim_end_matches('\r'))?;
    offset += header.len() + 1;

    let mut examples = Vec::new();
    let mut line_no = 1;
    while let Some(raw) = lines.next() {
        line_no += 1;
        let line_start = offset;
        offset += raw.len() + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            if lines.peek().is_none() {
                break;
            }
            return Err(Error::Parse {
                line: line_no,
                offset: line_start,
                message: "empty line (an example without labels starts with a space)".into(),
            });
        }
        examples.push(parse_example(line, line_no, line_start, d, p)?);
    }
    MultiLabelDataset::new(p, d, examples)
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let err = |message: &str| Error::Parse {
        line: 1,
        offset: 0,
        message: message.to_string(),
    };
    let rest = line
        .strip_prefix("#dims")
        .ok_or_else(|| err("missing '#dims d=<int> p=<int>' header"))?;
    let (mut d, mut p) = (None, None);
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some(("d", v)) => d = v.parse::<usize>().ok(),
            Some(("p", v)) => p = v.parse::<usize>().ok(),
            _ => return Err(err(&format!("unexpected header token {tok:?}"))),
        }
    }
    match (d, p) {
        (Some(d), Some(p)) if d > 0 && p > 0 => Ok((d, p)),
        _ => Err(err("header needs positive integers d=<int> p=<int>")),
    }
}

fn parse_example<T: Real>(
    line: &str,
    line_no: usize,
    line_start: usize,
    d: usize,
    p: usize,
) -> Result<Example<T>> {
    let fail = |at: usize, message: String| Error::Parse {
        line: line_no,
        offset: line_start + at,
        message,
    };
    let label_end = line.find(' ').unwrap_or(line.len());
    let label_field = &line[..label_end];

    let mut labels = Vec::new();
    if !label_field.is_empty() {
        let mut pos = 0;
        for tok in label_field.split(',') {
            let idx: usize = tok
                .parse()
                .map_err(|_| fail(pos, format!("invalid label {tok:?}")))?;
            if idx >= d {
                return Err(fail(pos, format!("label {idx} out of range for d={d}")));
            }
            if labels.contains(&idx) {
                return Err(fail(pos, format!("duplicate label {idx}")));
            }
            labels.push(idx);
            pos += tok.len() + 1;
        }
    }

    let mut features = Vec::new();
    let mut pos = label_end;
    let mut last: Option<usize> = None;
    for tok in line[label_end..].split(' ') {
        let at = pos;
        pos += tok.len() + 1;
        if tok.is_empty() {
            continue;
        }
        let (i, v) = tok
            .split_once(':')
            .ok_or_else(|| fail(at, format!("expected index:value, got {tok:?}")))?;
        let idx: usize = i
            .parse()
            .map_err(|_| fail(at, format!("invalid feature index {i:?}")))?;
        let val: f64 = v
            .parse()
            .map_err(|_| fail(at, format!("invalid feature value {v:?}")))?;
        if idx >= p {
            return Err(fail(at, format!("feature {idx} out of range for p={p}")));
        }
        if last.is_some_and(|l| idx <= l) {
            return Err(fail(
                at,
                format!("feature index {idx} not strictly increasing"),
            ));
        }
        if !val.is_finite() {
            return Err(fail(at, format!("non-finite feature value {v:?}")));
        }
        last = Some(idx);
        features.push((idx, T::lit(val)));
    }
    Ok(Example {
        features: FeatureVector::from_pairs(p, features),
        labels: SparseLabelVector::indicator(d, &labels),
        ground_truth: None,
    })
}
