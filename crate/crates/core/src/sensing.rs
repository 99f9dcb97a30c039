//! Compression matrices `A ∈ R^{m×d}`: construction, application to label
//! vectors, coherence, restricted-isometry checks and binary persistence.
//!
//! Every construction is a pure function of `(kind, m, d, seed)`; see
//! [`crate::rng`] for the generator.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use itertools::Itertools;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{param, Error, Result};
use crate::linalg::{symmetric_eigenvalues, DenseMatrix};
use crate::rng::{seeded, streams};
use crate::scalar::Real;
use crate::sparse::SparseLabelVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// i.i.d. `N(0, 1/m)` entries.
    Gaussian,
    /// i.i.d. uniform signs `±1/√m`.
    Bernoulli,
    /// `m` distinct rows of the `d×d` Sylvester–Hadamard matrix, scaled by `1/√m`.
    Hadamard,
    /// `I_d`; only valid for `m = d`. Used for the one-against-all reference.
    Identity,
}

impl MatrixKind {
    pub fn code(self) -> u8 {
        match self {
            MatrixKind::Gaussian => 0,
            MatrixKind::Bernoulli => 1,
            MatrixKind::Hadamard => 2,
            MatrixKind::Identity => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => MatrixKind::Gaussian,
            1 => MatrixKind::Bernoulli,
            2 => MatrixKind::Hadamard,
            3 => MatrixKind::Identity,
            other => return Err(Error::Format(format!("unknown matrix kind code {other}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::Gaussian => "gaussian",
            MatrixKind::Bernoulli => "bernoulli",
            MatrixKind::Hadamard => "hadamard",
            MatrixKind::Identity => "identity",
        }
    }

    fn is_sign_matrix(self) -> bool {
        matches!(self, MatrixKind::Bernoulli | MatrixKind::Hadamard)
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MatrixKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(MatrixKind::Gaussian),
            "bernoulli" => Ok(MatrixKind::Bernoulli),
            "hadamard" => Ok(MatrixKind::Hadamard),
            "identity" => Ok(MatrixKind::Identity),
            other => Err(Error::Config(format!("unknown matrix kind {other:?}"))),
        }
    }
}

/// The sensing map `A` with its construction metadata. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionMatrix<T> {
    kind: MatrixKind,
    seed: u64,
    entries: DenseMatrix<T>,
}

impl<T: Real> CompressionMatrix<T> {
    /// Generates `A` deterministically from `(kind, m, d, seed)`.
    pub fn generate(kind: MatrixKind, m: usize, d: usize, seed: u64) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(param(format!(
                "matrix dimensions must be positive (m={m}, d={d})"
            )));
        }
        if m > d {
            return Err(param(format!(
                "m={m} exceeds d={d}; compression needs m <= d"
            )));
        }
        let scale = 1.0 / (m as f64).sqrt();
        let entries = match kind {
            MatrixKind::Gaussian => {
                let mut rng = seeded(seed, streams::MATRIX_ENTRIES);
                let data = (0..m * d)
                    .map(|_| {
                        let z: f64 = rng.sample(StandardNormal);
                        T::lit(z * scale)
                    })
                    .collect();
                DenseMatrix::from_row_major(m, d, data)?
            }
            MatrixKind::Bernoulli => {
                let mut rng = seeded(seed, streams::MATRIX_ENTRIES);
                let pos = T::lit(scale);
                let data = (0..m * d)
                    .map(|_| if rng.random::<bool>() { pos } else { -pos })
                    .collect();
                DenseMatrix::from_row_major(m, d, data)?
            }
            MatrixKind::Hadamard => {
                if !d.is_power_of_two() {
                    return Err(Error::Dimension(format!(
                        "hadamard construction needs d a power of two, got d={d}"
                    )));
                }
                let rows = hadamard_rows(m, d, seed);
                let pos = T::lit(scale);
                DenseMatrix::from_fn(m, d, |i, j| {
                    if (rows[i] & j).count_ones().is_multiple_of(2) {
                        pos
                    } else {
                        -pos
                    }
                })
            }
            MatrixKind::Identity => {
                if m != d {
                    return Err(param(format!(
                        "identity compression needs m = d (m={m}, d={d})"
                    )));
                }
                DenseMatrix::identity(d)
            }
        };
        Ok(Self {
            kind,
            seed,
            entries,
        })
    }

    /// Wraps an explicit matrix (tests, hand-built examples). The kind is
    /// recorded as `Gaussian` since no structural invariant is claimed.
    pub fn from_dense(entries: DenseMatrix<T>) -> Self {
        Self {
            kind: MatrixKind::Gaussian,
            seed: 0,
            entries,
        }
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn dense(&self) -> &DenseMatrix<T> {
        &self.entries
    }

    /// `A·y`, accumulating only over the support of `y`.
    ///
    /// Sign matrices sum `±y_j` first and divide by `√m` once, so for binary
    /// `y` the result is the correctly rounded value of an integer over `√m`.
    pub fn compress(&self, y: &SparseLabelVector<T>) -> Result<Vec<T>> {
        if y.dim() != self.cols() {
            return Err(param(format!(
                "label dimension {} does not match matrix columns {}",
                y.dim(),
                self.cols()
            )));
        }
        let m = self.rows();
        let mut out = vec![T::zero(); m];
        if self.kind.is_sign_matrix() {
            let root_m = T::from_usize_lossy(m).sqrt();
            for (i, o) in out.iter_mut().enumerate() {
                let row = self.entries.row(i);
                let mut acc = T::zero();
                for (j, v) in y.iter() {
                    if row[j] > T::zero() {
                        acc += v;
                    } else {
                        acc -= v;
                    }
                }
                *o = acc / root_m;
            }
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                let row = self.entries.row(i);
                *o = y.iter().fold(T::zero(), |acc, (j, v)| acc + row[j] * v);
            }
        }
        Ok(out)
    }

    /// `A·y` for a dense `y`.
    pub fn apply_dense(&self, y: &[T]) -> Result<Vec<T>> {
        if y.len() != self.cols() {
            return Err(param(format!(
                "vector length {} does not match matrix columns {}",
                y.len(),
                self.cols()
            )));
        }
        Ok(self.entries.matvec(y))
    }

    /// Mutual coherence `max_{i<j} |⟨a_i,a_j⟩| / (‖a_i‖‖a_j‖)`.
    pub fn coherence(&self) -> Result<T> {
        coherence_of_gram(&self.entries.gram())
    }

    /// Exhaustive `(s, δ)`-RIP check over all `C(d, s)` supports.
    pub fn rip_check(&self, s: usize, delta: T) -> Result<RipOutcome> {
        if !(delta > T::zero() && delta < T::one()) {
            return Err(param(format!("delta must lie in (0, 1), got {delta}")));
        }
        let d = self.cols();
        if d > RIP_MAX_DIM || s > RIP_MAX_SPARSITY {
            return Err(Error::Scale(format!(
                "rip_check enumerates C(d, s) supports; limited to d <= {RIP_MAX_DIM}, \
                 s <= {RIP_MAX_SPARSITY} (got d={d}, s={s})"
            )));
        }
        if s == 0 || s > d {
            return Err(param(format!("sparsity must lie in 1..={d}, got {s}")));
        }
        let gram = self.entries.gram();
        let lo = T::one() - delta;
        let hi = T::one() + delta;
        for support in (0..d).combinations(s) {
            let (min, max) = restricted_eigen_extremes(&gram, &support);
            if min < lo || max > hi {
                return Ok(RipOutcome::Violated { support });
            }
        }
        Ok(RipOutcome::Holds)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MATRIX_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&[self.kind.code()])?;
        w.write_all(&(self.rows() as u64).to_le_bytes())?;
        w.write_all(&(self.cols() as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for v in self.entries.as_slice() {
            w.write_all(&v.to_f64_lossy().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let magic: [u8; 4] = read_array(&mut r)?;
        if &magic != MATRIX_MAGIC {
            return Err(Error::Format(
                "not a compression matrix file (bad magic)".into(),
            ));
        }
        let version = u16::from_le_bytes(read_array(&mut r)?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported matrix file version {version}"
            )));
        }
        let [code] = read_array::<1>(&mut r)?;
        let kind = MatrixKind::from_code(code)?;
        let m = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let d = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let seed = u64::from_le_bytes(read_array(&mut r)?);
        let count = m
            .checked_mul(d)
            .ok_or_else(|| Error::Format("matrix dimensions overflow".into()))?;
        // Capped: a corrupt header must not trigger a huge allocation.
        let mut data = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            data.push(T::lit(f64::from_le_bytes(read_array(&mut r)?)));
        }
        Ok(Self {
            kind,
            seed,
            entries: DenseMatrix::from_row_major(m, d, data)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(bytes.as_slice())
    }
}

pub const RIP_MAX_DIM: usize = 24;
pub const RIP_MAX_SPARSITY: usize = 4;

const MATRIX_MAGIC: &[u8; 4] = b"LSMX";
const FORMAT_VERSION: u16 = 1;

pub(crate) fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("file truncated".into())
        } else {
            Error::Io(e)
        }
    })?;
    Ok(buf)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RipOutcome {
    Holds,
    Violated { support: Vec<usize> },
}

impl RipOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, RipOutcome::Holds)
    }
}

/// Hadamard row indices: `m` distinct rows drawn uniformly from `0..d`,
/// returned in ascending order. Row 0 (all ones) is eligible.
fn hadamard_rows(m: usize, d: usize, seed: u64) -> Vec<usize> {
    let mut rng = seeded(seed, streams::HADAMARD_ROWS);
    let mut rows = rand::seq::index::sample(&mut rng, d, m).into_vec();
    rows.sort_unstable();
    rows
}

pub(crate) fn coherence_of_gram<T: Real>(gram: &DenseMatrix<T>) -> Result<T> {
    let d = gram.rows();
    if let Some(column) = (0..d).find(|&j| gram[(j, j)] == T::zero()) {
        return Err(Error::DegenerateColumn { column });
    }
    let norms: Vec<T> = (0..d).map(|j| gram[(j, j)].sqrt()).collect();
    let mut mu = T::zero();
    for i in 0..d {
        for j in (i + 1)..d {
            let c = gram[(i, j)].abs() / (norms[i] * norms[j]);
            if c > mu {
                mu = c;
            }
        }
    }
    Ok(mu)
}

/// Smallest and largest eigenvalue of `A_Sᵀ A_S`, read off the full Gram.
pub fn restricted_eigen_extremes<T: Real>(gram: &DenseMatrix<T>, support: &[usize]) -> (T, T) {
    let sub = DenseMatrix::from_fn(support.len(), support.len(), |a, b| {
        gram[(support[a], support[b])]
    });
    let ev = symmetric_eigenvalues(&sub);
    (ev[0], ev[ev.len() - 1])
}

/// Welch lower bound on the coherence of any `m×d` matrix (`d > m`).
pub fn welch_bound(m: usize, d: usize) -> f64 {
    if d <= m || d < 2 {
        return 0.0;
    }
    (((d - m) as f64) / ((m * (d - 1)) as f64)).sqrt()
}
