//! Sparse vectors stored as strictly increasing `(index, value)` pairs.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A `dim`-dimensional vector holding only its nonzero entries.
///
/// Invariants: indices are strictly increasing and `< dim`; stored values
/// are nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<T> {
    dim: usize,
    entries: Vec<(usize, T)>,
}

/// Label vectors `y`, predictions `ŷ` and conditional means `E[y|x]`.
pub type SparseLabelVector<T> = SparseVector<T>;
/// Feature vectors `x`.
pub type FeatureVector<T> = SparseVector<T>;

impl<T: Real> SparseVector<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Validating constructor.
    pub fn new(dim: usize, entries: Vec<(usize, T)>) -> Result<Self> {
        let mut prev: Option<usize> = None;
        for &(i, v) in &entries {
            if i >= dim {
                return Err(Error::Data(format!(
                    "index {i} out of range for dimension {dim}"
                )));
            }
            if prev.is_some_and(|p| i <= p) {
                return Err(Error::Data(format!(
                    "indices not strictly increasing at {i}"
                )));
            }
            if v == T::zero() {
                return Err(Error::Data(format!("explicit zero stored at index {i}")));
            }
            if !v.is_finite() {
                return Err(Error::Data(format!("non-finite value at index {i}")));
            }
            prev = Some(i);
        }
        Ok(Self { dim, entries })
    }

    /// Builds from arbitrary-order pairs: sorts by index, drops zeros.
    /// Panics on duplicate or out-of-range indices, which are caller bugs.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, T)>) -> Self {
        pairs.retain(|&(_, v)| v != T::zero());
        pairs.sort_by_key(|&(i, _)| i);
        assert!(
            pairs.windows(2).all(|w| w[0].0 < w[1].0),
            "duplicate index in sparse vector"
        );
        assert!(
            pairs.last().is_none_or(|&(i, _)| i < dim),
            "index out of range"
        );
        Self {
            dim,
            entries: pairs,
        }
    }

    pub fn from_dense(values: &[T]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != T::zero())
            .map(|(i, &v)| (i, v))
            .collect();
        Self {
            dim: values.len(),
            entries,
        }
    }

    /// Binary indicator vector over `indices` (any order, deduplicated).
    pub fn indicator(dim: usize, indices: &[usize]) -> Self {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        Self::from_pairs(dim, idx.into_iter().map(|i| (i, T::one())).collect())
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, T)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries.iter().map(|&(i, _)| i).collect()
    }

    pub fn get(&self, index: usize) -> T {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(T::zero(), |pos| self.entries[pos].1)
    }

    pub fn norm_sq(&self) -> T {
        self.entries.iter().fold(T::zero(), |a, &(_, v)| a + v * v)
    }

    pub fn norm_l1(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |a, &(_, v)| a + v.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v.is_finite())
    }

    /// `‖self − other‖²` over the union of supports.
    pub fn distance_sq(&self, other: &Self) -> Result<T> {
        if self.dim != other.dim {
            return Err(Error::Data(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = T::zero();
        while i < a.len() || j < b.len() {
            let diff = match (a.get(i), b.get(j)) {
                (Some(&(ia, va)), Some(&(ib, vb))) => match ia.cmp(&ib) {
                    Ordering::Less => {
                        i += 1;
                        va
                    }
                    Ordering::Greater => {
                        j += 1;
                        -vb
                    }
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                        va - vb
                    }
                },
                (Some(&(_, va)), None) => {
                    i += 1;
                    va
                }
                (None, Some(&(_, vb))) => {
                    j += 1;
                    -vb
                }
                (None, None) => unreachable!(),
            };
            acc += diff * diff;
        }
        Ok(acc)
    }

    /// Stored entries ordered by magnitude, largest first; equal magnitudes
    /// keep the smaller index first.
    pub fn ranked(&self) -> Vec<(usize, T)> {
        let mut e = self.entries.clone();
        e.sort_by(|a, b| rank_order(a.0, a.1, b.0, b.1));
        e
    }

    /// `y_(1:k)` and the tail `y − y_(1:k)`.
    pub fn split_top_k(&self, k: usize) -> (Self, Self) {
        let ranked = self.ranked();
        let cut = k.min(ranked.len());
        let head = Self::from_pairs(self.dim, ranked[..cut].to_vec());
        let tail = Self::from_pairs(self.dim, ranked[cut..].to_vec());
        (head, tail)
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_pairs(
            self.dim,
            self.entries.iter().map(|&(i, v)| (i, f(v))).collect(),
        )
    }
}

/// Total order on `(index, value)` by descending magnitude, ties to the
/// smaller index. Used for every ranking in the crate.
pub fn rank_order<T: Real>(ia: usize, va: T, ib: usize, vb: T) -> Ordering {
    vb.abs()
        .partial_cmp(&va.abs())
        .unwrap_or(Ordering::Equal)
        .then(ia.cmp(&ib))
}

/// Indices of the `k` largest `|values[j]|` (ties to the smaller index),
/// restricted to `eligible` positions, returned in rank order.
pub fn top_k_by_magnitude<T: Real>(
    values: &[T],
    k: usize,
    eligible: impl Fn(usize) -> bool,
) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&j| eligible(j)).collect();
    idx.sort_by(|&a, &b| rank_order(a, values[a], b, values[b]));
    idx.truncate(k);
    idx
}
