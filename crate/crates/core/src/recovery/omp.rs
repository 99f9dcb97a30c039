//! Orthogonal matching pursuit.
//!
//! Each step selects `j* = argmax_j |rᵀa_j| / ‖a_j‖` (zero columns are never
//! selected; ties go to the smaller index), appends it to `J`, and refits
//! `ŷ_J = (A_J)† h`. The refit uses an incrementally grown orthonormal basis
//! of `span(A_J)` (classical Gram–Schmidt with one reorthogonalization pass);
//! a column whose orthogonal component falls below
//! `ls_rank_tolerance · max_{j∈J} ‖a_j‖` is treated as dependent and gets a
//! zero coefficient.
//!
//! Iteration stops after `2k` steps, when `‖r‖ ≤ residual_tolerance`, or when
//! the argmax is already in `J` (the refit residual is orthogonal to every
//! selected column, so re-selection cannot make progress).

use crate::error::{param, Result};
use crate::linalg::{dot, norm};
use crate::scalar::Real;
use crate::sensing::CompressionMatrix;
use crate::sparse::SparseLabelVector;

use super::{Algorithm, Dictionary, ReconstructionConfig, ReconstructionResult};

/// OMP on `A` with sparsity level `cfg.k`; at most `2k` columns.
pub fn omp<T: Real>(
    a: &CompressionMatrix<T>,
    h: &[T],
    cfg: &ReconstructionConfig<T>,
) -> Result<ReconstructionResult<T>> {
    if cfg.algorithm != Algorithm::Omp {
        return Err(param("omp called with a non-OMP configuration"));
    }
    let dict = Dictionary::new(a);
    Ok(omp_path(&dict, h, &[cfg.k], cfg)?.remove(0))
}

/// Runs OMP once and returns the result for every sparsity level in
/// `levels`. The greedy path does not depend on `k`, so the result for level
/// `k` is the state after `2k` steps and equals a separate run with that `k`.
pub fn omp_path<T: Real>(
    dict: &Dictionary<'_, T>,
    h: &[T],
    levels: &[usize],
    cfg: &ReconstructionConfig<T>,
) -> Result<Vec<ReconstructionResult<T>>> {
    cfg.validate()?;
    dict.check_measurement(h)?;
    if levels.contains(&0) {
        return Err(param("sparsity level k must be at least 1"));
    }
    let step_budget: Vec<usize> = levels
        .iter()
        .map(|&k| cfg.with_k(k).effective_max_iterations())
        .collect();
    let max_steps = step_budget.iter().copied().max().unwrap_or(0);

    let mut state = OmpState::new(dict, h, cfg.ls_rank_tolerance);
    let mut snapshots: Vec<Option<ReconstructionResult<T>>> = vec![None; levels.len()];
    let capture = |state: &OmpState<'_, '_, T>, snaps: &mut [Option<ReconstructionResult<T>>]| {
        for (slot, &budget) in snaps.iter_mut().zip(&step_budget) {
            if slot.is_none() && state.iterations() == budget {
                *slot = Some(state.result());
            }
        }
    };
    capture(&state, &mut snapshots);

    while state.iterations() < max_steps {
        if state.residual_norm <= cfg.residual_tolerance {
            break;
        }
        match state.best_column() {
            Some(j) if !state.selected.contains(&j) => state.add_column(j),
            _ => break,
        }
        capture(&state, &mut snapshots);
    }

    let final_result = state.result();
    Ok(snapshots
        .into_iter()
        .map(|s| s.unwrap_or_else(|| final_result.clone()))
        .collect())
}

struct OmpState<'d, 'a, T> {
    dict: &'d Dictionary<'a, T>,
    h: &'d [T],
    rank_tol: T,
    proxy_h: Vec<T>,
    selected: Vec<usize>,
    /// Selected columns, raw.
    columns: Vec<Vec<T>>,
    /// Orthonormal basis of the independent selected columns.
    basis: Vec<Vec<T>>,
    /// For each basis vector, the position in `selected` it came from.
    basis_owner: Vec<usize>,
    /// Upper-triangular factor, `r_cols[t][i] = qᵢᵀ a_{owner(t)}` for `i ≤ t`.
    r_cols: Vec<Vec<T>>,
    /// `qᵢᵀ h`.
    qt_h: Vec<T>,
    coeffs: Vec<(usize, T)>,
    residual: Vec<T>,
    residual_norm: T,
    max_col_norm: T,
}

impl<'d, 'a, T: Real> OmpState<'d, 'a, T> {
    fn new(dict: &'d Dictionary<'a, T>, h: &'d [T], rank_tol: T) -> Self {
        Self {
            dict,
            h,
            rank_tol,
            proxy_h: dict.proxy(h),
            selected: Vec::new(),
            columns: Vec::new(),
            basis: Vec::new(),
            basis_owner: Vec::new(),
            r_cols: Vec::new(),
            qt_h: Vec::new(),
            coeffs: Vec::new(),
            residual: h.to_vec(),
            residual_norm: norm(h),
            max_col_norm: T::zero(),
        }
    }

    fn iterations(&self) -> usize {
        self.selected.len()
    }

    fn best_column(&self) -> Option<usize> {
        let corr = self
            .dict
            .residual_correlations(&self.proxy_h, &self.residual, &self.coeffs);
        let mut best: Option<(usize, T)> = None;
        for (j, &c) in corr.iter().enumerate() {
            let n = self.dict.norm(j);
            if n == T::zero() {
                continue;
            }
            let score = c.abs() / n;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    fn add_column(&mut self, j: usize) {
        let col = self.dict.column(j);
        let col_norm = self.dict.norm(j);
        if col_norm > self.max_col_norm {
            self.max_col_norm = col_norm;
        }
        let mut v = col.clone();
        let mut proj = vec![T::zero(); self.basis.len()];
        for _pass in 0..2 {
            for (q, p) in self.basis.iter().zip(proj.iter_mut()) {
                let c = dot(q, &v);
                *p += c;
                for (vi, &qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let orth = norm(&v);
        self.selected.push(j);
        self.columns.push(col);
        if orth > self.rank_tol * self.max_col_norm && orth > T::zero() {
            for vi in v.iter_mut() {
                *vi /= orth;
            }
            self.qt_h.push(dot(&v, self.h));
            self.basis.push(v);
            proj.push(orth);
            self.r_cols.push(proj);
            self.basis_owner.push(self.selected.len() - 1);
        }
        self.refit();
    }

    fn refit(&mut self) {
        let p = self.basis.len();
        let mut c = self.qt_h.clone();
        for i in (0..p).rev() {
            let s = ((i + 1)..p).fold(c[i], |s, t| s - self.r_cols[t][i] * c[t]);
            c[i] = s / self.r_cols[i][i];
        }
        self.coeffs = self
            .basis_owner
            .iter()
            .zip(c)
            .map(|(&pos, v)| (self.selected[pos], v))
            .collect();
        let mut r = self.h.to_vec();
        for (&pos, &(_, v)) in self.basis_owner.iter().zip(&self.coeffs) {
            for (ri, &a) in r.iter_mut().zip(&self.columns[pos]) {
                *ri -= a * v;
            }
        }
        self.residual_norm = norm(&r);
        self.residual = r;
    }

    fn result(&self) -> ReconstructionResult<T> {
        ReconstructionResult {
            estimate: SparseLabelVector::from_pairs(self.dict.cols(), self.coeffs.clone()),
            selected_support: self.selected.clone(),
            final_residual_norm: self.residual_norm,
            iterations_used: self.selected.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::sensing::MatrixKind;

    #[test]
    fn identity_example() {
        let a = CompressionMatrix::<f64>::generate(MatrixKind::Identity, 3, 3, 0).unwrap();
        let r = omp(&a, &[3.0, 1.0, 2.0], &ReconstructionConfig::omp(1)).unwrap();
        assert_eq!(r.selected_support, vec![0, 2]);
        assert_eq!(r.estimate.to_dense(), vec![3.0, 0.0, 2.0]);
        assert_eq!(r.final_residual_norm, 1.0);
        assert_eq!(r.iterations_used, 2);
    }

    #[test]
    fn zero_measurement_takes_no_steps() {
        let a = CompressionMatrix::<f64>::generate(MatrixKind::Gaussian, 4, 8, 1).unwrap();
        let r = omp(&a, &[0.0; 4], &ReconstructionConfig::omp(2)).unwrap();
        assert_eq!(r.iterations_used, 0);
        assert_eq!(r.estimate.nnz(), 0);
    }

    #[test]
    fn zero_columns_are_skipped() {
        let a = CompressionMatrix::from_dense(
            DenseMatrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap(),
        );
        let r = omp(&a, &[5.0, 1.0], &ReconstructionConfig::omp(2)).unwrap();
        assert!(!r.selected_support.contains(&0));
        assert!(r.final_residual_norm < 1e-12);

        let all_zero = CompressionMatrix::from_dense(DenseMatrix::<f64>::zeros(2, 3));
        let r = omp(&all_zero, &[3.0, 4.0], &ReconstructionConfig::omp(2)).unwrap();
        assert_eq!(r.estimate.nnz(), 0);
        assert_eq!(r.final_residual_norm, 5.0);
    }

    #[test]
    fn ties_go_to_smaller_index() {
        let a = CompressionMatrix::<f64>::generate(MatrixKind::Identity, 4, 4, 0).unwrap();
        let r = omp(&a, &[1.0, 2.0, -2.0, 1.0], &ReconstructionConfig::omp(1)).unwrap();
        assert_eq!(r.selected_support, vec![1, 2]);
    }

    #[test]
    fn duplicate_column_does_not_break_refit() {
        let a = CompressionMatrix::from_dense(
            DenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap(),
        );
        let r = omp(&a, &[2.0, 1.0], &ReconstructionConfig::omp(2)).unwrap();
        assert!(r.final_residual_norm < 1e-12);
        assert!(r.estimate.nnz() <= 2);
    }

    #[test]
    fn gram_and_direct_paths_agree() {
        let a = CompressionMatrix::<f64>::generate(MatrixKind::Gaussian, 10, 40, 5).unwrap();
        let h: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin()).collect();
        let levels = [1, 2, 3];
        let cfg = ReconstructionConfig::omp(3);
        let direct = omp_path(&Dictionary::new(&a), &h, &levels, &cfg).unwrap();
        let gram = omp_path(&Dictionary::with_gram(&a), &h, &levels, &cfg).unwrap();
        for (x, y) in direct.iter().zip(&gram) {
            assert_eq!(x.selected_support, y.selected_support);
            assert!((x.final_residual_norm - y.final_residual_norm).abs() < 1e-12);
        }
    }

    #[test]
    fn path_matches_separate_runs() {
        let a = CompressionMatrix::<f64>::generate(MatrixKind::Bernoulli, 12, 32, 8).unwrap();
        let h: Vec<f64> = (0..12).map(|i| ((i * i) as f64 * 0.11).cos()).collect();
        let dict = Dictionary::new(&a);
        let path = omp_path(&dict, &h, &[1, 2, 3, 4], &ReconstructionConfig::omp(1)).unwrap();
        for (k, from_path) in (1..=4).zip(&path) {
            let single = omp(&a, &h, &ReconstructionConfig::omp(k)).unwrap();
            assert_eq!(&single, from_path);
        }
    }
}
