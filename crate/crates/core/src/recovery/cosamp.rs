//! CoSaMP with a `2k` prune width, so the output has at most `2k` nonzeros.
//!
//! Each iteration: proxy `Aᵀr`; merge the `2k` largest-magnitude proxy
//! indices with the current support; least squares on the merged set; keep
//! the `2k` largest coefficients; recompute the residual. Iteration stops
//! when the residual fails to decrease by more than `residual_tolerance`, or
//! after `max_iterations`. An iterate that increases the residual is
//! discarded.

use crate::error::{param, Result};
use crate::linalg::{least_squares, norm};
use crate::scalar::Real;
use crate::sparse::{top_k_by_magnitude, SparseLabelVector};

use super::{Algorithm, Dictionary, ReconstructionConfig, ReconstructionResult};

pub fn cosamp<T: Real>(
    dict: &Dictionary<'_, T>,
    h: &[T],
    cfg: &ReconstructionConfig<T>,
) -> Result<ReconstructionResult<T>> {
    cfg.validate()?;
    if cfg.algorithm != Algorithm::Cosamp {
        return Err(param("cosamp called with a non-CoSaMP configuration"));
    }
    dict.check_measurement(h)?;
    let d = dict.cols();
    let width = 2 * cfg.k;
    let proxy_h = dict.proxy(h);

    let mut estimate: Vec<(usize, T)> = Vec::new();
    let mut candidates: Vec<usize> = Vec::new();
    let mut residual = h.to_vec();
    let mut residual_norm = norm(h);
    let mut iterations = 0;

    while iterations < cfg.effective_max_iterations() {
        if residual_norm <= cfg.residual_tolerance {
            break;
        }
        let proxy = dict.residual_correlations(&proxy_h, &residual, &estimate);
        let mut merged = top_k_by_magnitude(&proxy, width, |j| dict.norm(j) > T::zero());
        merged.extend(estimate.iter().map(|&(j, _)| j));
        merged.sort_unstable();
        merged.dedup();
        if merged.is_empty() {
            break;
        }
        iterations += 1;

        let (fit, _) = least_squares(&dict.columns(&merged), h, cfg.ls_rank_tolerance);
        let keep = top_k_by_magnitude(&fit, width, |i| fit[i] != T::zero());
        let mut next: Vec<(usize, T)> = keep.iter().map(|&i| (merged[i], fit[i])).collect();
        next.sort_by_key(|&(j, _)| j);
        let next_residual = dict.residual(h, &next);
        let next_norm = norm(&next_residual);

        if !(next_norm < residual_norm) {
            break;
        }
        let improvement = residual_norm - next_norm;
        estimate = next;
        candidates = merged;
        residual = next_residual;
        residual_norm = next_norm;
        if improvement <= cfg.residual_tolerance {
            break;
        }
    }

    Ok(ReconstructionResult {
        estimate: SparseLabelVector::from_pairs(d, estimate),
        selected_support: candidates,
        final_residual_norm: residual_norm,
        iterations_used: iterations,
    })
}
