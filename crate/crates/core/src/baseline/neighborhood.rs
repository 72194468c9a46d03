use serde::{Deserialize, Serialize};

use super::{PearsonCache, RatingMatrixView};
use crate::store::Side;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeighborhoodParams {
    pub n_neighbors: usize,
    pub min_overlap: usize,
    /// Ignore neighbours with non-positive weight.
    pub positive_only: bool,
}

impl Default for NeighborhoodParams {
    fn default() -> Self {
        NeighborhoodParams {
            n_neighbors: 50,
            min_overlap: 3,
            positive_only: false,
        }
    }
}

/// A rating estimate and whether it came from a fallback rule rather than
/// the model proper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub fallback: bool,
}

impl Prediction {
    pub fn model(value: f64) -> Self {
        Prediction {
            value,
            fallback: false,
        }
    }

    pub fn fallback(value: f64) -> Self {
        Prediction {
            value,
            fallback: true,
        }
    }
}

/// `Σ w·d / Σ |w|` over `(w, d)` terms; `None` when the weights sum to zero
/// in absolute value.
pub fn weighted_deviation(terms: &[(f64, f64)]) -> Option<f64> {
    let norm: f64 = terms.iter().map(|t| t.0.abs()).sum();
    if norm == 0.0 {
        return None;
    }
    Some(terms.iter().map(|t| t.0 * t.1).sum::<f64>() / norm)
}

/// Keeps the `n` terms with the largest |w|; ties go to the lower position.
fn strongest(mut cands: Vec<(usize, f64, f64)>, n: usize) -> Vec<(f64, f64)> {
    cands.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    cands.truncate(n);
    cands.into_iter().map(|(_, w, d)| (w, d)).collect()
}

fn check(view: &RatingMatrixView, cache: &PearsonCache, side: Side, a: usize, j: usize) -> Result<()> {
    if cache.side() != side {
        return Err(Error::Precondition(format!(
            "expected a {side} weight cache, got {}",
            cache.side()
        )));
    }
    if a >= view.n_users() {
        return Err(Error::NotFound {
            kind: "user",
            id: format!("#{a}"),
        });
    }
    if j >= view.n_items() {
        return Err(Error::NotFound {
            kind: "item",
            id: format!("#{j}"),
        });
    }
    Ok(())
}

/// User-based estimate for user `a` on item `j` (positions in `view`).
pub fn predict_ubcf(
    view: &RatingMatrixView,
    cache: &PearsonCache,
    a: usize,
    j: usize,
    params: &NeighborhoodParams,
) -> Result<Prediction> {
    check(view, cache, Side::User, a, j)?;
    let cands = view
        .item_ratings(j)
        .iter()
        .filter(|&&(u, _)| u as usize != a)
        .filter_map(|&(u, r)| {
            let u = u as usize;
            let w = cache.weight(a, u)?;
            (!params.positive_only || w > 0.0).then(|| (u, w, r - view.user_mean(u)))
        })
        .collect();
    let base = view.user_mean(a);
    Ok(match weighted_deviation(&strongest(cands, params.n_neighbors)) {
        Some(dev) => Prediction::model(view.scale().clamp(base + dev)),
        None => Prediction::fallback(view.scale().clamp(base)),
    })
}

/// Item-based estimate: neighbours are items `a` rated, weighted by their
/// correlation with `j`, deviations taken from item means.
pub fn predict_ibcf(
    view: &RatingMatrixView,
    cache: &PearsonCache,
    a: usize,
    j: usize,
    params: &NeighborhoodParams,
) -> Result<Prediction> {
    check(view, cache, Side::Item, a, j)?;
    let cands = view
        .user_ratings(a)
        .iter()
        .filter(|&&(i, _)| i as usize != j)
        .filter_map(|&(i, r)| {
            let i = i as usize;
            let w = cache.weight(j, i)?;
            (!params.positive_only || w > 0.0).then(|| (i, w, r - view.item_mean(i)))
        })
        .collect();
    Ok(match weighted_deviation(&strongest(cands, params.n_neighbors)) {
        Some(dev) => Prediction::model(view.scale().clamp(view.item_mean(j) + dev)),
        None => Prediction::fallback(view.scale().clamp(view.user_mean(a))),
    })
}
