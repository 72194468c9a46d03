use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{Prediction, RatingMatrixView};
use crate::similarity::CoupledSimilarity;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KModesConfig {
    pub clusters: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for KModesConfig {
    fn default() -> Self {
        KModesConfig {
            clusters: 20,
            seed: 42,
            max_iter: 50,
        }
    }
}

/// Items partitioned around categorical modes by coupled similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct KModesClustering {
    item_ids: Vec<String>,
    index: HashMap<String, usize>,
    attributes: Vec<String>,
    domains: Vec<Vec<String>>,
    modes: Vec<Vec<Option<u32>>>,
    assignment: Vec<usize>,
    objective_trace: Vec<f64>,
    converged: bool,
}

impl KModesClustering {
    pub fn clusters(&self) -> usize {
        self.modes.len()
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, item: &str) -> Option<usize> {
        self.index.get(item).map(|&i| self.assignment[i])
    }

    /// Mode of cluster `g` as attribute values.
    pub fn mode(&self, g: usize) -> Vec<Option<&str>> {
        self.modes[g]
            .iter()
            .enumerate()
            .map(|(j, c)| c.map(|c| self.domains[j][c as usize].as_str()))
            .collect()
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    /// Total similarity of items to their modes, once per assignment pass.
    pub fn objective_trace(&self) -> &[f64] {
        &self.objective_trace
    }

    pub fn iterations(&self) -> usize {
        self.objective_trace.len()
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Cluster of every item of `view`, by position.
    pub fn align(&self, view: &RatingMatrixView) -> Result<Vec<usize>> {
        view.item_ids()
            .iter()
            .map(|id| {
                self.cluster_of(id).ok_or_else(|| Error::NotFound {
                    kind: "item",
                    id: id.clone(),
                })
            })
            .collect()
    }
}

fn assign(sim: &CoupledSimilarity, modes: &[Vec<Option<u32>>], current: &[usize]) -> Vec<(usize, f64)> {
    let coded = sim.coded();
    (0..coded.len())
        .into_par_iter()
        .map(|i| {
            let row = coded.row(i);
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            for (g, mode) in modes.iter().enumerate() {
                let s = sim.row_sim(row, mode);
                if s > best.1 {
                    best = (g, s);
                }
            }
            // keep the current cluster when it ties the best score
            if let Some(&g) = current.get(i) {
                let s = sim.row_sim(row, &modes[g]);
                if s == best.1 {
                    best = (g, s);
                }
            }
            best
        })
        .collect()
}

/// Per attribute, the most frequent non-missing value among `members`
/// (ties to the smallest value); the old entry survives when all are
/// missing.
fn column_modes(sim: &CoupledSimilarity, members: &[usize], old: &[Option<u32>]) -> Vec<Option<u32>> {
    let coded = sim.coded();
    (0..old.len())
        .map(|j| {
            let mut counts = vec![0usize; coded.domain(j).len()];
            for &i in members {
                if let Some(c) = coded.row(i)[j] {
                    counts[c as usize] += 1;
                }
            }
            let (best, n) = counts
                .iter()
                .enumerate()
                .fold((0, 0), |acc, (c, &n)| if n > acc.1 { (c, n) } else { acc });
            if n == 0 {
                old[j]
            } else {
                Some(best as u32)
            }
        })
        .collect()
}

/// Clusters the objects of the table `sim` was fitted on.
///
/// Modes start as the rows of `clusters` distinct seeded items. Each pass
/// assigns every item to its most similar mode, then moves each mode to the
/// column-wise most frequent values of its members when that does not lower
/// the members' total similarity. An empty cluster takes the row of the item
/// least similar to its own mode. Stops when assignments repeat or after
/// `max_iter` passes.
pub fn kmodes_fit(sim: &CoupledSimilarity, config: &KModesConfig) -> Result<KModesClustering> {
    let coded = sim.coded();
    let n = coded.len();
    if config.clusters == 0 || config.clusters > n {
        return Err(Error::Config(format!(
            "cluster count must be in 1..={n}, got {}",
            config.clusters
        )));
    }
    if config.max_iter == 0 {
        return Err(Error::Config("max_iter must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seeds = rand::seq::index::sample(&mut rng, n, config.clusters).into_vec();
    seeds.sort_unstable();
    let mut modes: Vec<Vec<Option<u32>>> = seeds.iter().map(|&i| coded.row(i).to_vec()).collect();

    let mut assignment: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iter {
        let scored = assign(sim, &modes, &assignment);
        let next: Vec<usize> = scored.iter().map(|s| s.0).collect();
        trace.push(scored.iter().map(|s| s.1).sum::<f64>());
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;

        let mut members = vec![Vec::new(); modes.len()];
        for (i, &g) in assignment.iter().enumerate() {
            members[g].push(i);
        }
        for (g, list) in members.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let candidate = column_modes(sim, list, &modes[g]);
            let total = |mode: &[Option<u32>]| list.iter().map(|&i| sim.row_sim(coded.row(i), mode)).sum::<f64>();
            if candidate != modes[g] && total(&candidate) >= total(&modes[g]) {
                modes[g] = candidate;
            }
        }
        let mut taken = vec![false; n];
        for g in 0..modes.len() {
            if !members[g].is_empty() {
                continue;
            }
            let worst = (0..n)
                .filter(|&i| !taken[i])
                .map(|i| (i, sim.row_sim(coded.row(i), &modes[assignment[i]])))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            if let Some((i, _)) = worst {
                taken[i] = true;
                modes[g] = coded.row(i).to_vec();
            }
        }
    }
    if !converged {
        log::warn!("k-modes stopped after {} passes without settling", config.max_iter);
    }
    Ok(KModesClustering {
        item_ids: coded.object_ids().to_vec(),
        index: coded
            .object_ids()
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect(),
        attributes: coded.attributes().to_vec(),
        domains: (0..coded.attributes().len()).map(|j| coded.domain(j).to_vec()).collect(),
        modes,
        assignment,
        objective_trace: trace,
        converged,
    })
}

/// Mean of user `a`'s ratings on items sharing `j`'s cluster, falling back to
/// the user's mean. `clusters` comes from [`KModesClustering::align`].
pub(crate) fn predict_at(view: &RatingMatrixView, clusters: &[usize], a: usize, j: usize) -> Prediction {
    let g = clusters[j];
    let (sum, n) = view
        .user_ratings(a)
        .iter()
        .filter(|&&(i, _)| clusters[i as usize] == g)
        .fold((0.0, 0usize), |acc, &(_, r)| (acc.0 + r, acc.1 + 1));
    if n == 0 {
        Prediction::fallback(view.scale().clamp(view.user_mean(a)))
    } else {
        Prediction::model(view.scale().clamp(sum / n as f64))
    }
}

pub fn kmodes_predict(
    clustering: &KModesClustering,
    view: &RatingMatrixView,
    user: &str,
    item: &str,
) -> Result<Prediction> {
    let a = view.position(crate::store::Side::User, user)?;
    let j = view.position(crate::store::Side::Item, item)?;
    let clusters = clustering.align(view)?;
    Ok(predict_at(view, &clusters, a, j))
}
