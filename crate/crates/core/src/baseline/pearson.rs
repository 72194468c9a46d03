use std::fmt::Write as _;

use rayon::prelude::*;

use super::RatingMatrixView;
use crate::store::Side;
use crate::{Error, Result};

/// Pearson correlation between two users (or two items) over their co-rated
/// entries, each vector centred on its own mean over that subset. `None` when
/// fewer than `min_overlap` entries are shared or either side has zero
/// variance there.
pub fn pearson_weight(
    view: &RatingMatrixView,
    side: Side,
    a: usize,
    b: usize,
    min_overlap: usize,
) -> Result<Option<f64>> {
    if a == b {
        return Err(Error::Precondition("Pearson weight of an object with itself".into()));
    }
    let n = match side {
        Side::User => view.n_users(),
        Side::Item => view.n_items(),
    };
    for x in [a, b] {
        if x >= n {
            return Err(Error::NotFound {
                kind: "object",
                id: format!("#{x}"),
            });
        }
    }
    Ok(pearson(view.ratings_of(side, a), view.ratings_of(side, b), min_overlap).map(|(w, _)| w))
}

/// Returns (weight, overlap).
fn pearson(xs: &[(u32, f64)], ys: &[(u32, f64)], min_overlap: usize) -> Option<(f64, usize)> {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < xs.len() && j < ys.len() {
        match xs[i].0.cmp(&ys[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                pairs.push((xs[i].1, ys[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    let n = pairs.len();
    if n < min_overlap.max(1) {
        return None;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0), n))
}

/// Symmetric sparse store of Pearson weights between all users or all items.
#[derive(Debug, Clone, PartialEq)]
pub struct PearsonCache {
    side: Side,
    min_overlap: usize,
    // per object: (neighbour, weight, overlap) sorted by neighbour
    rows: Vec<Vec<(u32, f64, u32)>>,
}

impl PearsonCache {
    pub fn build(view: &RatingMatrixView, side: Side, min_overlap: usize) -> Self {
        let n = match side {
            Side::User => view.n_users(),
            Side::Item => view.n_items(),
        };
        let upper: Vec<Vec<(u32, f64, u32)>> = (0..n)
            .into_par_iter()
            .map(|a| {
                let xs = view.ratings_of(side, a);
                if xs.len() < min_overlap.max(1) {
                    return Vec::new();
                }
                (a + 1..n)
                    .filter_map(|b| {
                        pearson(xs, view.ratings_of(side, b), min_overlap)
                            .map(|(w, o)| (b as u32, w, o as u32))
                    })
                    .collect()
            })
            .collect();
        Self::from_upper(side, min_overlap, n, upper)
    }

    fn from_upper(
        side: Side,
        min_overlap: usize,
        n: usize,
        upper: Vec<Vec<(u32, f64, u32)>>,
    ) -> Self {
        let mut rows: Vec<Vec<(u32, f64, u32)>> = vec![Vec::new(); n];
        for (a, list) in upper.iter().enumerate() {
            for &(b, w, o) in list {
                rows[b as usize].push((a as u32, w, o));
            }
        }
        for (a, list) in upper.into_iter().enumerate() {
            rows[a].extend(list);
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
        }
        PearsonCache {
            side,
            min_overlap,
            rows,
        }
    }

    /// A cache holding arbitrary symmetric weights, given as `(a, b, w)`
    /// with `a != b`. Weights are not range-checked.
    pub fn from_weights(side: Side, n: usize, weights: &[(usize, usize, f64)]) -> Result<Self> {
        let mut upper = vec![Vec::new(); n];
        for &(a, b, w) in weights {
            if a == b || a >= n || b >= n {
                return Err(Error::Precondition(format!("bad weight pair ({a}, {b})")));
            }
            let (lo, hi) = (a.min(b), a.max(b));
            upper[lo].push((hi as u32, w, 0));
        }
        for list in &upper {
            let mut keys: Vec<u32> = list.iter().map(|e| e.0).collect();
            keys.sort_unstable();
            if keys.windows(2).any(|k| k[0] == k[1]) {
                return Err(Error::Duplicate("weight pair".into()));
            }
        }
        Ok(Self::from_upper(side, 0, n, upper))
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn min_overlap(&self) -> usize {
        self.min_overlap
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        let row = &self.rows[a];
        row.binary_search_by_key(&(b as u32), |e| e.0)
            .ok()
            .map(|p| row[p].1)
    }

    pub fn overlap(&self, a: usize, b: usize) -> Option<usize> {
        let row = &self.rows[a];
        row.binary_search_by_key(&(b as u32), |e| e.0)
            .ok()
            .map(|p| row[p].2 as usize)
    }

    pub fn neighbours(&self, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows[a].iter().map(|e| (e.0 as usize, e.1))
    }

    pub fn pair_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sparse triplets `a <TAB> b <TAB> weight <TAB> overlap`, one per
    /// unordered pair, preceded by a header.
    pub fn to_triplets(&self, ids: &[String]) -> String {
        let mut s = format!("# side={} min_overlap={}\n", self.side, self.min_overlap);
        for (a, row) in self.rows.iter().enumerate() {
            for &(b, w, o) in row.iter().filter(|e| e.0 as usize > a) {
                writeln!(s, "{}\t{}\t{}\t{}", ids[a], ids[b as usize], w, o).unwrap();
            }
        }
        s
    }
}
