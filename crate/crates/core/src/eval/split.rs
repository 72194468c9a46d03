use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::store::{compare_ids, Rating, RatingTable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stratification {
    None,
    PerUser,
}

/// `train_fraction` of the ratings form the training pool; the rest is the
/// test set. `validation_fraction` of the pool is then held out for model
/// selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
    pub stratification: Stratification,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            validation_fraction: 0.1,
            seed: 42,
            stratification: Stratification::PerUser,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !(self.validation_fraction >= 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation fraction must be in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Rating>,
    pub validation: Vec<Rating>,
    pub test: Vec<Rating>,
}

impl Split {
    /// Training plus validation ratings, for the final refit.
    pub fn train_and_validation(&self) -> Vec<Rating> {
        self.train.iter().chain(&self.validation).cloned().collect()
    }
}

fn portion(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).min(n)
}

/// Deterministic three-way split. Each part keeps the input order.
///
/// With per-user stratification every user's ratings are split separately
/// and a user with any ratings keeps at least one in training.
pub fn split_ratings(table: &RatingTable, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let entries = table.entries();
    if entries.is_empty() {
        return Err(Error::Empty("ratings"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // 0 = train, 1 = validation, 2 = test
    let mut part = vec![2u8; entries.len()];
    match spec.stratification {
        Stratification::None => {
            let mut order: Vec<usize> = (0..entries.len()).collect();
            order.shuffle(&mut rng);
            let pool = portion(order.len(), spec.train_fraction);
            let held = portion(pool, spec.validation_fraction);
            for (k, &i) in order[..pool].iter().enumerate() {
                part[i] = if k < pool - held { 0 } else { 1 };
            }
        }
        Stratification::PerUser => {
            let mut by_user: HashMap<&str, Vec<usize>> = HashMap::new();
            for (i, r) in entries.iter().enumerate() {
                by_user.entry(r.user.as_str()).or_default().push(i);
            }
            let mut users: Vec<&str> = by_user.keys().copied().collect();
            users.sort_by(|a, b| compare_ids(a, b));
            for user in users {
                let mut own = by_user.remove(user).expect("listed user");
                own.shuffle(&mut rng);
                let pool = portion(own.len(), spec.train_fraction).max(1);
                let held = portion(pool, spec.validation_fraction).min(pool - 1);
                for (k, &i) in own[..pool].iter().enumerate() {
                    part[i] = if k < pool - held { 0 } else { 1 };
                }
            }
        }
    }
    let pick = |p: u8| -> Vec<Rating> {
        entries
            .iter()
            .zip(&part)
            .filter(|&(_, &q)| q == p)
            .map(|(r, _)| r.clone())
            .collect()
    };
    Ok(Split {
        train: pick(0),
        validation: pick(1),
        test: pick(2),
    })
}
