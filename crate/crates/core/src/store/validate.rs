use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{compare_ids, AttributeTable, Dataset, Side};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingRate {
    pub side: Side,
    pub attribute: String,
    pub rate: f64,
}

/// Findings of [`validate_dataset`]. Missing rates are informational; the
/// other lists are violations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ratings: usize,
    pub users: usize,
    pub items: usize,
    pub dangling_users: Vec<String>,
    pub dangling_items: Vec<String>,
    pub scale_violations: Vec<(String, String, f64)>,
    pub duplicate_pairs: Vec<(String, String)>,
    pub missing_rates: Vec<MissingRate>,
}

impl ValidationReport {
    pub fn violations(&self) -> usize {
        self.dangling_users.len()
            + self.dangling_items.len()
            + self.scale_violations.len()
            + self.duplicate_pairs.len()
    }

    pub fn is_clean(&self) -> bool {
        self.violations() == 0
    }

    pub fn missing_rate(&self, side: Side, attribute: &str) -> Option<f64> {
        self.missing_rates
            .iter()
            .find(|m| m.side == side && m.attribute == attribute)
            .map(|m| m.rate)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ratings: {}", self.ratings)?;
        writeln!(f, "users: {}", self.users)?;
        writeln!(f, "items: {}", self.items)?;
        writeln!(f, "dangling user ids: {}", self.dangling_users.len())?;
        for id in &self.dangling_users {
            writeln!(f, "  user {id}")?;
        }
        writeln!(f, "dangling item ids: {}", self.dangling_items.len())?;
        for id in &self.dangling_items {
            writeln!(f, "  item {id}")?;
        }
        writeln!(f, "scale violations: {}", self.scale_violations.len())?;
        for (u, i, r) in &self.scale_violations {
            writeln!(f, "  ({u}, {i}) = {r}")?;
        }
        writeln!(f, "duplicate pairs: {}", self.duplicate_pairs.len())?;
        writeln!(f, "missing rates:")?;
        for m in &self.missing_rates {
            writeln!(f, "  {}.{}: {:.4}", m.side, m.attribute, m.rate)?;
        }
        Ok(())
    }
}

fn missing_rates(side: Side, t: &AttributeTable) -> impl Iterator<Item = MissingRate> + '_ {
    t.attributes().iter().enumerate().map(move |(j, a)| {
        let missing = t.rows().iter().filter(|r| r[j].is_none()).count();
        MissingRate {
            side,
            attribute: a.name.clone(),
            rate: if t.is_empty() {
                0.0
            } else {
                missing as f64 / t.len() as f64
            },
        }
    })
}

/// Cross-references the tables without modifying them.
pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let scale = ds.ratings.scale();
    let mut dangling_users = HashSet::new();
    let mut dangling_items = HashSet::new();
    let mut pairs = HashSet::new();
    let mut scale_violations = Vec::new();
    let mut duplicate_pairs = Vec::new();
    for r in ds.ratings.entries() {
        if ds.users.position(&r.user).is_none() {
            dangling_users.insert(r.user.clone());
        }
        if ds.items.position(&r.item).is_none() {
            dangling_items.insert(r.item.clone());
        }
        if !scale.contains(r.rating) {
            scale_violations.push((r.user.clone(), r.item.clone(), r.rating));
        }
        if !pairs.insert((r.user.as_str(), r.item.as_str())) {
            duplicate_pairs.push((r.user.clone(), r.item.clone()));
        }
    }
    let sorted = |set: HashSet<String>| {
        let mut v: Vec<String> = set.into_iter().collect();
        v.sort_by(|a, b| compare_ids(a, b));
        v
    };
    ValidationReport {
        ratings: ds.ratings.len(),
        users: ds.users.len(),
        items: ds.items.len(),
        dangling_users: sorted(dangling_users),
        dangling_items: sorted(dangling_items),
        scale_violations,
        duplicate_pairs,
        missing_rates: missing_rates(Side::User, &ds.users)
            .chain(missing_rates(Side::Item, &ds.items))
            .collect(),
    }
}
