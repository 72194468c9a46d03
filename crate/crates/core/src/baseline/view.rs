use std::collections::HashMap;

use crate::store::{Dataset, Rating, RatingScale, RatingTable, Side};
use crate::{Error, Result};

/// Indexed access to a set of (training) ratings: per-user and per-item
/// sorted rating lists, their means and the global mean.
///
/// The id universe can be wider than the ids that actually carry ratings;
/// unrated users and items get the global mean as their mean.
#[derive(Debug, Clone)]
pub struct RatingMatrixView {
    users: Vec<String>,
    items: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    by_user: Vec<Vec<(u32, f64)>>,
    by_item: Vec<Vec<(u32, f64)>>,
    user_means: Vec<f64>,
    item_means: Vec<f64>,
    global_mean: f64,
    scale: RatingScale,
    observations: Vec<(u32, u32, f64)>,
}

fn index_of(ids: &[String]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(Error::Duplicate(format!("id `{id}`")));
        }
    }
    Ok(index)
}

impl RatingMatrixView {
    pub fn new(
        ratings: &[Rating],
        scale: RatingScale,
        users: &[String],
        items: &[String],
    ) -> Result<Self> {
        let user_index = index_of(users)?;
        let item_index = index_of(items)?;
        let mut by_user = vec![Vec::new(); users.len()];
        let mut by_item = vec![Vec::new(); items.len()];
        let mut observations = Vec::with_capacity(ratings.len());
        for r in ratings {
            let u = *user_index.get(&r.user).ok_or_else(|| Error::NotFound {
                kind: "user",
                id: r.user.clone(),
            })?;
            let i = *item_index.get(&r.item).ok_or_else(|| Error::NotFound {
                kind: "item",
                id: r.item.clone(),
            })?;
            by_user[u].push((i as u32, r.rating));
            by_item[i].push((u as u32, r.rating));
            observations.push((u as u32, i as u32, r.rating));
        }
        for list in by_user.iter_mut().chain(by_item.iter_mut()) {
            list.sort_by_key(|&(k, _)| k);
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Duplicate("rating pair in view".into()));
            }
        }
        let global_mean = if ratings.is_empty() {
            (scale.min + scale.max) / 2.0
        } else {
            ratings.iter().map(|r| r.rating).sum::<f64>() / ratings.len() as f64
        };
        let mean = |list: &Vec<(u32, f64)>| {
            if list.is_empty() {
                global_mean
            } else {
                list.iter().map(|&(_, r)| r).sum::<f64>() / list.len() as f64
            }
        };
        Ok(RatingMatrixView {
            user_means: by_user.iter().map(mean).collect(),
            item_means: by_item.iter().map(mean).collect(),
            users: users.to_vec(),
            items: items.to_vec(),
            user_index,
            item_index,
            by_user,
            by_item,
            global_mean,
            scale,
            observations,
        })
    }

    /// View over a whole rating table, ids in first-appearance order.
    pub fn from_table(table: &RatingTable) -> Result<Self> {
        RatingMatrixView::new(
            table.entries(),
            table.scale(),
            &table.user_ids(),
            &table.item_ids(),
        )
    }

    /// View over `ratings` with the dataset's full user and item universe.
    pub fn for_dataset(ds: &Dataset, ratings: &[Rating]) -> Result<Self> {
        RatingMatrixView::new(
            ratings,
            ds.ratings.scale(),
            ds.users.object_ids(),
            ds.items.object_ids(),
        )
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn user_ids(&self) -> &[String] {
        &self.users
    }

    pub fn item_ids(&self) -> &[String] {
        &self.items
    }

    pub fn ids(&self, side: Side) -> &[String] {
        match side {
            Side::User => &self.users,
            Side::Item => &self.items,
        }
    }

    pub fn user_position(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn item_position(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    pub fn position(&self, side: Side, id: &str) -> Result<usize> {
        let found = match side {
            Side::User => self.user_position(id),
            Side::Item => self.item_position(id),
        };
        found.ok_or_else(|| Error::NotFound {
            kind: match side {
                Side::User => "user",
                Side::Item => "item",
            },
            id: id.to_owned(),
        })
    }

    /// (item, rating) pairs of user `u`, sorted by item.
    pub fn user_ratings(&self, u: usize) -> &[(u32, f64)] {
        &self.by_user[u]
    }

    /// (user, rating) pairs of item `i`, sorted by user.
    pub fn item_ratings(&self, i: usize) -> &[(u32, f64)] {
        &self.by_item[i]
    }

    pub fn ratings_of(&self, side: Side, a: usize) -> &[(u32, f64)] {
        match side {
            Side::User => &self.by_user[a],
            Side::Item => &self.by_item[a],
        }
    }

    pub fn user_mean(&self, u: usize) -> f64 {
        self.user_means[u]
    }

    pub fn item_mean(&self, i: usize) -> f64 {
        self.item_means[i]
    }

    pub fn mean_of(&self, side: Side, a: usize) -> f64 {
        match side {
            Side::User => self.user_means[a],
            Side::Item => self.item_means[a],
        }
    }

    pub fn rating(&self, u: usize, i: usize) -> Option<f64> {
        let list = &self.by_user[u];
        list.binary_search_by_key(&(i as u32), |&(k, _)| k)
            .ok()
            .map(|p| list[p].1)
    }

    /// (user, item, rating) triples in input order.
    pub fn observations(&self) -> &[(u32, u32, f64)] {
        &self.observations
    }
}
