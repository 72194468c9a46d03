use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which attribute table (or which dimension of the rating matrix) a
/// structure refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    User,
    Item,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::User => f.write_str("user"),
            Side::Item => f.write_str("item"),
        }
    }
}

/// Orders ids numerically when both parse as unsigned integers, otherwise
/// lexicographically. Used wherever ties are broken "by id".
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Config(format!("invalid rating scale ({min}, {max})")));
        }
        Ok(RatingScale { min, max })
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.min && r <= self.max
    }

    pub fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.min, self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub user: String,
    pub item: String,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

impl Rating {
    pub fn new(user: impl Into<String>, item: impl Into<String>, rating: f64) -> Self {
        Rating {
            user: user.into(),
            item: item.into(),
            rating,
            timestamp: None,
        }
    }
}

/// Table A: explicit ratings on a declared scale.
///
/// Construction guarantees a non-empty table, every rating inside the scale
/// and at most one entry per (user, item) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTable {
    entries: Vec<Rating>,
    scale: RatingScale,
}

impl RatingTable {
    pub fn new(entries: Vec<Rating>, scale: RatingScale) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("ratings"));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for (i, r) in entries.iter().enumerate() {
            if !scale.contains(r.rating) {
                return Err(Error::Range {
                    line: i + 1,
                    rating: r.rating,
                    min: scale.min,
                    max: scale.max,
                });
            }
            if !seen.insert((r.user.as_str(), r.item.as_str())) {
                return Err(Error::Duplicate(format!(
                    "rating for pair ({}, {}) at entry {}",
                    r.user,
                    r.item,
                    i + 1
                )));
            }
        }
        Ok(RatingTable { entries, scale })
    }

    pub fn entries(&self) -> &[Rating] {
        &self.entries
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn global_mean(&self) -> f64 {
        self.entries.iter().map(|r| r.rating).sum::<f64>() / self.entries.len() as f64
    }

    /// Distinct user ids in first-appearance order.
    pub fn user_ids(&self) -> Vec<String> {
        distinct(self.entries.iter().map(|r| r.user.as_str()))
    }

    pub fn item_ids(&self) -> Vec<String> {
        distinct(self.entries.iter().map(|r| r.item.as_str()))
    }
}

fn distinct<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    ids.filter(|id| seen.insert(*id))
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Categorical,
    Numeric,
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeKind::Categorical => f.write_str("categorical"),
            AttributeKind::Numeric => f.write_str("numeric"),
        }
    }
}

impl std::str::FromStr for AttributeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "categorical" => Ok(AttributeKind::Categorical),
            "numeric" => Ok(AttributeKind::Numeric),
            other => Err(Error::Schema(format!("unknown attribute kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn categorical(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Categorical,
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }
}

/// A present cell. Missing cells are `None` at the table level.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Categorical(String),
    Numeric(f64),
}

impl Value {
    pub fn cat(s: impl Into<String>) -> Self {
        Value::Categorical(s.into())
    }

    pub fn as_categorical(&self) -> Option<&str> {
        match self {
            Value::Categorical(s) => Some(s),
            Value::Numeric(_) => None,
        }
    }

    pub fn as_numeric(&self) -> Option<f64> {
        match self {
            Value::Numeric(x) => Some(*x),
            Value::Categorical(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Categorical(s) => f.write_str(s),
            Value::Numeric(x) => write!(f, "{x}"),
        }
    }
}

/// Table B or C: one row of attribute cells per object.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTable {
    object_ids: Vec<String>,
    attributes: Vec<Attribute>,
    rows: Vec<Vec<Option<Value>>>,
    index: HashMap<String, usize>,
}

impl AttributeTable {
    pub fn new(
        object_ids: Vec<String>,
        attributes: Vec<Attribute>,
        rows: Vec<Vec<Option<Value>>>,
    ) -> Result<Self> {
        if object_ids.len() != rows.len() {
            return Err(Error::Schema(format!(
                "{} object ids but {} rows",
                object_ids.len(),
                rows.len()
            )));
        }
        let mut names = HashSet::new();
        for a in &attributes {
            if !names.insert(a.name.as_str()) {
                return Err(Error::Duplicate(format!("attribute `{}`", a.name)));
            }
        }
        let mut index = HashMap::with_capacity(object_ids.len());
        for (i, (id, row)) in object_ids.iter().zip(&rows).enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Duplicate(format!("object id `{id}`")));
            }
            if row.len() != attributes.len() {
                return Err(Error::Schema(format!(
                    "object `{id}` has {} cells, expected {}",
                    row.len(),
                    attributes.len()
                )));
            }
            for (cell, attr) in row.iter().zip(&attributes) {
                let ok = match (cell, attr.kind) {
                    (None, _) => true,
                    (Some(Value::Categorical(_)), AttributeKind::Categorical) => true,
                    (Some(Value::Numeric(x)), AttributeKind::Numeric) => x.is_finite(),
                    _ => false,
                };
                if !ok {
                    return Err(Error::Schema(format!(
                        "object `{id}`: cell for `{}` does not match kind {}",
                        attr.name, attr.kind
                    )));
                }
            }
        }
        Ok(AttributeTable {
            object_ids,
            attributes,
            rows,
            index,
        })
    }

    /// A table with the given ids and attributes and every cell missing.
    pub fn all_missing(object_ids: Vec<String>, attributes: Vec<Attribute>) -> Result<Self> {
        let rows = vec![vec![None; attributes.len()]; object_ids.len()];
        AttributeTable::new(object_ids, attributes, rows)
    }

    pub fn len(&self) -> usize {
        self.object_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.object_ids.is_empty()
    }

    pub fn object_ids(&self) -> &[String] {
        &self.object_ids
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn rows(&self) -> &[Vec<Option<Value>>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Option<Value>] {
        &self.rows[i]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn attribute_position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn is_categorical(&self) -> bool {
        self.attributes
            .iter()
            .all(|a| a.kind == AttributeKind::Categorical)
    }

    /// Returns a copy with one all-missing row appended for each id in
    /// `extra` that the table does not already contain.
    pub fn with_missing_rows<'a>(&self, extra: impl IntoIterator<Item = &'a str>) -> Self {
        let mut out = self.clone();
        for id in extra {
            if !out.index.contains_key(id) {
                out.index.insert(id.to_owned(), out.object_ids.len());
                out.object_ids.push(id.to_owned());
                out.rows.push(vec![None; out.attributes.len()]);
            }
        }
        out
    }

    /// Replaces one attribute column; used by discretisation.
    pub(crate) fn replace_column(
        &self,
        position: usize,
        attribute: Attribute,
        column: Vec<Option<Value>>,
    ) -> Result<Self> {
        let mut attributes = self.attributes.clone();
        attributes[position] = attribute;
        let rows = self
            .rows
            .iter()
            .zip(column)
            .map(|(row, cell)| {
                let mut row = row.clone();
                row[position] = cell;
                row
            })
            .collect();
        AttributeTable::new(self.object_ids.clone(), attributes, rows)
    }
}

/// The complete problem: Tables A, B, C and the environment stub E.
///
/// Every user and item referenced by a rating has a row in the matching
/// attribute table once the dataset is assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ratings: RatingTable,
    pub users: AttributeTable,
    pub items: AttributeTable,
    pub environment: BTreeMap<String, String>,
}

impl Dataset {
    /// Cross-references ratings against the attribute tables. Dangling ids
    /// get synthesised all-missing rows, or fail in strict mode.
    pub fn assemble(
        ratings: RatingTable,
        users: AttributeTable,
        items: AttributeTable,
        environment: BTreeMap<String, String>,
        strict: bool,
    ) -> Result<Self> {
        let dangling_users: Vec<String> = ratings
            .user_ids()
            .into_iter()
            .filter(|u| users.position(u).is_none())
            .collect();
        let dangling_items: Vec<String> = ratings
            .item_ids()
            .into_iter()
            .filter(|i| items.position(i).is_none())
            .collect();
        if strict && (!dangling_users.is_empty() || !dangling_items.is_empty()) {
            return Err(Error::Validation(format!(
                "{} dangling user id(s), {} dangling item id(s){}",
                dangling_users.len(),
                dangling_items.len(),
                dangling_users
                    .first()
                    .map(|u| format!(", e.g. user `{u}`"))
                    .or_else(|| dangling_items.first().map(|i| format!(", e.g. item `{i}`")))
                    .unwrap_or_default()
            )));
        }
        if !dangling_users.is_empty() || !dangling_items.is_empty() {
            log::warn!(
                "synthesising attribute rows for {} user(s) and {} item(s)",
                dangling_users.len(),
                dangling_items.len()
            );
        }
        let users = users.with_missing_rows(dangling_users.iter().map(String::as_str));
        let items = items.with_missing_rows(dangling_items.iter().map(String::as_str));
        Ok(Dataset {
            ratings,
            users,
            items,
            environment,
        })
    }

    /// Ratings only: both attribute tables are attribute-less.
    pub fn from_ratings(ratings: RatingTable) -> Self {
        let users = AttributeTable::all_missing(ratings.user_ids(), vec![])
            .expect("distinct ids from a rating table");
        let items = AttributeTable::all_missing(ratings.item_ids(), vec![])
            .expect("distinct ids from a rating table");
        Dataset {
            ratings,
            users,
            items,
            environment: BTreeMap::new(),
        }
    }

    pub fn table(&self, side: Side) -> &AttributeTable {
        match side {
            Side::User => &self.users,
            Side::Item => &self.items,
        }
    }
}
