//! The four-table view: ratings (A), user attributes (B), item attributes (C),
//! plus a free-form environment stub. Table D is derived later from A, B and C
//! (see [`crate::coupled::cells`]).

mod canonical;
mod csv;
mod discretize;
mod movielens;
mod table;
mod validate;

pub use self::canonical::{read_canonical, write_canonical, CANONICAL_FORMAT};
pub use self::csv::{parse_generic_csv, parse_generic_ratings_csv, parse_schema};
pub use self::discretize::{discretize, Discretization, DiscretizationSpec, Strategy};
pub use self::movielens::{
    items_from_str, load_movielens_100k, parse_movielens_items, parse_movielens_items_with,
    parse_movielens_ratings, parse_movielens_users, ratings_from_str, users_from_str,
    ItemAttributeMode, GENRES,
};
pub use self::table::{
    compare_ids, Attribute, AttributeKind, AttributeTable, Dataset, Rating, RatingScale,
    RatingTable, Side, Value,
};
pub use self::validate::{validate_dataset, MissingRate, ValidationReport};

use std::path::Path;

use crate::{Error, Result};

/// Reads a text file, accepting UTF-8 or falling back to Latin-1 (the
/// MovieLens item file uses the latter).
pub(crate) fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => e.into_bytes().iter().map(|&b| b as char).collect(),
    })
}
