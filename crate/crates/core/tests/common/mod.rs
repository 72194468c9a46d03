#![allow(dead_code)]

use noniid_core::store::{Attribute, AttributeTable, Rating, RatingScale, RatingTable, Value};
use proptest::prelude::*;

pub type Codes = Vec<Vec<Option<u8>>>;

/// Rows of small categorical codes: 1..=max_rows objects, 1..=3 attributes,
/// 1..=3 values per attribute, some cells missing.
pub fn arb_codes(max_rows: usize) -> impl Strategy<Value = Codes> {
    (1..=max_rows, prop::collection::vec(1u8..=3, 1..=3)).prop_flat_map(|(n, cards)| {
        let row: Vec<_> = cards
            .iter()
            .map(|&c| prop::option::weighted(0.85, 0..c))
            .collect();
        prop::collection::vec(row, n)
    })
}

pub fn table_from_codes(prefix: &str, codes: &Codes) -> AttributeTable {
    let width = codes.first().map_or(0, Vec::len);
    AttributeTable::new(
        (0..codes.len()).map(|i| format!("{prefix}{i}")).collect(),
        (0..width).map(|j| Attribute::categorical(format!("a{j}"))).collect(),
        codes
            .iter()
            .map(|row| row.iter().map(|c| c.map(|c| Value::cat(format!("v{c}")))).collect())
            .collect(),
    )
    .unwrap()
}

/// Sparse ratings over `users` x `items`: each pair is rated with the given
/// probability, values are whole stars on 1..=5.
pub fn arb_ratings(users: usize, items: usize, density: f64) -> impl Strategy<Value = Vec<Rating>> {
    prop::collection::vec(prop::option::weighted(density, 1u8..=5), users * items).prop_map(move |cells| {
        cells
            .iter()
            .enumerate()
            .filter_map(|(k, r)| r.map(|r| Rating::new(format!("u{}", k / items), format!("i{}", k % items), r as f64)))
            .collect()
    })
}

pub fn scale() -> RatingScale {
    RatingScale::new(1.0, 5.0).unwrap()
}

pub fn rating_table(ratings: Vec<Rating>) -> RatingTable {
    RatingTable::new(ratings, scale()).unwrap()
}
