//! MovieLens 100K readers: tab-separated `u.data`, pipe-separated `u.user`
//! and `u.item` (five leading fields plus 19 genre flags).

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use super::{read_text, Attribute, AttributeTable, Dataset, Rating, RatingScale, RatingTable, Value};
use crate::{Error, Result};

/// Genre flag order of `u.item`.
pub const GENRES: [&str; 19] = [
    "unknown",
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

/// How item attributes are derived from `u.item`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ItemAttributeMode {
    /// release_decade, genre_primary, genre_count.
    #[default]
    Derived,
    /// release_decade plus one 0/1 attribute per genre flag.
    RawFlags,
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn parse_movielens_ratings(path: impl AsRef<Path>, scale: RatingScale) -> Result<RatingTable> {
    ratings_from_str(&read_text(path.as_ref())?, scale)
}

pub fn ratings_from_str(text: &str, scale: RatingScale) -> Result<RatingTable> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (line, l) in lines(text) {
        let fields: Vec<&str> = l.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let rating: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad rating `{}`", fields[2])))?;
        let timestamp: i64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad timestamp `{}`", fields[3])))?;
        if !scale.contains(rating) {
            return Err(Error::Range {
                line,
                rating,
                min: scale.min,
                max: scale.max,
            });
        }
        let (user, item) = (fields[0].trim(), fields[1].trim());
        if user.is_empty() || item.is_empty() {
            return Err(Error::parse(line, "empty id"));
        }
        if !seen.insert((user.to_owned(), item.to_owned())) {
            return Err(Error::Duplicate(format!(
                "rating for pair ({user}, {item}) at line {line}"
            )));
        }
        entries.push(Rating {
            user: user.to_owned(),
            item: item.to_owned(),
            rating,
            timestamp: Some(timestamp),
        });
    }
    RatingTable::new(entries, scale)
}

pub fn parse_movielens_users(path: impl AsRef<Path>) -> Result<AttributeTable> {
    users_from_str(&read_text(path.as_ref())?)
}

pub fn users_from_str(text: &str) -> Result<AttributeTable> {
    let attributes = vec![
        Attribute::numeric("age"),
        Attribute::categorical("gender"),
        Attribute::categorical("occupation"),
        Attribute::categorical("zip_prefix"),
    ];
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (line, l) in lines(text) {
        let f: Vec<&str> = l.split('|').collect();
        if f.len() != 5 {
            return Err(Error::parse(
                line,
                format!("expected 5 pipe-separated fields, found {}", f.len()),
            ));
        }
        let age: i64 = f[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("non-integer age `{}`", f[1])))?;
        let cat = |s: &str| {
            let s = s.trim();
            (!s.is_empty()).then(|| Value::cat(s))
        };
        let zip_prefix = f[4].trim().chars().next().map(|c| Value::cat(c.to_string()));
        ids.push(f[0].trim().to_owned());
        rows.push(vec![
            Some(Value::Numeric(age as f64)),
            cat(f[2]),
            cat(f[3]),
            zip_prefix,
        ]);
    }
    AttributeTable::new(ids, attributes, rows)
}

pub fn parse_movielens_items(path: impl AsRef<Path>) -> Result<AttributeTable> {
    parse_movielens_items_with(path, ItemAttributeMode::Derived)
}

pub fn parse_movielens_items_with(
    path: impl AsRef<Path>,
    mode: ItemAttributeMode,
) -> Result<AttributeTable> {
    items_from_str(&read_text(path.as_ref())?, mode)
}

/// `01-Jan-1995` -> `1990s`; anything without a numeric year is `None`.
fn release_decade(date: &str) -> Option<String> {
    let year: i32 = date.trim().rsplit('-').next()?.parse().ok()?;
    if date.trim().split('-').count() != 3 {
        return None;
    }
    Some(format!("{}s", year.div_euclid(10) * 10))
}

pub fn items_from_str(text: &str, mode: ItemAttributeMode) -> Result<AttributeTable> {
    let mut attributes = vec![Attribute::categorical("release_decade")];
    match mode {
        ItemAttributeMode::Derived => {
            attributes.push(Attribute::categorical("genre_primary"));
            attributes.push(Attribute::categorical("genre_count"));
        }
        ItemAttributeMode::RawFlags => {
            attributes.extend(GENRES.iter().map(|g| Attribute::categorical(format!("genre:{g}"))));
        }
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (line, l) in lines(text) {
        let f: Vec<&str> = l.split('|').collect();
        if f.len() < 5 || f.len() - 5 != GENRES.len() {
            return Err(Error::parse(
                line,
                format!(
                    "expected {} genre flags, found {}",
                    GENRES.len(),
                    f.len().saturating_sub(5)
                ),
            ));
        }
        let flags = f[5..]
            .iter()
            .map(|s| match s.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::parse(line, format!("bad genre flag `{other}`"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        let mut row = vec![release_decade(f[2]).map(Value::Categorical)];
        match mode {
            ItemAttributeMode::Derived => {
                let primary = flags
                    .iter()
                    .position(|&b| b)
                    .map_or("unknown", |g| GENRES[g]);
                let count = match flags.iter().filter(|&&b| b).count() {
                    0 => "unknown",
                    1 => "1",
                    2 => "2",
                    _ => "3+",
                };
                row.push(Some(Value::cat(primary)));
                row.push(Some(Value::cat(count)));
            }
            ItemAttributeMode::RawFlags => {
                row.extend(
                    flags
                        .iter()
                        .map(|&b| Some(Value::cat(if b { "1" } else { "0" }))),
                );
            }
        }
        ids.push(f[0].trim().to_owned());
        rows.push(row);
    }
    AttributeTable::new(ids, attributes, rows)
}

/// Loads `u.data`, `u.user` and `u.item` from a MovieLens 100K directory on
/// the 1..5 scale.
pub fn load_movielens_100k(dir: impl AsRef<Path>, strict: bool) -> Result<Dataset> {
    let dir = dir.as_ref();
    let scale = RatingScale::new(1.0, 5.0)?;
    let ratings = parse_movielens_ratings(dir.join("u.data"), scale)?;
    let users = parse_movielens_users(dir.join("u.user"))?;
    let items = parse_movielens_items(dir.join("u.item"))?;
    let mut env = BTreeMap::new();
    env.insert("source".to_owned(), "movielens100k".to_owned());
    env.insert(
        "item_attributes".to_owned(),
        "release_decade,genre_primary,genre_count".to_owned(),
    );
    env.insert(
        "user_attributes".to_owned(),
        "age,gender,occupation,zip_prefix".to_owned(),
    );
    Dataset::assemble(ratings, users, items, env, strict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scale() -> RatingScale {
        RatingScale::new(1.0, 5.0).unwrap()
    }

    fn cell<'a>(t: &'a AttributeTable, id: &str, attr: &str) -> Option<&'a Value> {
        t.row(t.position(id).unwrap())[t.attribute_position(attr).unwrap()].as_ref()
    }

    #[test]
    fn rating_line_maps_fields() {
        let t = ratings_from_str("196\t242\t3\t881250949\n", scale()).unwrap();
        assert_eq!(
            t.entries()[0],
            Rating {
                user: "196".into(),
                item: "242".into(),
                rating: 3.0,
                timestamp: Some(881250949)
            }
        );
    }

    #[test]
    fn rating_errors() {
        assert!(matches!(ratings_from_str("", scale()), Err(Error::Empty("ratings"))));
        assert!(matches!(
            ratings_from_str("1\t1\t9\t0\n", scale()),
            Err(Error::Range { line: 1, .. })
        ));
        assert!(matches!(
            ratings_from_str("1\t1\t3\t0\n1\t2\tx\t0\n", scale()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ratings_from_str("1\t1\t3\t0\n1\t1\t4\t5\n", scale()),
            Err(Error::Duplicate(_))
        ));
    }

    #[test]
    fn user_lines() {
        let t = users_from_str("1|24|M|technician|85711\n2|53|F|other|94043\n").unwrap();
        assert_eq!(cell(&t, "1", "age"), Some(&Value::Numeric(24.0)));
        assert_eq!(cell(&t, "1", "gender"), Some(&Value::cat("M")));
        assert_eq!(cell(&t, "1", "occupation"), Some(&Value::cat("technician")));
        assert_eq!(cell(&t, "1", "zip_prefix"), Some(&Value::cat("8")));
        assert_eq!(cell(&t, "2", "age"), Some(&Value::Numeric(53.0)));
        assert_eq!(cell(&t, "2", "gender"), Some(&Value::cat("F")));
        assert_eq!(cell(&t, "2", "zip_prefix"), Some(&Value::cat("9")));
        assert!(matches!(
            users_from_str("3|abc|M|writer|0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(users_from_str("3|20|M|writer\n").is_err());
    }

    fn item_line(id: &str, date: &str, set: &[usize], n_flags: usize) -> String {
        let flags: Vec<&str> = (0..n_flags)
            .map(|g| if set.contains(&g) { "1" } else { "0" })
            .collect();
        format!("{id}|Title (1995)|{date}||http://x|{}\n", flags.join("|"))
    }

    #[test]
    fn item_derivations() {
        let text = item_line("1", "01-Jan-1995", &[3, 4, 5], 19)
            + &item_line("2", "", &[], 19)
            + &item_line("3", "12-Dec-2001", &[8], 19);
        let t = items_from_str(&text, ItemAttributeMode::Derived).unwrap();
        assert_eq!(cell(&t, "1", "release_decade"), Some(&Value::cat("1990s")));
        assert_eq!(cell(&t, "1", "genre_primary"), Some(&Value::cat("Animation")));
        assert_eq!(cell(&t, "1", "genre_count"), Some(&Value::cat("3+")));
        assert_eq!(cell(&t, "2", "release_decade"), None);
        assert_eq!(cell(&t, "2", "genre_primary"), Some(&Value::cat("unknown")));
        assert_eq!(cell(&t, "2", "genre_count"), Some(&Value::cat("unknown")));
        assert_eq!(cell(&t, "3", "release_decade"), Some(&Value::cat("2000s")));
        assert_eq!(cell(&t, "3", "genre_count"), Some(&Value::cat("1")));
    }

    #[test]
    fn item_flag_arity() {
        let text = item_line("1", "01-Jan-1995", &[1], 18);
        assert!(matches!(
            items_from_str(&text, ItemAttributeMode::Derived),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn raw_flag_mode() {
        let text = item_line("1", "01-Jan-1995", &[1, 2], 19);
        let t = items_from_str(&text, ItemAttributeMode::RawFlags).unwrap();
        assert_eq!(t.attributes().len(), 20);
        assert_eq!(cell(&t, "1", "genre:Action"), Some(&Value::cat("1")));
        assert_eq!(cell(&t, "1", "genre:Drama"), Some(&Value::cat("0")));
    }
}
