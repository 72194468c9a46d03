//! Generic comma-separated attribute and rating tables with a header row.

use std::collections::HashSet;
use std::path::Path;

use super::{Attribute, AttributeKind, AttributeTable, Rating, RatingScale, RatingTable, Value};
use crate::{Error, Result};

/// Parses `name:kind,name:kind,...` (kind defaults to categorical).
pub fn parse_schema(spec: &str) -> Result<Vec<Attribute>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|field| {
            let (name, kind) = match field.split_once(':') {
                Some((n, k)) => (n.trim(), k.trim().parse()?),
                None => (field, AttributeKind::Categorical),
            };
            Ok(Attribute {
                name: name.to_owned(),
                kind,
            })
        })
        .collect()
}

fn reader(path: &Path) -> Result<::csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(::csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file))
}

fn csv_error(e: ::csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(line, e.to_string())
}

/// The first column holds object ids; the remaining header must match
/// `schema` by name and order. Empty cells become missing.
pub fn parse_generic_csv(path: impl AsRef<Path>, schema: &[Attribute]) -> Result<AttributeTable> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(csv_error)?.clone();
    let names: Vec<&str> = header.iter().skip(1).collect();
    let expected: Vec<&str> = schema.iter().map(|a| a.name.as_str()).collect();
    if header.is_empty() || names != expected {
        return Err(Error::Schema(format!(
            "header {:?} does not match schema (id, {})",
            header.iter().collect::<Vec<_>>(),
            expected.join(", ")
        )));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = record[0].trim().to_owned();
        if id.is_empty() {
            return Err(Error::parse(line, "empty object id"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::Duplicate(format!("object id `{id}` at line {line}")));
        }
        let row = schema
            .iter()
            .zip(record.iter().skip(1))
            .map(|(attr, raw)| {
                let raw = raw.trim();
                if raw.is_empty() {
                    return Ok(None);
                }
                Ok(Some(match attr.kind {
                    AttributeKind::Categorical => Value::cat(raw),
                    AttributeKind::Numeric => Value::Numeric(raw.parse().map_err(|_| {
                        Error::parse(line, format!("non-numeric `{raw}` for `{}`", attr.name))
                    })?),
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        ids.push(id);
        rows.push(row);
    }
    AttributeTable::new(ids, schema.to_vec(), rows)
}

/// Header `user,item,rating` with an optional fourth `timestamp` column.
pub fn parse_generic_ratings_csv(path: impl AsRef<Path>, scale: RatingScale) -> Result<RatingTable> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    let with_ts = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["user", "item", "rating"] => false,
        ["user", "item", "rating", "timestamp"] => true,
        _ => {
            return Err(Error::Schema(format!(
                "rating header {header:?}, expected user,item,rating[,timestamp]"
            )))
        }
    };
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let rating: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad rating `{}`", &record[2])))?;
        if !scale.contains(rating) {
            return Err(Error::Range {
                line,
                rating,
                min: scale.min,
                max: scale.max,
            });
        }
        let timestamp = if with_ts && !record[3].trim().is_empty() {
            Some(
                record[3]
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad timestamp `{}`", &record[3])))?,
            )
        } else {
            None
        };
        let (user, item) = (record[0].trim().to_owned(), record[1].trim().to_owned());
        if !seen.insert((user.clone(), item.clone())) {
            return Err(Error::Duplicate(format!(
                "rating for pair ({user}, {item}) at line {line}"
            )));
        }
        entries.push(Rating {
            user,
            item,
            rating,
            timestamp,
        });
    }
    RatingTable::new(entries, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_row_table() {
        let f = write("id,city,sex\nu1,Sydney,F\nu2,Perth,M\nu3,,F\n");
        let schema = parse_schema("city,sex:categorical").unwrap();
        let t = parse_generic_csv(f.path(), &schema).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.attributes().len(), 2);
        assert!(t.is_categorical());
        assert_eq!(t.row(2)[0], None);
        assert_eq!(t.row(0)[0], Some(Value::cat("Sydney")));
    }

    #[test]
    fn duplicate_ids_and_header_mismatch() {
        let schema = parse_schema("city,sex").unwrap();
        let f = write("id,city,sex\nu1,a,F\nu1,b,M\n");
        assert!(matches!(parse_generic_csv(f.path(), &schema), Err(Error::Duplicate(_))));
        let f = write("id,town,sex\nu1,a,F\n");
        assert!(matches!(parse_generic_csv(f.path(), &schema), Err(Error::Schema(_))));
    }

    #[test]
    fn numeric_cells() {
        let schema = parse_schema("age:numeric").unwrap();
        let f = write("id,age\na,31\nb,\n");
        let t = parse_generic_csv(f.path(), &schema).unwrap();
        assert_eq!(t.row(0)[0], Some(Value::Numeric(31.0)));
        assert_eq!(t.row(1)[0], None);
        let f = write("id,age\na,old\n");
        assert!(matches!(parse_generic_csv(f.path(), &schema), Err(Error::Parse { .. })));
    }

    #[test]
    fn rating_csv() {
        let scale = RatingScale::new(1.0, 10.0).unwrap();
        let f = write("user,item,rating\nu1,b1,7\nu2,b1,10\n");
        let t = parse_generic_ratings_csv(f.path(), scale).unwrap();
        assert_eq!(t.len(), 2);
        let f = write("user,item,rating,timestamp\nu1,b1,7,12\n");
        assert_eq!(
            parse_generic_ratings_csv(f.path(), scale).unwrap().entries()[0].timestamp,
            Some(12)
        );
        let f = write("u,i,r\nu1,b1,7\n");
        assert!(parse_generic_ratings_csv(f.path(), scale).is_err());
    }
}
