//! Canonical on-disk dataset: a directory holding `schema.txt` (flat
//! `key = value` manifest), `ratings.tsv`, `users.tsv` and `items.tsv`.
//!
//! Cells are backslash-escaped; `\N` marks a missing cell.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{
    read_text, Attribute, AttributeKind, AttributeTable, Dataset, Rating, RatingScale,
    RatingTable, Value,
};
use crate::{Error, Result};

pub const CANONICAL_FORMAT: &str = "noniid-canonical";
const VERSION: &str = "1";
const MISSING: &str = "\\N";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str, line: usize) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(Error::parse(line, format!("bad escape `\\{other:?}`"))),
        }
    }
    Ok(out)
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains([',', ':', '\t', '\n', '\r', '=']) {
        return Err(Error::Schema(format!(
            "attribute name `{name}` cannot be stored in the manifest"
        )));
    }
    Ok(())
}

fn render_schema(ds: &Dataset) -> Result<String> {
    let attrs = |t: &AttributeTable| -> Result<String> {
        let mut parts = Vec::new();
        for a in t.attributes() {
            check_name(&a.name)?;
            parts.push(format!("{}:{}", a.name, a.kind));
        }
        Ok(parts.join(","))
    };
    let mut s = String::new();
    writeln!(s, "format = {CANONICAL_FORMAT}").unwrap();
    writeln!(s, "version = {VERSION}").unwrap();
    writeln!(s, "scale.min = {}", ds.ratings.scale().min).unwrap();
    writeln!(s, "scale.max = {}", ds.ratings.scale().max).unwrap();
    writeln!(s, "users.attributes = {}", attrs(&ds.users)?).unwrap();
    writeln!(s, "items.attributes = {}", attrs(&ds.items)?).unwrap();
    for (k, v) in &ds.environment {
        if k.contains(['=', '\n']) || v.contains('\n') || k.trim() != k || v.trim() != v {
            return Err(Error::Schema(format!("environment entry `{k}` is not storable")));
        }
        writeln!(s, "env.{k} = {v}").unwrap();
    }
    Ok(s)
}

fn render_ratings(t: &RatingTable) -> String {
    let mut s = String::from("user\titem\trating\ttimestamp\n");
    for r in t.entries() {
        let ts = r.timestamp.map(|t| t.to_string()).unwrap_or_default();
        writeln!(s, "{}\t{}\t{}\t{}", escape(&r.user), escape(&r.item), r.rating, ts).unwrap();
    }
    s
}

fn render_table(t: &AttributeTable) -> String {
    let mut s = String::from("id");
    for a in t.attributes() {
        s.push('\t');
        s.push_str(&escape(&a.name));
    }
    s.push('\n');
    for (id, row) in t.object_ids().iter().zip(t.rows()) {
        s.push_str(&escape(id));
        for cell in row {
            s.push('\t');
            match cell {
                None => s.push_str(MISSING),
                Some(Value::Categorical(v)) => s.push_str(&escape(v)),
                Some(Value::Numeric(x)) => write!(s, "{x}").unwrap(),
            }
        }
        s.push('\n');
    }
    s
}

fn rendered(ds: &Dataset) -> Result<[(&'static str, String); 4]> {
    Ok([
        ("schema.txt", render_schema(ds)?),
        ("ratings.tsv", render_ratings(&ds.ratings)),
        ("users.tsv", render_table(&ds.users)),
        ("items.tsv", render_table(&ds.items)),
    ])
}

pub fn write_canonical(ds: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in rendered(ds)? {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

impl Dataset {
    /// SHA-256 over the canonical serialisation, hex encoded.
    pub fn digest(&self) -> Result<String> {
        let mut hasher = Sha256::new();
        for (name, body) in rendered(self)? {
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
            hasher.update(body.as_bytes());
        }
        Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

fn parse_manifest(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, "manifest line lacks `=`"))?;
        out.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(out)
}

fn manifest_attrs(spec: &str) -> Result<Vec<Attribute>> {
    spec.split(',')
        .filter(|s| !s.is_empty())
        .map(|field| {
            let (name, kind) = field
                .split_once(':')
                .ok_or_else(|| Error::Schema(format!("attribute `{field}` lacks a kind")))?;
            Ok(Attribute {
                name: name.to_owned(),
                kind: kind.parse()?,
            })
        })
        .collect()
}

fn parse_table(text: &str, attributes: Vec<Attribute>) -> Result<AttributeTable> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).unwrap_or_default();
    let names: Vec<String> = header
        .split('\t')
        .skip(1)
        .map(|n| unescape(n, 1))
        .collect::<Result<_>>()?;
    if names.len() != attributes.len() || names.iter().zip(&attributes).any(|(n, a)| *n != a.name) {
        return Err(Error::Schema(format!("table header `{header}` disagrees with manifest")));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != attributes.len() + 1 {
            return Err(Error::parse(line_no, "wrong number of cells"));
        }
        ids.push(unescape(fields[0], line_no)?);
        let row = fields[1..]
            .iter()
            .zip(&attributes)
            .map(|(raw, attr)| {
                if *raw == MISSING {
                    return Ok(None);
                }
                Ok(Some(match attr.kind {
                    AttributeKind::Categorical => Value::Categorical(unescape(raw, line_no)?),
                    AttributeKind::Numeric => Value::Numeric(
                        raw.parse()
                            .map_err(|_| Error::parse(line_no, format!("bad number `{raw}`")))?,
                    ),
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    AttributeTable::new(ids, attributes, rows)
}

fn parse_ratings(text: &str, scale: RatingScale) -> Result<RatingTable> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let line_no = i + 1;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::parse(line_no, "expected 4 fields"));
        }
        let rating = f[2]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad rating `{}`", f[2])))?;
        let timestamp = if f[3].is_empty() {
            None
        } else {
            Some(
                f[3].parse()
                    .map_err(|_| Error::parse(line_no, format!("bad timestamp `{}`", f[3])))?,
            )
        };
        entries.push(Rating {
            user: unescape(f[0], line_no)?,
            item: unescape(f[1], line_no)?,
            rating,
            timestamp,
        });
    }
    RatingTable::new(entries, scale)
}

pub fn read_canonical(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let manifest = parse_manifest(&read_text(&dir.join("schema.txt"))?)?;
    let get = |k: &str| {
        manifest
            .get(k)
            .ok_or_else(|| Error::Schema(format!("manifest lacks `{k}`")))
    };
    if get("format")? != CANONICAL_FORMAT || get("version")? != VERSION {
        return Err(Error::Schema("not a canonical dataset directory".into()));
    }
    let num = |k: &str| -> Result<f64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Schema(format!("bad number for `{k}`")))
    };
    let scale = RatingScale::new(num("scale.min")?, num("scale.max")?)?;
    let users = parse_table(
        &read_text(&dir.join("users.tsv"))?,
        manifest_attrs(get("users.attributes")?)?,
    )?;
    let items = parse_table(
        &read_text(&dir.join("items.tsv"))?,
        manifest_attrs(get("items.attributes")?)?,
    )?;
    let ratings = parse_ratings(&read_text(&dir.join("ratings.tsv"))?, scale)?;
    let environment = manifest
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("env.").map(|k| (k.to_owned(), v.clone())))
        .collect();
    Dataset::assemble(ratings, users, items, environment, true)
}
