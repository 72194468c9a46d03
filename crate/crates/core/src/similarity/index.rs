use crate::store::{AttributeKind, AttributeTable, Value};
use crate::{Error, Result};

/// An all-categorical attribute table re-coded to dense value codes. Codes
/// follow the sorted order of each attribute's observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedTable {
    pub(crate) object_ids: Vec<String>,
    pub(crate) attributes: Vec<String>,
    pub(crate) domains: Vec<Vec<String>>,
    pub(crate) rows: Vec<Vec<Option<u32>>>,
}

impl CodedTable {
    pub fn new(table: &AttributeTable) -> Result<Self> {
        if let Some(a) = table
            .attributes()
            .iter()
            .find(|a| a.kind == AttributeKind::Numeric)
        {
            return Err(Error::Precondition(format!(
                "attribute `{}` is numeric; discretize it first",
                a.name
            )));
        }
        let n_attrs = table.attributes().len();
        let mut domains: Vec<Vec<String>> = vec![Vec::new(); n_attrs];
        for row in table.rows() {
            for (j, cell) in row.iter().enumerate() {
                if let Some(Value::Categorical(v)) = cell {
                    domains[j].push(v.clone());
                }
            }
        }
        for d in &mut domains {
            d.sort();
            d.dedup();
        }
        let rows = table
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, cell)| {
                        cell.as_ref()
                            .and_then(Value::as_categorical)
                            .map(|v| domains[j].binary_search_by(|d| d.as_str().cmp(v)).unwrap() as u32)
                    })
                    .collect()
            })
            .collect();
        Ok(CodedTable {
            object_ids: table.object_ids().to_vec(),
            attributes: table.attributes().iter().map(|a| a.name.clone()).collect(),
            domains,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn object_ids(&self) -> &[String] {
        &self.object_ids
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn domain(&self, attr: usize) -> &[String] {
        &self.domains[attr]
    }

    pub fn row(&self, i: usize) -> &[Option<u32>] {
        &self.rows[i]
    }

    pub fn attribute_position(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::NotFound {
                kind: "attribute",
                id: name.to_owned(),
            })
    }

    pub fn code(&self, attr: usize, value: &str) -> Result<u32> {
        self.domains[attr]
            .binary_search_by(|d| d.as_str().cmp(value))
            .map(|c| c as u32)
            .map_err(|_| Error::UnknownValue {
                attribute: self.attributes[attr].clone(),
                value: value.to_owned(),
            })
    }

    pub fn value(&self, attr: usize, code: u32) -> &str {
        &self.domains[attr][code as usize]
    }

    /// Codes an arbitrary attribute row (e.g. a cluster mode) against this
    /// table's domains.
    pub fn encode(&self, row: &[Option<Value>]) -> Result<Vec<Option<u32>>> {
        row.iter()
            .enumerate()
            .map(|(j, cell)| match cell {
                None => Ok(None),
                Some(Value::Categorical(v)) => self.code(j, v).map(Some),
                Some(Value::Numeric(_)) => Err(Error::Precondition(format!(
                    "numeric cell for attribute `{}`",
                    self.attributes[j]
                ))),
            })
            .collect()
    }
}

/// Occurrence count of every observed value, per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFrequencyIndex {
    pub(crate) counts: Vec<Vec<u64>>,
    pub(crate) missing: Vec<u64>,
    n_objects: u64,
}

impl ValueFrequencyIndex {
    pub fn n_objects(&self) -> u64 {
        self.n_objects
    }

    pub fn frequency(&self, attr: usize, code: u32) -> u64 {
        self.counts[attr][code as usize]
    }

    pub fn counts(&self, attr: usize) -> &[u64] {
        &self.counts[attr]
    }

    pub fn missing(&self, attr: usize) -> u64 {
        self.missing[attr]
    }
}

/// Joint value counts for every ordered attribute pair, over objects where
/// both cells are present.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceIndex {
    n_attrs: usize,
    widths: Vec<usize>,
    // joint[j * n_attrs + k][x * widths[k] + w]
    joint: Vec<Vec<u64>>,
}

impl CooccurrenceIndex {
    pub fn n_attributes(&self) -> usize {
        self.n_attrs
    }

    pub fn joint(&self, j: usize, k: usize, x: u32, w: u32) -> u64 {
        self.joint[j * self.n_attrs + k][x as usize * self.widths[k] + w as usize]
    }

    /// Joint counts of `x` (attribute `j`) with every value of attribute `k`.
    pub fn profile(&self, j: usize, k: usize, x: u32) -> &[u64] {
        let width = self.widths[k];
        &self.joint[j * self.n_attrs + k][x as usize * width..(x as usize + 1) * width]
    }
}

/// Counts value frequencies and pairwise co-occurrences; missing cells are
/// excluded from both.
pub fn build_indices(table: &AttributeTable) -> Result<(ValueFrequencyIndex, CooccurrenceIndex)> {
    let coded = CodedTable::new(table)?;
    Ok(coded_indices(&coded))
}

pub(crate) fn coded_indices(coded: &CodedTable) -> (ValueFrequencyIndex, CooccurrenceIndex) {
    let n_attrs = coded.attributes.len();
    let widths: Vec<usize> = coded.domains.iter().map(Vec::len).collect();
    let mut counts: Vec<Vec<u64>> = widths.iter().map(|&w| vec![0; w]).collect();
    let mut missing = vec![0u64; n_attrs];
    let mut joint: Vec<Vec<u64>> = (0..n_attrs * n_attrs)
        .map(|jk| vec![0; widths[jk / n_attrs] * widths[jk % n_attrs]])
        .collect();
    for row in &coded.rows {
        for (j, cell) in row.iter().enumerate() {
            let Some(x) = *cell else {
                missing[j] += 1;
                continue;
            };
            counts[j][x as usize] += 1;
            for (k, other) in row.iter().enumerate() {
                if let (true, Some(w)) = (k != j, *other) {
                    joint[j * n_attrs + k][x as usize * widths[k] + w as usize] += 1;
                }
            }
        }
    }
    (
        ValueFrequencyIndex {
            counts,
            missing,
            n_objects: coded.rows.len() as u64,
        },
        CooccurrenceIndex {
            n_attrs,
            widths,
            joint,
        },
    )
}
