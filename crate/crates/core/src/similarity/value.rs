use ndarray::Array2;

use super::index::{coded_indices, CodedTable, CooccurrenceIndex, ValueFrequencyIndex};
use crate::store::{AttributeTable, Side};
use crate::{Error, Result};

fn checked(freq: &ValueFrequencyIndex, attr: usize, code: u32) -> Result<f64> {
    match freq.counts.get(attr).and_then(|c| c.get(code as usize)) {
        Some(&f) if f > 0 => Ok(f as f64),
        _ => Err(Error::UnknownValue {
            attribute: format!("#{attr}"),
            value: format!("#{code}"),
        }),
    }
}

/// Intra-attribute value similarity from occurrence frequencies:
/// `f(x) f(y) / (f(x) + f(y) + f(x) f(y))`.
pub fn intra_value_sim(freq: &ValueFrequencyIndex, attr: usize, x: u32, y: u32) -> Result<f64> {
    let fx = checked(freq, attr, x)?;
    let fy = checked(freq, attr, y)?;
    let p = fx * fy;
    Ok(p / (fx + fy + p))
}

/// Inter-attribute value similarity: for every other attribute `k`, the
/// overlap `sum_w min(P(w|x), P(w|y))` of the two values' conditional
/// distributions, averaged over the attributes where both distributions
/// exist. With no such attribute the similarity is 1.
///
/// The overlap is accumulated on integer counts so `x == y` yields exactly 1.
pub fn inter_value_sim(
    freq: &ValueFrequencyIndex,
    cooc: &CooccurrenceIndex,
    attr: usize,
    x: u32,
    y: u32,
) -> Result<f64> {
    checked(freq, attr, x)?;
    checked(freq, attr, y)?;
    let mut total = 0.0;
    let mut used = 0usize;
    for k in (0..cooc.n_attributes()).filter(|&k| k != attr) {
        let px = cooc.profile(attr, k, x);
        let py = cooc.profile(attr, k, y);
        let nx: u64 = px.iter().sum();
        let ny: u64 = py.iter().sum();
        if nx == 0 || ny == 0 {
            continue;
        }
        let overlap: u64 = px
            .iter()
            .zip(py)
            .map(|(&cx, &cy)| (cx * ny).min(cy * nx))
            .sum();
        total += overlap as f64 / (nx * ny) as f64;
        used += 1;
    }
    Ok(if used == 0 { 1.0 } else { total / used as f64 })
}

/// Coupled value similarity: intra times inter, so either channel can veto.
pub fn coupled_value_sim(
    freq: &ValueFrequencyIndex,
    cooc: &CooccurrenceIndex,
    attr: usize,
    x: u32,
    y: u32,
) -> Result<f64> {
    Ok(intra_value_sim(freq, attr, x, y)? * inter_value_sim(freq, cooc, attr, x, y)?)
}

/// Coupled object similarity computed from scratch for two objects of
/// `table`. Use [`CoupledSimilarity`] when more than one pair is needed.
pub fn coupled_object_sim(table: &AttributeTable, a: &str, b: &str) -> Result<f64> {
    CoupledSimilarity::fit(table)?.object_sim(a, b)
}

/// Coupled similarities between all values of one attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct AttrValueSimMatrix {
    pub attribute: String,
    pub values: Vec<String>,
    pub sims: Array2<f64>,
}

impl AttrValueSimMatrix {
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.sims[[x as usize, y as usize]]
    }
}

/// Everything learned from one categorical attribute table: value codes,
/// frequency and co-occurrence indices, and the per-attribute coupled value
/// similarity matrices.
#[derive(Debug, Clone)]
pub struct CoupledSimilarity {
    coded: CodedTable,
    freq: ValueFrequencyIndex,
    cooc: CooccurrenceIndex,
    values: Vec<AttrValueSimMatrix>,
}

impl CoupledSimilarity {
    pub fn fit(table: &AttributeTable) -> Result<Self> {
        let coded = CodedTable::new(table)?;
        let (freq, cooc) = coded_indices(&coded);
        let values = (0..coded.attributes.len())
            .map(|j| {
                let n = coded.domains[j].len();
                let mut sims = Array2::zeros((n, n));
                for x in 0..n as u32 {
                    for y in x..n as u32 {
                        let s = coupled_value_sim(&freq, &cooc, j, x, y)?;
                        sims[[x as usize, y as usize]] = s;
                        sims[[y as usize, x as usize]] = s;
                    }
                }
                Ok(AttrValueSimMatrix {
                    attribute: coded.attributes[j].clone(),
                    values: coded.domains[j].clone(),
                    sims,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CoupledSimilarity {
            coded,
            freq,
            cooc,
            values,
        })
    }

    pub fn coded(&self) -> &CodedTable {
        &self.coded
    }

    pub fn frequencies(&self) -> &ValueFrequencyIndex {
        &self.freq
    }

    pub fn cooccurrences(&self) -> &CooccurrenceIndex {
        &self.cooc
    }

    pub fn value_matrices(&self) -> &[AttrValueSimMatrix] {
        &self.values
    }

    fn codes(&self, attr: &str, x: &str, y: &str) -> Result<(usize, u32, u32)> {
        let j = self.coded.attribute_position(attr)?;
        Ok((j, self.coded.code(j, x)?, self.coded.code(j, y)?))
    }

    pub fn intra(&self, attr: &str, x: &str, y: &str) -> Result<f64> {
        let (j, x, y) = self.codes(attr, x, y)?;
        intra_value_sim(&self.freq, j, x, y)
    }

    pub fn inter(&self, attr: &str, x: &str, y: &str) -> Result<f64> {
        let (j, x, y) = self.codes(attr, x, y)?;
        inter_value_sim(&self.freq, &self.cooc, j, x, y)
    }

    pub fn value_sim(&self, attr: &str, x: &str, y: &str) -> Result<f64> {
        let (j, x, y) = self.codes(attr, x, y)?;
        Ok(self.values[j].get(x, y))
    }

    /// Mean coupled value similarity over the attributes present in both
    /// rows; 0 when no attribute is shared.
    pub fn row_sim(&self, a: &[Option<u32>], b: &[Option<u32>]) -> f64 {
        let mut sum = 0.0;
        let mut shared = 0usize;
        for ((m, x), y) in self.values.iter().zip(a).zip(b) {
            if let (Some(x), Some(y)) = (x, y) {
                sum += m.get(*x, *y);
                shared += 1;
            }
        }
        if shared == 0 {
            0.0
        } else {
            sum / shared as f64
        }
    }

    pub fn object_sim(&self, a: &str, b: &str) -> Result<f64> {
        let pos = |id: &str| {
            self.coded
                .object_ids
                .iter()
                .position(|o| o == id)
                .ok_or_else(|| Error::NotFound {
                    kind: "object",
                    id: id.to_owned(),
                })
        };
        Ok(self.row_sim(self.coded.row(pos(a)?), self.coded.row(pos(b)?)))
    }

    pub fn object_matrix(
        &self,
        side: Side,
        options: &super::SimilarityOptions,
    ) -> Result<super::ObjectSimMatrix> {
        super::matrix::from_coupled(self, side, options)
    }
}
