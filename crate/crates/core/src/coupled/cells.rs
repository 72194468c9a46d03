use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::Array2;

use crate::similarity::CodedTable;
use crate::store::{Dataset, Rating};
use crate::{Error, Result};

/// Residual statistics for one (user attribute, item attribute) pair,
/// indexed by (user value code, item value code).
#[derive(Debug, Clone, PartialEq)]
pub struct CellMatrix {
    pub residuals: Array2<f64>,
    pub support: Array2<u64>,
}

/// For every user attribute `p` and item attribute `q`, the shrunken mean
/// residual `Σ (r − μ) / (n + τ)` of training ratings whose user has value
/// `x` for `p` and whose item has value `w` for `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCouplingTensor {
    tau: f64,
    global_mean: f64,
    users: CodedTable,
    items: CodedTable,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    cells: Vec<CellMatrix>,
}

fn index(ids: &[String]) -> HashMap<String, usize> {
    ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect()
}

pub fn build_cell_couplings(ds: &Dataset, ratings: &[Rating], tau: f64) -> Result<CellCouplingTensor> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Config(format!("shrinkage must be non-negative, got {tau}")));
    }
    if ratings.is_empty() {
        return Err(Error::Empty("training ratings"));
    }
    let users = CodedTable::new(&ds.users)?;
    let items = CodedTable::new(&ds.items)?;
    let user_index = index(users.object_ids());
    let item_index = index(items.object_ids());
    let global_mean = ratings.iter().map(|r| r.rating).sum::<f64>() / ratings.len() as f64;
    let (np, nq) = (users.attributes().len(), items.attributes().len());
    let mut sums: Vec<Array2<f64>> = Vec::with_capacity(np * nq);
    let mut support: Vec<Array2<u64>> = Vec::with_capacity(np * nq);
    for p in 0..np {
        for q in 0..nq {
            let shape = (users.domain(p).len(), items.domain(q).len());
            sums.push(Array2::zeros(shape));
            support.push(Array2::zeros(shape));
        }
    }
    for r in ratings {
        let u = *user_index.get(&r.user).ok_or_else(|| Error::NotFound {
            kind: "user",
            id: r.user.clone(),
        })?;
        let i = *item_index.get(&r.item).ok_or_else(|| Error::NotFound {
            kind: "item",
            id: r.item.clone(),
        })?;
        let residual = r.rating - global_mean;
        for (p, x) in users.row(u).iter().enumerate() {
            let Some(x) = *x else { continue };
            for (q, w) in items.row(i).iter().enumerate() {
                let Some(w) = *w else { continue };
                let cell = [x as usize, w as usize];
                sums[p * nq + q][cell] += residual;
                support[p * nq + q][cell] += 1;
            }
        }
    }
    let cells = sums
        .into_iter()
        .zip(support)
        .map(|(sum, support)| {
            let residuals = ndarray::Zip::from(&sum)
                .and(&support)
                .map_collect(|&s, &n| if n == 0 { 0.0 } else { s / (n as f64 + tau) });
            CellMatrix { residuals, support }
        })
        .collect();
    Ok(CellCouplingTensor {
        tau,
        global_mean,
        users,
        items,
        user_index,
        item_index,
        cells,
    })
}

impl CellCouplingTensor {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn user_attributes(&self) -> &[String] {
        self.users.attributes()
    }

    pub fn item_attributes(&self) -> &[String] {
        self.items.attributes()
    }

    pub fn user_domain(&self, p: usize) -> &[String] {
        self.users.domain(p)
    }

    pub fn item_domain(&self, q: usize) -> &[String] {
        self.items.domain(q)
    }

    pub fn cell(&self, p: usize, q: usize) -> &CellMatrix {
        &self.cells[p * self.items.attributes().len() + q]
    }

    /// Residual for values named by attribute and value strings.
    pub fn entry(&self, p: &str, x: &str, q: &str, w: &str) -> Result<(f64, u64)> {
        let p = self.users.attribute_position(p)?;
        let q = self.items.attribute_position(q)?;
        let x = self.users.code(p, x)? as usize;
        let w = self.items.code(q, w)? as usize;
        let cell = self.cell(p, q);
        Ok((cell.residuals[[x, w]], cell.support[[x, w]]))
    }

    /// Mean of `|D|` over the supported cells of pair (p, q); 0 if none.
    pub fn pair_strength(&self, p: usize, q: usize) -> f64 {
        let cell = self.cell(p, q);
        let (sum, n) = ndarray::Zip::from(&cell.residuals)
            .and(&cell.support)
            .fold((0.0, 0usize), |acc, &d, &n| if n > 0 { (acc.0 + d.abs(), acc.1 + 1) } else { acc });
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Coupling bias for the users and items at these table positions.
    pub fn bias_at(&self, u: usize, i: usize) -> f64 {
        let nq = self.items.attributes().len();
        let mut sum = 0.0;
        let mut count = 0usize;
        for (p, x) in self.users.row(u).iter().enumerate() {
            let Some(x) = *x else { continue };
            for (q, w) in self.items.row(i).iter().enumerate() {
                let Some(w) = *w else { continue };
                sum += self.cells[p * nq + q].residuals[[x as usize, w as usize]];
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    pub fn user_position(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn item_position(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    /// Text export: a `tau` and `mean` line, then per attribute pair a
    /// `pair` header followed by `x  w  residual  support` lines for the
    /// supported cells. Fields are tab-separated.
    pub fn to_text(&self) -> String {
        let mut s = format!("tau\t{}\nmean\t{}\n", self.tau, self.global_mean);
        for (p, pa) in self.users.attributes().iter().enumerate() {
            for (q, qa) in self.items.attributes().iter().enumerate() {
                writeln!(s, "pair\t{pa}\t{qa}").unwrap();
                let cell = self.cell(p, q);
                for ((x, w), &n) in cell.support.indexed_iter() {
                    if n > 0 {
                        writeln!(
                            s,
                            "{}\t{}\t{}\t{n}",
                            self.users.domain(p)[x],
                            self.items.domain(q)[w],
                            cell.residuals[[x, w]]
                        )
                        .unwrap();
                    }
                }
            }
        }
        s
    }

    /// Reads [`to_text`](Self::to_text) output back against the dataset the
    /// tensor was built from.
    pub fn from_text(text: &str, ds: &Dataset) -> Result<Self> {
        let users = CodedTable::new(&ds.users)?;
        let items = CodedTable::new(&ds.items)?;
        let (np, nq) = (users.attributes().len(), items.attributes().len());
        let mut cells: Vec<CellMatrix> = Vec::with_capacity(np * nq);
        for p in 0..np {
            for q in 0..nq {
                let shape = (users.domain(p).len(), items.domain(q).len());
                cells.push(CellMatrix {
                    residuals: Array2::zeros(shape),
                    support: Array2::zeros(shape),
                });
            }
        }
        let mut tau = None;
        let mut mean = None;
        let mut pair: Option<(usize, usize)> = None;
        let mut seen = vec![false; np * nq];
        let num = |s: &str, line: usize| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(line, format!("not a number: `{s}`")))
        };
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let f: Vec<&str> = raw.split('\t').collect();
            match f.as_slice() {
                [""] => {}
                ["tau", v] => tau = Some(num(v, line)?),
                ["mean", v] => mean = Some(num(v, line)?),
                ["pair", pa, qa] => {
                    let p = users.attribute_position(pa)?;
                    let q = items.attribute_position(qa)?;
                    if std::mem::replace(&mut seen[p * nq + q], true) {
                        return Err(Error::parse(line, format!("pair {pa}/{qa} repeated")));
                    }
                    pair = Some((p, q));
                }
                [x, w, d, n] => {
                    let (p, q) = pair.ok_or_else(|| Error::parse(line, "cell before any pair header"))?;
                    let x = users.code(p, x)? as usize;
                    let w = items.code(q, w)? as usize;
                    let n: u64 = n
                        .parse()
                        .map_err(|_| Error::parse(line, format!("bad support `{n}`")))?;
                    let cell = &mut cells[p * nq + q];
                    cell.residuals[[x, w]] = num(d, line)?;
                    cell.support[[x, w]] = n;
                }
                _ => return Err(Error::parse(line, format!("unexpected line `{raw}`"))),
            }
        }
        let tau = tau.ok_or_else(|| Error::Schema("missing tau line".into()))?;
        let global_mean = mean.ok_or_else(|| Error::Schema("missing mean line".into()))?;
        Ok(CellCouplingTensor {
            tau,
            global_mean,
            user_index: index(users.object_ids()),
            item_index: index(items.object_ids()),
            users,
            items,
            cells,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateMode {
    PerUserAttr,
    PerItemAttr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingStrength {
    pub attribute: String,
    pub strength: f64,
}

/// Per user attribute (or per item attribute), the mean pair strength over
/// all attributes of the other side.
pub fn aggregate_cell_couplings(tensor: &CellCouplingTensor, mode: AggregateMode) -> Vec<CouplingStrength> {
    let (np, nq) = (tensor.user_attributes().len(), tensor.item_attributes().len());
    let mean = |values: Vec<f64>| {
        if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    };
    match mode {
        AggregateMode::PerUserAttr => (0..np)
            .map(|p| CouplingStrength {
                attribute: tensor.user_attributes()[p].clone(),
                strength: mean((0..nq).map(|q| tensor.pair_strength(p, q)).collect()),
            })
            .collect(),
        AggregateMode::PerItemAttr => (0..nq)
            .map(|q| CouplingStrength {
                attribute: tensor.item_attributes()[q].clone(),
                strength: mean((0..np).map(|p| tensor.pair_strength(p, q)).collect()),
            })
            .collect(),
    }
}

/// Average residual over the attribute pairs for which both the user's and
/// the item's value are present; 0 when there are none.
pub fn predict_coupling_bias(tensor: &CellCouplingTensor, user: &str, item: &str) -> Result<f64> {
    let u = tensor.user_position(user).ok_or_else(|| Error::NotFound {
        kind: "user",
        id: user.to_owned(),
    })?;
    let i = tensor.item_position(item).ok_or_else(|| Error::NotFound {
        kind: "item",
        id: item.to_owned(),
    })?;
    Ok(tensor.bias_at(u, i))
}
