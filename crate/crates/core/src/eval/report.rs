use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SplitSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

/// Validation outcome of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub params: serde_json::Value,
    pub validation_mae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Test-set result of one model after selection and refit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    pub kind: String,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    /// Number of test predictions made.
    pub predictions: usize,
    /// How many of them came from a fallback rule.
    pub fallbacks: usize,
    pub selected: Option<serde_json::Value>,
    pub validation_mae: Option<f64>,
    pub grid: Vec<GridEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl ModelRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Everything needed to reproduce and compare one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset_digest: String,
    pub environment: BTreeMap<String, String>,
    pub split: SplitSpec,
    pub sizes: SplitSizes,
    pub protocol: String,
    pub rows: Vec<ModelRow>,
    /// Wall-clock seconds per model; kept out of the metrics file so that
    /// reruns stay byte-identical.
    #[serde(skip)]
    pub timings: BTreeMap<String, f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Artifact(format!("bad metrics file: {e}")))
    }

    pub fn row(&self, model: &str) -> Option<&ModelRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(ModelRow::failed)
    }
}

/// Relative MAE gain of a reference model over a baseline, both ways:
/// `(b − c) / b` and `(b − c) / c`, as percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub over_baseline: f64,
    pub over_reference: f64,
}

impl Improvement {
    pub fn new(baseline: f64, reference: f64) -> Self {
        Improvement {
            over_baseline: 100.0 * (baseline - reference) / baseline,
            over_reference: 100.0 * (baseline - reference) / reference,
        }
    }
}

/// Rows sorted by test MAE (failed rows last, then by name), each with the
/// reference model's improvement over it.
pub fn ranked<'a>(rows: &[&'a ModelRow], reference: Option<&str>) -> Vec<(&'a ModelRow, Option<Improvement>)> {
    let mut sorted: Vec<&ModelRow> = rows.to_vec();
    sorted.sort_by(|a, b| match (a.mae, b.mae) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.model.cmp(&b.model)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.model.cmp(&b.model),
    });
    let reference_mae = match reference {
        Some(name) => sorted.iter().find(|r| r.model == name).and_then(|r| r.mae),
        None => sorted.first().and_then(|r| r.mae),
    };
    sorted
        .into_iter()
        .map(|r| {
            let gain = match (r.mae, reference_mae) {
                (Some(b), Some(c)) => Some(Improvement::new(b, c)),
                _ => None,
            };
            (r, gain)
        })
        .collect()
}

const HEADER: [&str; 7] = ["model", "MAE", "RMSE", "n", "fallbacks", "gain/base%", "gain/ref%"];

fn cells(row: &ModelRow, gain: Option<Improvement>) -> [String; 7] {
    let num = |v: Option<f64>, digits: usize| v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"));
    [
        row.model.clone(),
        if row.failed() { "failed".into() } else { num(row.mae, 4) },
        num(row.rmse, 4),
        row.predictions.to_string(),
        row.fallbacks.to_string(),
        num(gain.map(|g| g.over_baseline), 2),
        num(gain.map(|g| g.over_reference), 2),
    ]
}

/// Aligned text table. The gain columns give the reference model's MAE
/// improvement over each row; without a reference the best row is used.
pub fn render_table(rows: &[&ModelRow], reference: Option<&str>) -> String {
    let body: Vec<[String; 7]> = ranked(rows, reference)
        .into_iter()
        .map(|(r, g)| cells(r, g))
        .collect();
    let mut widths = HEADER.map(str::len);
    for line in &body {
        for (w, c) in widths.iter_mut().zip(line) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut emit = |line: &[String]| {
        let mut s = String::new();
        for (k, (c, w)) in line.iter().zip(widths).enumerate() {
            if k == 0 {
                write!(s, "{c:<w$}").unwrap();
            } else {
                write!(s, "  {c:>w$}").unwrap();
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    emit(&HEADER.map(String::from));
    for line in &body {
        emit(line);
    }
    out
}

/// The same table as delimiter-separated values.
pub fn render_delimited(rows: &[&ModelRow], reference: Option<&str>, delimiter: char) -> String {
    let mut out = HEADER.join(&delimiter.to_string());
    out.push('\n');
    for (r, g) in ranked(rows, reference) {
        out.push_str(&cells(r, g).join(&delimiter.to_string()));
        out.push('\n');
    }
    out
}
