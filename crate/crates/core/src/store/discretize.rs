use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Attribute, AttributeKind, AttributeTable, Value};
use crate::{Error, Result};

/// Binning rule for one numeric attribute. Parses from and prints as
/// `equal-width:N`, `equal-frequency:N` or `cuts:a,b,c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    EqualWidth { bins: usize },
    EqualFrequency { bins: usize },
    CutPoints(Vec<f64>),
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("discretization `{s}` lacks `kind:argument`")))?;
        let bins = || {
            arg.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad bin count `{arg}`")))
        };
        match kind.trim() {
            "equal-width" => Ok(Strategy::EqualWidth { bins: bins()? }),
            "equal-frequency" => Ok(Strategy::EqualFrequency { bins: bins()? }),
            "cuts" => arg
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad cut point `{c}`")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Strategy::CutPoints),
            other => Err(Error::Config(format!("unknown discretization strategy `{other}`"))),
        }
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::EqualWidth { bins } => write!(f, "equal-width:{bins}"),
            Strategy::EqualFrequency { bins } => write!(f, "equal-frequency:{bins}"),
            Strategy::CutPoints(cuts) => {
                let cuts: Vec<String> = cuts.iter().map(|c| c.to_string()).collect();
                write!(f, "cuts:{}", cuts.join(","))
            }
        }
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationSpec {
    pub attribute: String,
    pub strategy: Strategy,
}

impl DiscretizationSpec {
    pub fn new(attribute: impl Into<String>, strategy: Strategy) -> Self {
        DiscretizationSpec {
            attribute: attribute.into(),
            strategy,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Discretization {
    pub table: AttributeTable,
    /// Bin boundaries actually used; a value `x` falls in the first bin whose
    /// upper cut exceeds it.
    pub cut_points: Vec<f64>,
    pub warnings: Vec<String>,
}

fn bin_label(cuts: &[f64], x: f64) -> String {
    if cuts.is_empty() {
        return "all".to_owned();
    }
    let bin = cuts.partition_point(|&c| c <= x);
    if bin == 0 {
        format!("<{}", cuts[0])
    } else if bin == cuts.len() {
        format!(">={}", cuts[bin - 1])
    } else {
        format!("[{},{})", cuts[bin - 1], cuts[bin])
    }
}

/// Replaces a numeric attribute by categorical bin labels. Missing cells stay
/// missing; categorical attributes are rejected rather than re-binned.
pub fn discretize(table: &AttributeTable, spec: &DiscretizationSpec) -> Result<Discretization> {
    let pos = table
        .attribute_position(&spec.attribute)
        .ok_or_else(|| Error::NotFound {
            kind: "attribute",
            id: spec.attribute.clone(),
        })?;
    if table.attributes()[pos].kind != AttributeKind::Numeric {
        return Err(Error::Precondition(format!(
            "attribute `{}` is already categorical",
            spec.attribute
        )));
    }
    let column: Vec<Option<f64>> = table
        .rows()
        .iter()
        .map(|row| row[pos].as_ref().and_then(Value::as_numeric))
        .collect();
    let mut sorted: Vec<f64> = column.iter().flatten().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let mut warnings = Vec::new();

    let cuts = match &spec.strategy {
        Strategy::EqualWidth { bins } | Strategy::EqualFrequency { bins } if *bins < 2 => {
            return Err(Error::Config(format!("bin count {bins} < 2")));
        }
        Strategy::CutPoints(cuts) => {
            if cuts.is_empty()
                || cuts.iter().any(|c| !c.is_finite())
                || cuts.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Error::Config(format!(
                    "cut points {cuts:?} must be finite and strictly increasing"
                )));
            }
            cuts.clone()
        }
        _ if sorted.is_empty() => Vec::new(),
        Strategy::EqualWidth { bins } => {
            let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
            if lo == hi {
                Vec::new()
            } else {
                (1..*bins)
                    .map(|k| lo + (hi - lo) * k as f64 / *bins as f64)
                    .collect()
            }
        }
        Strategy::EqualFrequency { bins } => {
            let n = sorted.len();
            let mut cuts: Vec<f64> = (1..*bins).map(|k| sorted[k * n / bins]).collect();
            cuts.dedup();
            cuts.retain(|&c| c > sorted[0]);
            cuts
        }
    };
    if cuts.is_empty() {
        let msg = format!(
            "attribute `{}`: degenerate input, all values fall in a single bin",
            spec.attribute
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let labels = column
        .iter()
        .map(|x| x.map(|x| Value::Categorical(bin_label(&cuts, x))))
        .collect();
    let table = table.replace_column(pos, Attribute::categorical(spec.attribute.clone()), labels)?;
    Ok(Discretization {
        table,
        cut_points: cuts,
        warnings,
    })
}
