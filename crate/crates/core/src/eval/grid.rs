use serde::{Deserialize, Deserializer, Serialize};

use crate::baseline::{MfConfig, NeighborhoodParams};
use crate::coupled::{CmfConfig, EnsembleConfig, KModesConfig};
use crate::{Error, Result};

/// Candidate values for one hyperparameter. Deserialises from a single value
/// or a list; always serialises as a list.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid<T>(pub Vec<T>);

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Grid<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum OneOrMany<T> {
            One(T),
            Many(Vec<T>),
        }
        Ok(match OneOrMany::deserialize(d)? {
            OneOrMany::One(v) => Grid(vec![v]),
            OneOrMany::Many(v) => Grid(v),
        })
    }
}

impl<T> Grid<T> {
    pub fn one(v: T) -> Self {
        Grid(vec![v])
    }

    fn check(&self, name: &str) -> Result<&[T]> {
        if self.0.is_empty() {
            return Err(Error::Config(format!("grid for `{name}` is empty")));
        }
        Ok(&self.0)
    }
}

/// Cartesian product, first axis varying slowest.
fn product<A: Clone, B: Clone>(a: &[A], b: &[B]) -> Vec<(A, B)> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| (x.clone(), y.clone())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeighborhoodGrid {
    pub n_neighbors: Grid<usize>,
    pub min_overlap: Grid<usize>,
    pub positive_only: Grid<bool>,
}

impl Default for NeighborhoodGrid {
    fn default() -> Self {
        let d = NeighborhoodParams::default();
        NeighborhoodGrid {
            n_neighbors: Grid::one(d.n_neighbors),
            min_overlap: Grid::one(d.min_overlap),
            positive_only: Grid::one(d.positive_only),
        }
    }
}

impl NeighborhoodGrid {
    pub fn points(&self) -> Result<Vec<NeighborhoodParams>> {
        let ab = product(self.n_neighbors.check("n_neighbors")?, self.min_overlap.check("min_overlap")?);
        let points: Vec<NeighborhoodParams> = product(&ab, self.positive_only.check("positive_only")?)
            .into_iter()
            .map(|((n_neighbors, min_overlap), positive_only)| NeighborhoodParams {
                n_neighbors,
                min_overlap,
                positive_only,
            })
            .collect();
        if points.iter().any(|p| p.n_neighbors == 0) {
            return Err(Error::Config("n_neighbors must be at least 1".into()));
        }
        Ok(points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfGrid {
    pub factors: Grid<usize>,
    pub learning_rate: Grid<f64>,
    pub regularization: Grid<f64>,
    pub epochs: Grid<usize>,
    pub seed: u64,
}

impl Default for MfGrid {
    fn default() -> Self {
        let d = MfConfig::default();
        MfGrid {
            factors: Grid::one(d.factors),
            learning_rate: Grid::one(d.learning_rate),
            regularization: Grid::one(d.regularization),
            epochs: Grid::one(d.epochs),
            seed: d.seed,
        }
    }
}

impl MfGrid {
    pub fn points(&self) -> Result<Vec<MfConfig>> {
        let ab = product(self.factors.check("factors")?, self.learning_rate.check("learning_rate")?);
        let abc = product(&ab, self.regularization.check("regularization")?);
        let points: Vec<MfConfig> = product(&abc, self.epochs.check("epochs")?)
            .into_iter()
            .map(|(((factors, learning_rate), regularization), epochs)| MfConfig {
                factors,
                learning_rate,
                regularization,
                epochs,
                seed: self.seed,
            })
            .collect();
        points.iter().try_for_each(MfConfig::validate)?;
        Ok(points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmfGrid {
    pub factors: Grid<usize>,
    pub learning_rate: Grid<f64>,
    pub regularization: Grid<f64>,
    pub epochs: Grid<usize>,
    pub seed: u64,
    pub alpha: Grid<f64>,
    pub beta: Grid<f64>,
    pub top_m: Grid<usize>,
}

impl Default for CmfGrid {
    fn default() -> Self {
        let mf = MfGrid::default();
        let d = CmfConfig::default();
        CmfGrid {
            factors: mf.factors,
            learning_rate: mf.learning_rate,
            regularization: mf.regularization,
            epochs: mf.epochs,
            seed: mf.seed,
            alpha: Grid::one(d.alpha),
            beta: Grid::one(d.beta),
            top_m: Grid::one(d.top_m),
        }
    }
}

impl CmfGrid {
    fn mf(&self) -> MfGrid {
        MfGrid {
            factors: self.factors.clone(),
            learning_rate: self.learning_rate.clone(),
            regularization: self.regularization.clone(),
            epochs: self.epochs.clone(),
            seed: self.seed,
        }
    }

    pub fn points(&self) -> Result<Vec<CmfConfig>> {
        let coupling = product(
            &product(self.alpha.check("alpha")?, self.beta.check("beta")?),
            self.top_m.check("top_m")?,
        );
        let points: Vec<CmfConfig> = product(&self.mf().points()?, &coupling)
            .into_iter()
            .map(|(mf, ((alpha, beta), top_m))| CmfConfig {
                mf,
                alpha,
                beta,
                top_m,
            })
            .collect();
        points.iter().try_for_each(CmfConfig::validate)?;
        Ok(points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KModesGrid {
    pub clusters: Grid<usize>,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KModesGrid {
    fn default() -> Self {
        let d = KModesConfig::default();
        KModesGrid {
            clusters: Grid::one(d.clusters),
            max_iter: d.max_iter,
            seed: d.seed,
        }
    }
}

impl KModesGrid {
    pub fn points(&self) -> Result<Vec<KModesConfig>> {
        Ok(self
            .clusters
            .check("clusters")?
            .iter()
            .map(|&clusters| KModesConfig {
                clusters,
                max_iter: self.max_iter,
                seed: self.seed,
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleGrid {
    pub factors: Grid<usize>,
    pub learning_rate: Grid<f64>,
    pub regularization: Grid<f64>,
    pub epochs: Grid<usize>,
    pub seed: u64,
    pub alpha: Grid<f64>,
    pub beta: Grid<f64>,
    pub top_m: Grid<usize>,
    /// Shrinkage of the cell couplings.
    pub tau: Grid<f64>,
    pub gamma_mf: Grid<f64>,
    pub gamma_d: Grid<f64>,
}

impl Default for EnsembleGrid {
    fn default() -> Self {
        let c = CmfGrid::default();
        EnsembleGrid {
            factors: c.factors,
            learning_rate: c.learning_rate,
            regularization: c.regularization,
            epochs: c.epochs,
            seed: c.seed,
            alpha: c.alpha,
            beta: c.beta,
            top_m: c.top_m,
            tau: Grid::one(20.0),
            gamma_mf: Grid(vec![1.0, 0.9, 0.8]),
            gamma_d: Grid(vec![0.0, 0.1, 0.2]),
        }
    }
}

/// One ensemble grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsemblePoint {
    pub cmf: CmfConfig,
    pub tau: f64,
    pub weights: EnsembleConfig,
}

impl EnsembleGrid {
    pub fn cmf(&self) -> CmfGrid {
        CmfGrid {
            factors: self.factors.clone(),
            learning_rate: self.learning_rate.clone(),
            regularization: self.regularization.clone(),
            epochs: self.epochs.clone(),
            seed: self.seed,
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            top_m: self.top_m.clone(),
        }
    }

    /// The (tau, weights) points combined with every CMF point.
    pub fn combiners(&self) -> Result<Vec<(f64, EnsembleConfig)>> {
        let taus = self.tau.check("tau")?;
        if let Some(t) = taus.iter().find(|t| t.is_nan() || **t < 0.0) {
            return Err(Error::Config(format!("tau must be non-negative, got {t}")));
        }
        let weights = product(self.gamma_mf.check("gamma_mf")?, self.gamma_d.check("gamma_d")?);
        let out: Vec<(f64, EnsembleConfig)> = product(taus, &weights)
            .into_iter()
            .map(|(tau, (gamma_mf, gamma_d))| (tau, EnsembleConfig { gamma_mf, gamma_d }))
            .collect();
        out.iter().try_for_each(|(_, w)| w.validate())?;
        Ok(out)
    }

    pub fn points(&self) -> Result<Vec<EnsemblePoint>> {
        Ok(product(&self.cmf().points()?, &self.combiners()?)
            .into_iter()
            .map(|(cmf, (tau, weights))| EnsemblePoint { cmf, tau, weights })
            .collect())
    }
}

/// A model family together with its hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Ubcf(NeighborhoodGrid),
    Ibcf(NeighborhoodGrid),
    Mf(MfGrid),
    Cmf(CmfGrid),
    Kmodes(KModesGrid),
    Ensemble(EnsembleGrid),
}

impl ModelSpec {
    pub const KINDS: [&'static str; 6] = ["ubcf", "ibcf", "mf", "cmf", "kmodes", "ensemble"];

    /// Default grid for a model kind.
    pub fn default_for(kind: &str) -> Result<Self> {
        Ok(match kind {
            "ubcf" => ModelSpec::Ubcf(NeighborhoodGrid::default()),
            "ibcf" => ModelSpec::Ibcf(NeighborhoodGrid::default()),
            "mf" => ModelSpec::Mf(MfGrid::default()),
            "cmf" => ModelSpec::Cmf(CmfGrid::default()),
            "kmodes" => ModelSpec::Kmodes(KModesGrid::default()),
            "ensemble" => ModelSpec::Ensemble(EnsembleGrid::default()),
            other => return Err(unknown_kind(other)),
        })
    }

    /// Grid of the given kind from any self-describing serde input, missing
    /// fields taking their defaults.
    pub fn from_parts<'de, D: Deserializer<'de>>(
        kind: &str,
        d: D,
    ) -> std::result::Result<Result<Self>, D::Error> {
        Ok(Ok(match kind {
            "ubcf" => ModelSpec::Ubcf(Deserialize::deserialize(d)?),
            "ibcf" => ModelSpec::Ibcf(Deserialize::deserialize(d)?),
            "mf" => ModelSpec::Mf(Deserialize::deserialize(d)?),
            "cmf" => ModelSpec::Cmf(Deserialize::deserialize(d)?),
            "kmodes" => ModelSpec::Kmodes(Deserialize::deserialize(d)?),
            "ensemble" => ModelSpec::Ensemble(Deserialize::deserialize(d)?),
            other => return Ok(Err(unknown_kind(other))),
        }))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Ubcf(_) => "ubcf",
            ModelSpec::Ibcf(_) => "ibcf",
            ModelSpec::Mf(_) => "mf",
            ModelSpec::Cmf(_) => "cmf",
            ModelSpec::Kmodes(_) => "kmodes",
            ModelSpec::Ensemble(_) => "ensemble",
        }
    }

    /// Number of grid points.
    pub fn size(&self) -> Result<usize> {
        Ok(match self {
            ModelSpec::Ubcf(g) | ModelSpec::Ibcf(g) => g.points()?.len(),
            ModelSpec::Mf(g) => g.points()?.len(),
            ModelSpec::Cmf(g) => g.points()?.len(),
            ModelSpec::Kmodes(g) => g.points()?.len(),
            ModelSpec::Ensemble(g) => g.points()?.len(),
        })
    }
}

fn unknown_kind(kind: &str) -> Error {
    Error::Config(format!(
        "unknown model `{kind}`; valid models are: {}",
        ModelSpec::KINDS.join(", ")
    ))
}
