use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::grid::{EnsemblePoint, ModelSpec};
use super::report::{EvalReport, GridEntry, ModelRow, SplitSizes};
use super::{mae, rmse, split_ratings, Split, SplitSpec};
use crate::baseline::{
    predict_ibcf, predict_ubcf, train_mf, LatentFactorModel, NeighborhoodParams, PearsonCache, Prediction,
    RatingMatrixView,
};
use crate::coupled::{
    build_cell_couplings, kmodes_fit, train_cmf_with_graphs, CellCouplingTensor, CmfModel, CouplingGraph,
    EnsembleConfig, KModesConfig,
};
use crate::similarity::{CoupledSimilarity, ObjectSimMatrix, SimilarityOptions};
use crate::store::{Dataset, Rating, Side};
use crate::{Error, Result};

const PROTOCOL: &str = "hyperparameters selected by validation MAE on the training part; \
selected model refit on training plus validation and scored on test";

/// A model as trained on one stage's ratings, ready to predict.
enum Trained {
    Neighborhood(Side, Arc<PearsonCache>, NeighborhoodParams),
    Factors(LatentFactorModel),
    Coupled(CmfModel),
    Clusters(Vec<usize>),
    Ensemble(Arc<CmfModel>, Arc<CellCouplingTensor>, EnsembleConfig),
}

/// Rating estimate from a factor model, or the user's mean when the user or
/// item has no training ratings.
fn factor_prediction(view: &RatingMatrixView, u: usize, i: usize, predict: impl FnOnce() -> f64) -> Prediction {
    if view.user_ratings(u).is_empty() || view.item_ratings(i).is_empty() {
        Prediction::fallback(view.scale().clamp(view.user_mean(u)))
    } else {
        Prediction::model(predict())
    }
}

impl Trained {
    /// Writes the trained model under `dir`, file names prefixed by `label`.
    fn save(&self, view: &RatingMatrixView, dir: &Path, label: &str) -> Result<()> {
        let write = |name: String, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        match self {
            Trained::Neighborhood(side, cache, _) => {
                write(format!("{label}.pearson.tsv"), cache.to_triplets(view.ids(*side)))
            }
            Trained::Factors(m) => m.save(dir.join(format!("{label}.lfm"))),
            Trained::Coupled(m) => m.save(dir.join(format!("{label}.cmf"))),
            Trained::Clusters(clusters) => {
                let mut text = String::new();
                for (id, g) in view.item_ids().iter().zip(clusters) {
                    text.push_str(&format!("{id}\t{g}\n"));
                }
                write(format!("{label}.clusters.tsv"), text)
            }
            Trained::Ensemble(cmf, tensor, _) => {
                cmf.save(dir.join(format!("{label}.cmf")))?;
                write(format!("{label}.cells.txt"), tensor.to_text())
            }
        }
    }

    fn predict(&self, view: &RatingMatrixView, u: usize, i: usize) -> Result<Prediction> {
        match self {
            Trained::Neighborhood(Side::User, cache, params) => predict_ubcf(view, cache, u, i, params),
            Trained::Neighborhood(Side::Item, cache, params) => predict_ibcf(view, cache, u, i, params),
            Trained::Factors(m) => Ok(factor_prediction(view, u, i, || m.predict_at(u, i))),
            Trained::Coupled(m) => Ok(factor_prediction(view, u, i, || m.predict_at(u, i))),
            Trained::Clusters(clusters) => Ok(crate::coupled::kmodes_predict_at(view, clusters, u, i)),
            Trained::Ensemble(cmf, tensor, weights) => Ok(factor_prediction(view, u, i, || {
                weights.combine(cmf, cmf.predict_at(u, i), tensor.global_mean() + tensor.bias_at(u, i))
            })),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub mae: f64,
    pub rmse: f64,
    pub predictions: usize,
    pub fallbacks: usize,
}

fn score(model: &Trained, view: &RatingMatrixView, ratings: &[Rating]) -> Result<Scores> {
    let mut pairs = Vec::with_capacity(ratings.len());
    let mut fallbacks = 0;
    for r in ratings {
        let u = view.position(Side::User, &r.user)?;
        let i = view.position(Side::Item, &r.item)?;
        let p = model.predict(view, u, i)?;
        fallbacks += p.fallback as usize;
        pairs.push((r.rating, p.value));
    }
    Ok(Scores {
        mae: mae(&pairs)?,
        rmse: rmse(&pairs)?,
        predictions: pairs.len(),
        fallbacks,
    })
}

fn params<T: Serialize>(point: &T) -> serde_json::Value {
    serde_json::to_value(point).expect("grid points serialise")
}

/// Grid points of one model spec, each expressed as provenance JSON.
enum Points {
    Neighborhood(Side, Vec<NeighborhoodParams>),
    Mf(Vec<crate::baseline::MfConfig>),
    Cmf(Vec<crate::coupled::CmfConfig>),
    Kmodes(Vec<KModesConfig>),
    Ensemble(Vec<EnsemblePoint>),
}

impl Points {
    fn of(spec: &ModelSpec) -> Result<Self> {
        Ok(match spec {
            ModelSpec::Ubcf(g) => Points::Neighborhood(Side::User, g.points()?),
            ModelSpec::Ibcf(g) => Points::Neighborhood(Side::Item, g.points()?),
            ModelSpec::Mf(g) => Points::Mf(g.points()?),
            ModelSpec::Cmf(g) => Points::Cmf(g.points()?),
            ModelSpec::Kmodes(g) => Points::Kmodes(g.points()?),
            ModelSpec::Ensemble(g) => Points::Ensemble(g.points()?),
        })
    }

    fn len(&self) -> usize {
        match self {
            Points::Neighborhood(_, p) => p.len(),
            Points::Mf(p) => p.len(),
            Points::Cmf(p) => p.len(),
            Points::Kmodes(p) => p.len(),
            Points::Ensemble(p) => p.len(),
        }
    }

    fn params(&self, k: usize) -> serde_json::Value {
        match self {
            Points::Neighborhood(_, p) => params(&p[k]),
            Points::Mf(p) => params(&p[k]),
            Points::Cmf(p) => params(&p[k]),
            Points::Kmodes(p) => params(&p[k]),
            Points::Ensemble(p) => params(&p[k]),
        }
    }
}

fn sorted_unique<T: PartialOrd + Copy>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    v.dedup();
    v
}

/// Shared state of one experiment. Artifacts that depend only on the
/// attribute tables are computed once, on first use.
struct Context<'a> {
    ds: &'a Dataset,
    split: Split,
    fit: RatingMatrixView,
    refit: RatingMatrixView,
    user_sims: OnceLock<std::result::Result<Arc<ObjectSimMatrix>, String>>,
    item_coupling: OnceLock<std::result::Result<Arc<CoupledSimilarity>, String>>,
    item_sims: OnceLock<std::result::Result<Arc<ObjectSimMatrix>, String>>,
    artifacts: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Stage {
    /// Train on the training part, score on validation.
    Select,
    /// Train on training plus validation, score on test.
    Final,
}

impl<'a> Context<'a> {
    fn view(&self, stage: Stage) -> &RatingMatrixView {
        match stage {
            Stage::Select => &self.fit,
            Stage::Final => &self.refit,
        }
    }

    fn training(&self, stage: Stage) -> Vec<Rating> {
        match stage {
            Stage::Select => self.split.train.clone(),
            Stage::Final => self.split.train_and_validation(),
        }
    }

    fn scored(&self, stage: Stage) -> &[Rating] {
        match stage {
            Stage::Select => &self.split.validation,
            Stage::Final => &self.split.test,
        }
    }

    fn user_sims(&self) -> Result<Arc<ObjectSimMatrix>> {
        self.user_sims
            .get_or_init(|| {
                let coupled = CoupledSimilarity::fit(&self.ds.users).map_err(|e| format!("user similarity: {e}"))?;
                coupled
                    .object_matrix(Side::User, &SimilarityOptions::default())
                    .map(Arc::new)
                    .map_err(|e| e.to_string())
            })
            .clone()
            .map_err(Error::Precondition)
    }

    fn item_coupling(&self) -> Result<Arc<CoupledSimilarity>> {
        self.item_coupling
            .get_or_init(|| {
                CoupledSimilarity::fit(&self.ds.items)
                    .map(Arc::new)
                    .map_err(|e| format!("item similarity: {e}"))
            })
            .clone()
            .map_err(Error::Precondition)
    }

    fn item_sims(&self) -> Result<Arc<ObjectSimMatrix>> {
        let coupling = self.item_coupling()?;
        self.item_sims
            .get_or_init(|| {
                coupling
                    .object_matrix(Side::Item, &SimilarityOptions::default())
                    .map(Arc::new)
                    .map_err(|e| e.to_string())
            })
            .clone()
            .map_err(Error::Precondition)
    }

    /// User and item graphs per neighbour count. Views of both stages share
    /// the dataset's id universe, so one graph serves both.
    fn graphs(&self, top_ms: Vec<usize>) -> Result<BTreeMap<usize, Arc<(CouplingGraph, CouplingGraph)>>> {
        let (users, items) = (self.user_sims()?, self.item_sims()?);
        sorted_unique(top_ms)
            .into_iter()
            .map(|m| {
                let pair = (
                    CouplingGraph::build(&self.fit, &users, m)?,
                    CouplingGraph::build(&self.fit, &items, m)?,
                );
                Ok((m, Arc::new(pair)))
            })
            .collect()
    }

    /// Trains the chosen points of a grid on one stage. The outer error means
    /// a shared artifact could not be built; inner errors are per point.
    fn train(&self, points: &Points, which: &[usize], stage: Stage) -> Result<Vec<Result<Trained>>> {
        let view = self.view(stage);
        Ok(match points {
            Points::Neighborhood(side, pts) => {
                let caches: BTreeMap<usize, Arc<PearsonCache>> =
                    sorted_unique(which.iter().map(|&k| pts[k].min_overlap).collect())
                        .into_iter()
                        .map(|o| (o, Arc::new(PearsonCache::build(view, *side, o))))
                        .collect();
                which
                    .iter()
                    .map(|&k| Ok(Trained::Neighborhood(*side, caches[&pts[k].min_overlap].clone(), pts[k])))
                    .collect()
            }
            Points::Mf(pts) => which
                .par_iter()
                .map(|&k| train_mf(view, &pts[k]).map(Trained::Factors))
                .collect(),
            Points::Cmf(pts) => {
                let graphs = self.graphs(which.iter().map(|&k| pts[k].top_m).collect())?;
                which
                    .par_iter()
                    .map(|&k| {
                        let g = &graphs[&pts[k].top_m];
                        train_cmf_with_graphs(view, &g.0, &g.1, &pts[k]).map(Trained::Coupled)
                    })
                    .collect()
            }
            Points::Kmodes(pts) => {
                let coupling = self.item_coupling()?;
                which
                    .par_iter()
                    .map(|&k| {
                        let clustering = kmodes_fit(&coupling, &pts[k])?;
                        clustering.align(view).map(Trained::Clusters)
                    })
                    .collect()
            }
            Points::Ensemble(pts) => {
                let graphs = self.graphs(which.iter().map(|&k| pts[k].cmf.top_m).collect())?;
                // distinct CMF configurations, trained once each
                let mut cmf_configs: Vec<crate::coupled::CmfConfig> = Vec::new();
                for &k in which {
                    if !cmf_configs.contains(&pts[k].cmf) {
                        cmf_configs.push(pts[k].cmf);
                    }
                }
                let models: Vec<Result<Arc<CmfModel>>> = cmf_configs
                    .par_iter()
                    .map(|c| {
                        let g = &graphs[&c.top_m];
                        train_cmf_with_graphs(view, &g.0, &g.1, c).map(Arc::new)
                    })
                    .collect();
                let training = self.training(stage);
                let mut tensors: Vec<(f64, Arc<CellCouplingTensor>)> = Vec::new();
                for tau in sorted_unique(which.iter().map(|&k| pts[k].tau).collect()) {
                    tensors.push((tau, Arc::new(build_cell_couplings(self.ds, &training, tau)?)));
                }
                which
                    .iter()
                    .map(|&k| {
                        let p = &pts[k];
                        let c = cmf_configs.iter().position(|c| *c == p.cmf).expect("collected");
                        let cmf = match &models[c] {
                            Ok(m) => m.clone(),
                            Err(e) => return Err(e.clone()),
                        };
                        let tensor = tensors.iter().find(|t| t.0 == p.tau).expect("built").1.clone();
                        Ok(Trained::Ensemble(cmf, tensor, p.weights))
                    })
                    .collect()
            }
        })
    }

    fn evaluate(&self, label: &str, spec: &ModelSpec) -> ModelRow {
        let mut row = ModelRow {
            model: label.to_owned(),
            kind: spec.kind().to_owned(),
            mae: None,
            rmse: None,
            predictions: 0,
            fallbacks: 0,
            selected: None,
            validation_mae: None,
            grid: Vec::new(),
            error: None,
        };
        if let Err(e) = self.evaluate_into(spec, &mut row) {
            log::warn!("model {label} failed: {e}");
            row.error = Some(e.to_string());
        }
        row
    }

    fn evaluate_into(&self, spec: &ModelSpec, row: &mut ModelRow) -> Result<()> {
        let points = Points::of(spec)?;
        let all: Vec<usize> = (0..points.len()).collect();
        let chosen = if points.len() == 1 {
            row.grid.push(GridEntry {
                params: points.params(0),
                validation_mae: None,
                error: None,
            });
            0
        } else {
            let trained = self.train(&points, &all, Stage::Select)?;
            let view = self.view(Stage::Select);
            let scores: Vec<Result<Scores>> = trained
                .par_iter()
                .map(|t| match t {
                    Ok(t) => score(t, view, self.scored(Stage::Select)),
                    Err(e) => Err(e.clone()),
                })
                .collect();
            drop(trained);
            let mut best: Option<(usize, f64)> = None;
            for (k, s) in scores.into_iter().enumerate() {
                let (validation_mae, error) = match s {
                    Ok(s) => (Some(s.mae), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                if let Some(m) = validation_mae {
                    if best.is_none_or(|b| m < b.1) {
                        best = Some((k, m));
                    }
                }
                row.grid.push(GridEntry {
                    params: points.params(k),
                    validation_mae,
                    error,
                });
            }
            let (k, m) = best.ok_or_else(|| {
                Error::Validation(format!(
                    "every grid point failed; first error: {}",
                    row.grid[0].error.as_deref().unwrap_or("unknown")
                ))
            })?;
            row.validation_mae = Some(m);
            k
        };
        row.selected = Some(points.params(chosen));
        let model = self
            .train(&points, &[chosen], Stage::Final)?
            .pop()
            .expect("one point")?;
        let s = score(&model, self.view(Stage::Final), self.scored(Stage::Final))?;
        if let Some(dir) = &self.artifacts {
            model.save(self.view(Stage::Final), dir, &row.model)?;
        }
        row.mae = Some(s.mae);
        row.rmse = Some(s.rmse);
        row.predictions = s.predictions;
        row.fallbacks = s.fallbacks;
        Ok(())
    }
}

/// Splits the ratings, grid-searches every model on the validation part and
/// reports test metrics of the refitted winners. A model that fails is
/// reported with its error; the others still run.
pub fn run_experiment(ds: &Dataset, models: &[(String, ModelSpec)], split: &SplitSpec) -> Result<EvalReport> {
    run_experiment_with_artifacts(ds, models, split, None)
}

/// As [`run_experiment`], also saving each refitted model into `artifacts`.
pub fn run_experiment_with_artifacts(
    ds: &Dataset,
    models: &[(String, ModelSpec)],
    split: &SplitSpec,
    artifacts: Option<&Path>,
) -> Result<EvalReport> {
    if models.is_empty() {
        return Err(Error::Config("no models to evaluate".into()));
    }
    for (label, spec) in models {
        let size = spec.size()?;
        if size > 1 && split.validation_fraction == 0.0 {
            return Err(Error::Config(format!(
                "model `{label}` has a grid of {size} points but the validation fraction is 0"
            )));
        }
    }
    let parts = split_ratings(&ds.ratings, split)?;
    if parts.test.is_empty() {
        return Err(Error::Validation("the split left no test ratings".into()));
    }
    if parts.validation.is_empty() && models.iter().any(|(_, s)| s.size().is_ok_and(|n| n > 1)) {
        return Err(Error::Validation("the split left no validation ratings".into()));
    }
    let ctx = Context {
        ds,
        fit: RatingMatrixView::for_dataset(ds, &parts.train)?,
        refit: RatingMatrixView::for_dataset(ds, &parts.train_and_validation())?,
        split: parts,
        user_sims: OnceLock::new(),
        item_coupling: OnceLock::new(),
        item_sims: OnceLock::new(),
        artifacts: artifacts.map(Path::to_path_buf),
    };
    let mut rows = Vec::with_capacity(models.len());
    let mut timings = BTreeMap::new();
    for (label, spec) in models {
        let start = Instant::now();
        rows.push(ctx.evaluate(label, spec));
        let secs = start.elapsed().as_secs_f64();
        log::info!("{label}: {secs:.1}s");
        timings.insert(label.clone(), secs);
    }
    Ok(EvalReport {
        dataset_digest: ds.digest()?,
        environment: ds.environment.clone(),
        split: *split,
        sizes: SplitSizes {
            train: ctx.split.train.len(),
            validation: ctx.split.validation.len(),
            test: ctx.split.test.len(),
        },
        protocol: PROTOCOL.into(),
        rows,
        timings,
    })
}
