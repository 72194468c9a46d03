//! Splitting, scoring and grid-searched model comparison.

mod experiment;
mod grid;
mod metrics;
mod report;
mod split;

pub use self::experiment::{run_experiment, run_experiment_with_artifacts, Scores};
pub use self::grid::{
    CmfGrid, EnsembleGrid, EnsemblePoint, Grid, KModesGrid, MfGrid, ModelSpec, NeighborhoodGrid,
};
pub use self::metrics::{mae, rmse};
pub use self::report::{
    ranked, render_delimited, render_table, EvalReport, GridEntry, Improvement, ModelRow, SplitSizes,
};
pub use self::split::{split_ratings, Split, SplitSpec, Stratification};
