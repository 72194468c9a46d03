//! Recommenders that use couplings beyond the rating matrix.

mod cells;
mod cmf;
mod ensemble;
mod kmodes;

pub use self::cells::{
    aggregate_cell_couplings, build_cell_couplings, predict_coupling_bias, AggregateMode, CellCouplingTensor,
    CellMatrix, CouplingStrength,
};
pub use self::cmf::{
    cmf_gradient, cmf_objective, predict_cmf, train_cmf, train_cmf_with_graphs, CmfConfig, CmfModel,
    CouplingGraph,
};
pub use self::ensemble::{predict_ensemble, EnsembleConfig};
pub use self::kmodes::{kmodes_fit, kmodes_predict, KModesClustering, KModesConfig};
pub(crate) use self::kmodes::predict_at as kmodes_predict_at;
