//! IID baselines: Pearson neighbourhood collaborative filtering (user- and
//! item-based) and latent-factor matrix factorisation trained by SGD.

mod mf;
mod neighborhood;
mod pearson;
mod view;

pub use self::mf::{
    mf_gradient, mf_objective, predict_mf, train_mf, LatentFactorModel, MfConfig,
};
pub(crate) use self::mf::{gradient, objective, train_factors, Penalty};
pub use self::neighborhood::{
    predict_ibcf, predict_ubcf, weighted_deviation, NeighborhoodParams, Prediction,
};
pub use self::pearson::{pearson_weight, PearsonCache};
pub use self::view::RatingMatrixView;
