//! Coupled (non-IID) recommendation over the four-table view of a rating problem.
//!
//! The crate is organised the way data flows through an experiment:
//!
//! - [`store`] ingests ratings plus user and item attribute tables.
//! - [`similarity`] learns coupled attribute-value and object similarities
//!   within the user table and within the item table.
//! - [`baseline`] holds the IID baselines: Pearson neighbourhood CF and plain
//!   latent-factor MF.
//! - [`coupled`] holds the coupled recommenders: similarity-regularised MF,
//!   coupled K-modes, the user-attribute x item-attribute cell couplings and
//!   the ensemble that combines them.
//! - [`eval`] splits data, scores predictions and runs grid-searched
//!   model comparisons.

pub mod baseline;
mod codec;
pub mod coupled;
pub mod error;
pub mod eval;
pub mod similarity;
pub mod store;

pub use error::{Error, Result};
