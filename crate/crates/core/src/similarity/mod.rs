//! Coupled similarity within one attribute table: frequency-based
//! intra-attribute value similarity, co-occurrence-based inter-attribute value
//! similarity, their product per attribute, and the object-level average.

mod index;
mod matrix;
mod value;

pub use self::index::{build_indices, CodedTable, CooccurrenceIndex, ValueFrequencyIndex};
pub use self::matrix::{build_object_sim_matrix, ObjectSimMatrix, SimilarityOptions};
pub use self::value::{
    coupled_object_sim, coupled_value_sim, inter_value_sim, intra_value_sim, AttrValueSimMatrix,
    CoupledSimilarity,
};
