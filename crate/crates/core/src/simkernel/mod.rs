//! Similarity kernel over per-modality distances to a sample set.
//!
//! An instance `x` is linked to every sample `s_i` (and, in the class graph,
//! to every class representative `r_j`) through `K` distance functions. The
//! Fisher score of the resulting Gibbs density, normalized by the diagonal
//! Fisher information, is the column-standardized distance
//! `(E[dist] - dist(x, s)) / sd[dist]` with moments taken on training data.
//! The energy hyperparameters cancel out, so they only appear in the energy
//! functions.

mod energy;
mod features;
mod uniform;

pub use energy::{energy_class, energy_multiagent, energy_pairwise, gibbs_logdensity, Clique};
pub use features::{
    column_count, distance_row, distance_rows, fit_standardization, similarity_features, similarity_kernel_matrix,
    DistanceSpec, Graph, StandardizationStats,
};
pub use uniform::{uniform_representation, UniformNormalizer};
