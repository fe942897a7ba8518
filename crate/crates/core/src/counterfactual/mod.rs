//! Counterfactual behavior generation: lattice search plus realization of
//! the chosen clusters as a concrete trajectory.

mod realize;
mod search;

pub use realize::{realize_centroids, realize_trajectory, RealizedTrajectory, WorldPose};
pub use search::{
    neighbors, neighbors_ordered, search, search_from_sample, CounterfactualSolution, Phase, SearchConfig,
    SearchOutcome, DEFAULT_EPSILON, DEFAULT_MIN_COUNT,
};
