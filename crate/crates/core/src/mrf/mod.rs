//! Bipartite spin models: energies, conditionals, closed-form marginals and
//! exact partition functions for small instances.

mod grid;
mod model;
mod partition;
mod spin;

pub use grid::{grid_ising_as_bipartite, grid_site_map, split_grid_state, GridCouplings};
pub use model::BipartiteModel;
pub use partition::{
    exact_log_z, exact_log_z_enumerating, exact_log_z_with_cap, DEFAULT_ENUMERATION_CAP,
};
pub use spin::{Layer, SpinState};

pub(crate) use model::dot_spins;
pub(crate) use spin::index_to_spins;
