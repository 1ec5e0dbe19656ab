//! Free-energy estimation for bipartite spin models by annealed importance
//! sampling (AIS) and its marginalized variant (mAIS), which sums one layer
//! out analytically and anneals only the other.
//!
//! The crate also carries an exact small-instance oracle: transfer-matrix
//! moments of both estimators and enumeration checks of the identities that
//! relate them.

pub mod annealing;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod kernels;
pub mod logspace;
pub mod mrf;
pub mod oracle;
pub mod rng;

pub use annealing::Schedule;
pub use error::{Error, Result};
pub use estimators::{Method, RunConfig, RunResult};
pub use kernels::{KernelFamily, KernelSpec};
pub use mrf::{BipartiteModel, Layer, SpinState};
pub use rng::RngStream;
