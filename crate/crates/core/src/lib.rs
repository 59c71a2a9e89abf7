//! Phase-space simulation of Gaussian boson sampling networks.
//!
//! Squeezed inputs are sampled in the positive-P, Wigner or Q-function
//! representation, pushed through a linear (possibly lossy) network and
//! reduced to click-count distributions or quadrature statistics. Exact
//! Gaussian oracles are included for small systems.
//!
//! The crate is `no_std` with `alloc`. The `parallel` feature enables
//! rayon over sub-ensembles; results do not depend on thread count.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod clicks;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod network;
pub mod oracles;
pub mod phase_space;
pub mod quadrature;
pub mod rng;
pub mod simulation;
pub mod stats;

pub use clicks::{GroupPartition, GroupedDistribution};
pub use ensemble::{EnsembleSource, Layout};
pub use error::{Error, Result};
pub use network::TransmissionMatrix;
pub use phase_space::{Ordering, PhaseSpaceEnsemble, SqueezerSpec};
pub use simulation::Simulation;
pub use stats::{BinnedComparison, Estimate};
