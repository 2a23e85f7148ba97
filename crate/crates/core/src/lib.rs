//! The m-neighbourhood evaporation-deposition probabilistic cellular
//! automaton on a ring of `n` sites.
//!
//! At every step each site looks at the window of `m` sites starting at
//! itself (wrapping around the ring) and, simultaneously for all sites:
//!
//! * a window `0^m` deposits a particle with probability `p1`,
//! * a window `0^{m-1}1` deposits a particle with probability `1 - p2`,
//! * any other window leaves the site empty.
//!
//! The crate provides
//!
//! * [`model`]: configurations, the local update law and exact transition
//!   probabilities, plus a scalar reference sampler;
//! * [`kernel`]: a bit-parallel step kernel that is stream-compatible with
//!   the scalar sampler;
//! * [`exact`]: a brute-force transition-matrix oracle (float or exact
//!   rational arithmetic);
//! * [`closed_forms`]: product-form stationary weights, the partition
//!   function and the site density;
//! * [`m2`]: recurrence, generating functions, free energy and pole
//!   asymptotics for the two-site neighbourhood;
//! * [`montecarlo`]: seeded multi-chain simulation;
//! * [`verify`]: the end-to-end verification suite used by `nedpca verify`.

pub mod closed_forms;
pub mod error;
pub mod exact;
pub mod kernel;
pub mod m2;
pub mod model;
pub mod montecarlo;
mod par;
pub mod rng;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Configuration, ModelParams, PatternCounts, SiteWindow};
pub use rng::ChainRng;
pub use scalar::Scalar;
