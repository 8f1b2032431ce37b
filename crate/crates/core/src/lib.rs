//! Simulation laboratory for predicate singling-out (PSO) attacks.
//!
//! The crate models datasets drawn i.i.d. from a row distribution, mechanisms
//! that release information about them, and adversaries that try to emit a
//! predicate isolating exactly one row while keeping the predicate's weight
//! under the data distribution small. Success rates are estimated by seeded
//! Monte Carlo and compared to the analytic baseline `B(n, w) = n·w·(1−w)^(n−1)`.
//!
//! Module map:
//! - [`gf2`] and [`hash`]: GF(2^d) arithmetic and the affine hash family.
//! - [`domain`]: rows, datasets, distributions, predicates, weights, isolation.
//! - [`baseline`]: `B(n, w)` and the trivial hash adversary.
//! - [`mechanisms`] and [`adversaries`]: every release and attack construction.
//! - [`harness`]: experiment configs, the trial runner, reports and sweeps.

pub mod adversaries;
pub mod baseline;
pub mod domain;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod hash;
pub mod mechanisms;
pub mod rng;
mod serde_hex;
pub mod stats;

pub use error::{Error, Result};
