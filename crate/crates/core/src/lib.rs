//! Online maximization of M♮-concave functions.
//!
//! - [`lattice`]: points, extended values, value oracles, feasible regions.
//! - [`valuations`]: concrete M♮-concave families and JSON instances.
//! - [`mchecker`]: brute-force exchange checks, local errors, reachable sets.
//! - [`greedy`]: greedy with erroneous updates and the robustness auditor.
//! - [`bandit`]: noisy oracles, MOSS, greedy-bandit and explore-then-commit.
//! - [`adversarial`]: matroid-distance sequences, MWU and greedy learners.

pub mod adversarial;
pub mod bandit;
pub mod error;
pub mod exec;
pub mod greedy;
pub mod lattice;
pub mod matroid;
pub mod mchecker;
pub mod rng;
pub mod valuations;

pub use error::{Error, Result};
pub use exec::Exec;
pub use lattice::{Direction, FeasibleRegion, Point, SharedValuation, Valuation, Value};
