//! Budget-feasible procurement mechanisms for multi-unit reverse auctions.
//!
//! A buyer with budget `B` purchases indivisible units from `m` sellers, each
//! holding `n_i` units at a private per-unit cost `c_i`. This crate provides
//! exact-arithmetic models of such games, several universally truthful
//! mechanisms, non-strategic benchmark optima, and a verification harness that
//! checks truthfulness, individual rationality, budget-feasibility and
//! approximation ratios by exhaustive scenario enumeration.
//!
//! Module map:
//!
//! - [`model`]: instances, allocations, outcomes and utilities.
//! - [`valuation`]: valuation families, value/demand oracles, class membership.
//! - [`oracles`]: exact optima and adversarial instance families.
//! - [`mech_additive`]: the greedy value-rate mechanism and its thresholds,
//!   plus the symmetric-valuation variant.
//! - [`mech_single_item`]: the best-single-seller mechanism.
//! - [`mech_subadditive`]: demand-oracle approximation, random sampling and the
//!   combined mechanism for sub-additive valuations.
//! - [`verify`]: scenario enumeration and the property harness.
//! - [`io`], [`generate`], [`report`]: instance files, seeded generators and
//!   report serialization.

pub mod error;
pub mod generate;
pub mod io;
pub mod mech_additive;
pub mod mech_single_item;
pub mod mech_subadditive;
pub mod model;
pub mod oracles;
pub mod rational;
pub mod report;
pub mod valuation;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Allocation, Instance, Outcome, Seller};
pub use rational::Rational;
pub use valuation::{Valuation, ValuationClass};
pub use verify::{Branch, MechanismId, Scenario};
