//! Covert multi-hop route planning over a wireless network observed by
//! collaborating wardens.
//!
//! The crate is `no_std` (with `alloc`) and contains only the pure math:
//!
//! - [`scenario`]: node/warden geometry, validation, seeded random placement.
//! - [`covertness`]: covertness budgets, per-link warden exposure, the
//!   quadratic relative-entropy bounds and exact Gaussian relative entropy.
//! - [`allocation`]: closed-form per-relay power allocation on a fixed path
//!   for the four regimes, plus a numerical optimizer used as an oracle.
//! - [`routing`]: regime-specific link costs, Dijkstra over the complete
//!   link graph, and an exhaustive path-enumeration oracle.
//!
//! Rates and powers are reported as coefficients of `1/sqrt(n)` and delays
//! as coefficients of `sqrt(n)`, where `n` is the codeword blocklength. A
//! concrete `n` is only needed to certify a plan against the exact
//! relative entropy.

#![no_std]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod allocation;
pub mod covertness;
mod rng;
pub mod routing;
pub mod scenario;

pub use allocation::{AllocError, Allocation, LinkProfile, Path, PathPlan, Regime};
pub use covertness::{BudgetError, CovertBudget, GaussianPair, LinkExposure};
pub use routing::{CostedGraph, RouteError, RouteResult};
pub use scenario::{NodeId, Point, RandomScenario, Scenario, ScenarioError, SystemNode, Warden};
