//! Scenario files, Monte Carlo sweeps, oracle suites and the command-line
//! front end for covert multi-hop routing.
//!
//! The planning itself lives in [`covert_route_core`].

pub mod cli;
pub mod harness;
pub mod scenario_file;
pub mod verify;
