//! Joint restoration scheduling of separable mobile storage, mobile
//! generators and fuel tankers with dynamic network reconfiguration.
//!
//! The pipeline is [`scenario::parse_scenario`] → [`assembly::assemble`] →
//! [`solver::solve`] → [`validate::check_schedule`].

pub mod assembly;
pub mod cli;
pub mod error;
pub mod fleet;
pub mod grid;
pub mod milp;
pub mod scenario;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
