//! Simulation laboratory for risk-sensitive demand-response pricing.
//!
//! A utility posts a uniform price for demand curtailment each day and
//! observes the aggregate reduction `D = a p + b + eps`, where the demand
//! parameters and the shock law are unknown. The crate provides:
//!
//! * [`demand_model`]: bounded shock laws, customer populations, cost sequences
//!   and the derived price bound;
//! * [`estimation`]: least-squares learning of the demand curve, box truncation
//!   and the residual-based empirical quantile;
//! * [`policy`]: oracle, myopic and perturbed-myopic pricing;
//! * [`harness`]: episodes, Monte Carlo replication, regret metrics and the
//!   executable bound checks;
//! * [`cli`]: configuration files, CSV artifacts and the `drlab` commands.

pub mod cli;
pub mod demand_model;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
