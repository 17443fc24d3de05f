//! Fairness-aware combinatorial double auction for multi-resource markets.
//!
//! Consumers bid for bundles of resource types, providers offer per-type
//! capacity, and each round a winner-determination problem picks the set of
//! consumers to serve. A per-consumer fairness factor, derived from recent
//! wins and losses, is added to each bid's value so that consumers on a long
//! losing streak are less likely to leave the market.
//!
//! Start with [`engine::run_simulation`] for multi-round experiments or
//! [`wdp::solve`] for a single winner-determination instance.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod fairness;
pub mod metrics;
pub mod model;
pub mod pricing;
pub mod scenario;
pub mod wdp;

pub use error::{Error, Result};
