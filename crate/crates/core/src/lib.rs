//! Best-choice stopping on the k-th power of a directed path.
//!
//! Vertices of `P_n^k` arrive in uniformly random order and the selector sees
//! the induced subgraph together with the distance label of every induced
//! edge. The goal is to stop on the unique sink. This crate provides:
//!
//! - [`graph`]: the path power itself,
//! - [`observer`]: the selector-legal view of the arrivals,
//! - [`strategy`]: the optimal rule `tau_n`, the randomised `tau_p_star` and baselines,
//! - [`exact`]: the closed-form success probability in exact rationals,
//! - [`bounds`]: Gamma-ratio upper bound and the `tau_p_star` lower bound,
//! - [`oracle`]: exhaustive enumeration and the information-state dynamic program,
//! - [`sim`]: reproducible Monte Carlo estimation.

pub mod bounds;
pub mod error;
pub mod exact;
pub mod graph;
pub mod observer;
pub mod oracle;
pub mod sim;
pub mod strategy;

pub use error::{Error, Result};
pub use graph::PathPower;
pub use observer::{ObservationEvent, Observer};
pub use strategy::{run_strategy, StopRecord, Strategy, StrategyKind};
