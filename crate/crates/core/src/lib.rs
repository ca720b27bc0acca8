//! Cell-free UAV downlink simulator with closed-form SINR outage evaluation.
//!
//! The crate models `K` fixed radio units (ORUs) with planar antenna arrays
//! serving up to `N_max` aerial users. Each environment step takes a power
//! allocation, derives serving clusters, evaluates the exact per-user outage
//! probability under Rayleigh fading, and scores the step with a weighted
//! reward over cluster stability, reliability violations and transmit power.
//!
//! The environment is exposed to external agents through a newline-delimited
//! JSON protocol (see [`protocol`]) and driven by the baseline policies in
//! [`baselines`] through the metric pipeline in [`metrics`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antenna;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod environment;
mod error;
pub mod geometry;
pub mod matrix;
pub mod metrics;
pub mod mobility;
pub mod outage;
pub mod protocol;
pub mod rng;
pub mod validate;

pub use config::{load_config, ReliabilityZone, ScenarioConfig};
pub use environment::{Environment, NetworkState, Observation, PowerAllocation, StepOutcome};
pub use error::{ConfigError, Error, Result};
pub use rng::{RandomSource, Stream};
