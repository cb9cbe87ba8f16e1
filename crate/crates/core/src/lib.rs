//! Performance analysis and exact simulation of saturated single-hop
//! CSMA/CA (802.11 DCF basic access) networks.
//!
//! The crate provides:
//!
//! - [`model`]: backoff schedules, PHY timing and report types.
//! - [`stationary`]: stationary distributions of finite Markov chains.
//! - [`sim`]: exact cycle-level simulators (with and without propagation
//!   delay), a slot-level reference stepper and unfairness diagnostics.
//! - [`bianchi`] and [`meanfield`]: the classical decoupling fixed point and
//!   the mean-field ODE baseline.
//! - [`mrp_zero`]: state-dependent attempt-rate analysis for zero
//!   propagation delay and any number of nodes.
//! - [`mrp_delay`]: the same analysis for two nodes and `m >= 0` slots of
//!   propagation delay.
//! - [`fairness`]: Jain index over frames and mean success-run length.
//! - [`optimize`]: slot-duration and `minBE` tuning.
//!
//! ```
//! use dcf_mrp::model::{BackoffSchedule, PhyTiming};
//! use dcf_mrp::mrp_zero::analyze_zero_delay;
//!
//! let schedule = BackoffSchedule::from_means(1, &[1.5, 32.5]).unwrap();
//! let report = analyze_zero_delay(&schedule, 2, &PhyTiming::default()).unwrap();
//! assert!(report.gamma > 0.0 && report.gamma < 1.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bianchi;
pub mod error;
pub mod fairness;
pub mod meanfield;
pub mod model;
pub mod mrp_delay;
pub mod mrp_zero;
pub mod optimize;
pub mod sim;
pub mod stationary;
mod util;

pub use error::{Error, Result};
