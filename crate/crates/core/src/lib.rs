//! Observer-based, self-triggered, adaptive neural platoon control.
//!
//! The crate simulates a leader and a string of followers. Each vehicle
//! estimates its state with a sampled-data Luenberger observer, compensates
//! unknown resistance and disturbance with a Gaussian RBF network, computes a
//! backstepping control law and only refreshes its applied input at instants
//! chosen by a self-triggered scheduler.
//!
//! Module map:
//!
//! * [`topology`]: leader/follower graph, Laplacian and pinning algebra.
//! * [`plant`]: ground-truth vehicle dynamics and RK4 integration.
//! * [`rbf`]: Gaussian RBF approximator with leakage-modified adaptation.
//! * [`observer`]: noisy zero-order-held sampling and the observer.
//! * [`controller`]: tracking errors, virtual control and the ideal law.
//! * [`trigger`]: next-instant rule, hold law and the Zeno bound.
//! * [`harness`]: scenario assembly, the simulation loop and metrics.
//! * [`config`], [`output`], [`cli`]: file formats and the command line.
//! * [`batch`]: independent runs, data-parallel when the `parallel`
//!   feature is enabled.

// `!(x > 0.0)` guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod batch;
pub mod cli;
pub mod config;
pub mod controller;
mod error;
pub mod harness;
mod integrate;
pub mod observer;
pub mod output;
pub mod plant;
pub mod rbf;
pub mod topology;
pub mod trigger;

pub use config::{load_config, parse_config, ScenarioConfig};
pub use error::{Error, Result};
pub use harness::{compute_metrics, run, Metrics, SimRecord};

/// Planar vector (longitudinal, lateral).
pub type Vec2 = nalgebra::Vector2<f64>;
