//! One-hop observability resilience for heterogeneous robot teams that
//! monitor a drone swarm.
//!
//! Robots carry subsets of sensing resources and share measurements with
//! their Δ-disk neighbours. When a resource fails, the team searches for a
//! nearby communication graph under which every robot can again estimate the
//! full swarm state from its one-hop neighbourhood, then a barrier controller
//! moves the robots until that graph is realised.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod controller;
pub mod error;
pub mod estimator;
pub mod gramian;
pub mod graph;
pub mod linalg;
pub mod process;
pub mod reconfig;
pub mod scenario;
pub mod sensing;

pub use error::{Error, Result};
