//! Pinning a coupled ODE network to a target trajectory with a single controller.
//!
//! The crate has two halves. [`conditions`] evaluates sufficient conditions
//! (negativity of the pinned coupling spectrum, QUAD certificates, coupling
//! strength bounds, reducible-graph pinnability). [`simulate`] integrates the
//! controlled network and measures how fast it synchronizes and pins.
//! [`scenario`] and [`report`] wire both into the `pinning` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod conditions;
pub mod error;
pub mod linalg;
pub mod model;
pub mod random;
pub mod report;
pub mod scenario;
pub mod simulate;

pub use error::{Error, Result};
