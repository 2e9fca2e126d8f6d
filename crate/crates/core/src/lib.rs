//! Single-cell D2D caching network simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bs_schemes;
pub mod channel;
pub mod content;
pub mod d2d_sim;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod scaling_laws;

pub use error::{Error, Result};
