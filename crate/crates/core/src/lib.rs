//! Mechanics of a two-tube tendon-driven continuum robot: a notched outer
//! tube bent by one tendon, sheathing an inner robot bent by an antagonistic
//! tendon pair.
//!
//! Units throughout are millimetres, newtons and megapascals.

// Guards are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod coupled;
pub mod geometry;
pub mod output;
pub mod rod;
pub mod shooting;
pub mod tendon;
pub mod validation;
