//! Desk-scale simulator of a PLC-orchestrated bin-picking cell.

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bbox;
pub mod bus;
pub mod camera;
pub mod canonical;
pub mod controller;
pub mod depth;
pub mod gripper;
pub mod harness;
pub mod hmi;
pub mod perception;
pub mod rng;
pub mod scene;
