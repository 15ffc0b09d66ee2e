//! Library side of `coulomb-lab`: configuration, command drivers, the
//! verification suites and output rendering.

// `!(x > 0.0)` guards are kept so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;
