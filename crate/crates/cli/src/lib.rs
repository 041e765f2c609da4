//! Library side of the `hmin` command: spec loading, the six commands,
//! CSV tables, OBJ meshes and reports.

// `!(a <= b)` is used on purpose so that NaN fails the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod mesh;
pub mod report;
pub mod spec;
pub mod tables;
