//! Construction, verification and classification of H-minimal surfaces in
//! the first Heisenberg group.
//!
//! The crate is organised bottom-up:
//!
//! * [`heis`]: the group law, dilations and the left-invariant frame.
//! * [`fields`]: planar scalar fields, grids, quadrature and RK4.
//! * [`surface`]: horizontal Gauss map, H-mean curvature, shape matrix and
//!   characteristic scans for graphs `t = h(x, y)` and level sets.
//! * [`seed`]: seed curves (integral curves of the projected Gauss map),
//!   signed curvature and the `(s, r)` chart of the plane.
//! * [`ruled`]: surfaces built from a seed curve and a height function,
//!   the angle function along rules, loci and the entire-graph classifier.
//! * [`gallery`]: closed-form reference surfaces with their known data.
//! * [`expr`]: a small expression language with symbolic differentiation.
//! * [`par`]: data-parallel helpers with a sequential fallback.

// `!(a <= b)` is used on purpose so that NaN fails the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod expr;
pub mod fields;
pub mod gallery;
pub mod heis;
pub mod par;
pub mod ruled;
pub mod seed;
pub mod surface;

pub use fields::Vec2;
pub use heis::HPoint;
