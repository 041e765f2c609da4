//! The first Heisenberg group as `R^3` with the law
//! `(x, y, t) o (x', y', t') = (x + x', y + y', t + t' - (x' y - x y') / 2)`.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// A point `(x, y, t)` of the group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl HPoint {
    pub const ORIGIN: HPoint = HPoint { x: 0.0, y: 0.0, t: 0.0 };

    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.t.is_finite()
    }

    /// Group product `self o other`.
    pub fn mul(&self, other: &HPoint) -> HPoint {
        group_mul(*self, *other)
    }

    pub fn inv(&self) -> HPoint {
        group_inv(*self)
    }

    pub fn dilate(&self, lambda: f64) -> HPoint {
        dilate(lambda, *self)
    }

    /// Rotation about the `t`-axis; an automorphism of the group.
    pub fn rotate(&self, theta: f64) -> HPoint {
        let (s, c) = theta.sin_cos();
        HPoint::new(c * self.x - s * self.y, s * self.x + c * self.y, self.t)
    }

    /// Euclidean distance in `R^3`. Used only for comparing point sets.
    pub fn euclid_dist(&self, other: &HPoint) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.t - other.t).powi(2)).sqrt()
    }
}

impl Mul for HPoint {
    type Output = HPoint;

    fn mul(self, rhs: HPoint) -> HPoint {
        group_mul(self, rhs)
    }
}

pub fn group_mul(g: HPoint, h: HPoint) -> HPoint {
    HPoint { x: g.x + h.x, y: g.y + h.y, t: g.t + h.t - 0.5 * (h.x * g.y - g.x * h.y) }
}

pub fn group_inv(g: HPoint) -> HPoint {
    HPoint::new(-g.x, -g.y, -g.t)
}

/// Anisotropic dilation `(x, y, t) -> (l x, l y, l^2 t)`.
pub fn dilate(lambda: f64, g: HPoint) -> HPoint {
    HPoint::new(lambda * g.x, lambda * g.y, lambda * lambda * g.t)
}

/// Coefficients of a tangent vector in the left-invariant frame `{X1, X2, T}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameVector {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FrameVector {
    pub fn is_horizontal(&self, tol: f64) -> bool {
        self.c.abs() <= tol
    }
}

/// Converts Cartesian components `(a, b, c)` of a vector based at `at` into
/// frame coefficients. `X1 = d/dx - (y/2) d/dt`, `X2 = d/dy + (x/2) d/dt`.
pub fn frame_from_cartesian(v: [f64; 3], at: HPoint) -> FrameVector {
    let [a, b, c] = v;
    FrameVector { a, b, c: c + 0.5 * a * at.y - 0.5 * b * at.x }
}

pub fn frame_to_cartesian(f: FrameVector, at: HPoint) -> [f64; 3] {
    [f.a, f.b, f.c - 0.5 * f.a * at.y + 0.5 * f.b * at.x]
}
