//! Seed curves: arclength integral curves of the projected horizontal Gauss
//! map, their signed curvature, and the `(s, r)` chart
//! `F(s, r) = gamma(s) + r gamma'(s)^perp` with `z^perp = (z2, -z1)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{adaptive_simpson, rk4_integrate, FieldError, ScalarField1, StopReason, Vec2};
use crate::surface::{GraphPatch, Sheet, SurfaceError};

/// Below this `|kappa|` a seed is treated as straight.
pub const DEFAULT_EPS_KAPPA: f64 = 1e-8;

const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeedError {
    #[error("arclength {s} outside the seed range [{min}, {max}]")]
    OutOfRange { s: f64, min: f64, max: f64 },
    #[error("start point ({x}, {y}) is characteristic: W = {w:e}")]
    CharacteristicStart { x: f64, y: f64, w: f64 },
    #[error("arc span and step must be positive, got span {span} step {step}")]
    InvalidSpan { span: f64, step: f64 },
    #[error("bad seed samples: {0}")]
    BadSamples(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Position, unit tangent and acceleration at one arclength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveJet {
    pub pos: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
}

impl CurveJet {
    /// `gamma1'' gamma2' - gamma2'' gamma1'`.
    pub fn kappa(&self) -> f64 {
        self.d2.x * self.d1.y - self.d2.y * self.d1.x
    }
}

type JetFn = Arc<dyn Fn(f64) -> CurveJet + Send + Sync>;

/// Where a seed came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Extracted {
        forward: StopReason,
        backward: StopReason,
    },
    ClosedForm(String),
    /// Read from a table of samples.
    Samples(String),
}

#[derive(Clone)]
enum Repr {
    Analytic(JetFn),
    Sampled(Arc<Samples>),
}

/// Samples on a uniform arclength lattice.
#[derive(Clone)]
struct Samples {
    s0: f64,
    ds: f64,
    jets: Vec<CurveJet>,
    /// Recomputes the jet from the defining field at an interpolated
    /// position; `None` falls back to Hermite derivatives.
    refine: Option<JetRefine>,
}

type JetRefine = Arc<dyn Fn(Vec2) -> Option<CurveJet> + Send + Sync>;

impl Samples {
    fn interpolate(&self, s: f64) -> CurveJet {
        let n = self.jets.len();
        let u = ((s - self.s0) / self.ds).clamp(0.0, (n - 1) as f64);
        let k = (u.floor() as usize).min(n - 2);
        let t = u - k as f64;
        let (a, b) = (&self.jets[k], &self.jets[k + 1]);
        let h = self.ds;
        let h00 = 2.0 * t.powi(3) - 3.0 * t * t + 1.0;
        let h10 = t.powi(3) - 2.0 * t * t + t;
        let h01 = -2.0 * t.powi(3) + 3.0 * t * t;
        let h11 = t.powi(3) - t * t;
        let pos = a.pos * h00 + a.d1 * (h * h10) + b.pos * h01 + b.d1 * (h * h11);
        if t > 0.0 {
            if let Some(j) = self.refine.as_ref().and_then(|f| f(pos)) {
                return j;
            }
        }
        let d1 = a.d1 * h00 + a.d2 * (h * h10) + b.d1 * h01 + b.d2 * (h * h11);
        let d00 = 6.0 * t * t - 6.0 * t;
        let d10 = 3.0 * t * t - 4.0 * t + 1.0;
        let d01 = -6.0 * t * t + 6.0 * t;
        let d11 = 3.0 * t * t - 2.0 * t;
        let d2 = (a.d1 * d00 + a.d2 * (h * d10) + b.d1 * d01 + b.d2 * (h * d11)) * (1.0 / h);
        CurveJet { pos, d1, d2 }
    }
}

/// An arclength-parameterized planar curve on `[s_min, s_max]`.
#[derive(Clone)]
pub struct SeedCurve {
    repr: Repr,
    pub s_min: f64,
    pub s_max: f64,
    pub provenance: Provenance,
}

impl fmt::Debug for SeedCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Analytic(_) => "analytic".to_string(),
            Repr::Sampled(s) => format!("{} samples", s.jets.len()),
        };
        f.debug_struct("SeedCurve").field("range", &(self.s_min, self.s_max)).field("repr", &kind).field("provenance", &self.provenance).finish()
    }
}

impl SeedCurve {
    /// Curve from a closed-form jet.
    pub fn analytic(s_min: f64, s_max: f64, label: impl Into<String>, jet: impl Fn(f64) -> CurveJet + Send + Sync + 'static) -> Self {
        Self { repr: Repr::Analytic(Arc::new(jet)), s_min, s_max, provenance: Provenance::ClosedForm(label.into()) }
    }

    /// Curve of constant signed curvature through `z0` with unit tangent at
    /// angle `theta0`; a circle or, for `kappa = 0`, a line.
    pub fn constant_curvature(z0: Vec2, theta0: f64, kappa: f64, s_min: f64, s_max: f64) -> Self {
        let label = if kappa == 0.0 { "line" } else { "circle" };
        Self::analytic(s_min, s_max, label, move |s| {
            // The tangent angle decreases at rate kappa under z^perp = (z2, -z1).
            let th = theta0 - kappa * s;
            let d1 = Vec2::new(th.cos(), th.sin());
            let pos = if kappa == 0.0 { z0 + d1 * s } else { z0 + Vec2::new(th.sin() - theta0.sin(), theta0.cos() - th.cos()) * (-1.0 / kappa) };
            CurveJet { pos, d1, d2: d1.perp() * kappa }
        })
    }

    /// Integral curve through `z0 != 0` of the counter-clockwise unit
    /// rotation field `(-y, x) / |z|`, the seed of the plane `t = 0`.
    pub fn rotation_circle(z0: Vec2, s_min: f64, s_max: f64) -> Self {
        let r = z0.norm();
        let theta0 = z0.y.atan2(z0.x) + std::f64::consts::FRAC_PI_2;
        Self::constant_curvature(z0, theta0, -1.0 / r, s_min, s_max)
    }

    /// The straight seed `s -> z0 + s dir`.
    pub fn line(z0: Vec2, dir: Vec2, s_min: f64, s_max: f64) -> Self {
        let d = dir.normalized().expect("nonzero direction");
        Self::constant_curvature(z0, d.y.atan2(d.x), 0.0, s_min, s_max)
    }

    /// Circle with `gamma(0) = 0`, `gamma'(0) = (0, 1)` and curvature `k0`.
    pub fn normalized_circle(k0: f64, s_min: f64, s_max: f64) -> Self {
        Self::constant_curvature(Vec2::ZERO, std::f64::consts::FRAC_PI_2, k0, s_min, s_max)
    }

    /// Curve with tangent `(cos psi, sin psi)` where `psi` is the turning
    /// angle, starting at `z0` when `s = anchor`. Positions are cumulative
    /// adaptive Simpson integrals over fixed panels plus one partial panel,
    /// so nearby parameters share almost all quadrature work.
    pub fn from_turning_angle(z0: Vec2, anchor: f64, psi: ScalarField1, s_min: f64, s_max: f64, label: impl Into<String>) -> Self {
        const PANELS_PER_UNIT: f64 = 64.0;
        const TOL: f64 = 1e-15;
        let tangent = |psi: &ScalarField1, a: f64, b: f64| {
            Vec2::new(adaptive_simpson(|u| psi.value(u).cos(), a, b, TOL), adaptive_simpson(|u| psi.value(u).sin(), a, b, TOL))
        };
        let n = ((s_max - s_min) * PANELS_PER_UNIT).ceil().max(1.0) as usize;
        let ds = (s_max - s_min) / n as f64;
        let mut table = Vec::with_capacity(n + 1);
        table.push(Vec2::ZERO);
        for k in 0..n {
            let a = s_min + k as f64 * ds;
            let next = table[k] + tangent(&psi, a, a + ds);
            table.push(next);
        }
        let integral = move |psi: &ScalarField1, s: f64| {
            let k = (((s - s_min) / ds).floor().max(0.0) as usize).min(n);
            let sk = s_min + k as f64 * ds;
            table[k] + tangent(psi, sk, s)
        };
        let offset = z0 - integral(&psi, anchor);
        Self::analytic(s_min, s_max, label, move |s| {
            let th = psi.value(s);
            let w = psi.d1(s);
            let d1 = Vec2::new(th.cos(), th.sin());
            CurveJet { pos: offset + integral(&psi, s), d1, d2: Vec2::new(-d1.y, d1.x) * w }
        })
    }

    /// Closed-form seed of a sheet of the minimal rotation surface
    /// `t = u0 +- (2/a) sqrt(a |z|^2 / 4 - 1)` through `z0`.
    /// `|gamma|^2` moves linearly at rate `4 / sqrt(a)`: inwards on the upper
    /// sheet, outwards on the lower one.
    pub fn catenoid(a: f64, sheet: Sheet, z0: Vec2, s_min: f64, s_max: f64) -> Self {
        let sg = sheet.sign();
        let rho0sq = z0.norm2();
        let th0 = z0.y.atan2(z0.x);
        let v_of = move |rho2: f64| (a * rho2 / 4.0 - 1.0).max(0.0).sqrt();
        let phase = |v: f64| v - v.atan();
        let v0 = v_of(rho0sq);
        let sqa = a.sqrt();
        Self::analytic(s_min, s_max, format!("rotation-surface seed a={a}"), move |s| {
            let rho2 = rho0sq - sg * 4.0 / sqa * s;
            let rho = rho2.sqrt();
            let v = v_of(rho2);
            let th = th0 - sg * (phase(v) - phase(v0));
            let er = Vec2::new(th.cos(), th.sin());
            let et = Vec2::new(-th.sin(), th.cos());
            let c = 1.0 / (1.0 + v * v).sqrt();
            let d1 = (er * (-sg) + et * v) * c;
            let dv = -sg * sqa / (2.0 * v);
            let dth = sqa * v / (2.0 * (1.0 + v * v));
            let dc = -v * dv * c * c * c;
            let d2 = (er * (-sg) + et * v) * dc + (et * (-sg * dth) + et * dv - er * (v * dth)) * c;
            CurveJet { pos: er * rho, d1, d2 }
        })
    }

    /// Uniformly sampled curve, interpolated by cubic Hermite pieces. With
    /// `refine`, derivatives between nodes come from the field instead.
    fn sampled(s0: f64, ds: f64, jets: Vec<CurveJet>, refine: Option<JetRefine>, provenance: Provenance) -> Self {
        let s_max = s0 + ds * (jets.len() - 1) as f64;
        Self { repr: Repr::Sampled(Arc::new(Samples { s0, ds, jets, refine })), s_min: s0, s_max, provenance }
    }

    /// Curve through tabulated jets on a uniform arclength lattice starting
    /// at `s0` with spacing `ds`. Tangents must be unit length.
    pub fn from_samples(s0: f64, ds: f64, jets: Vec<CurveJet>, label: impl Into<String>) -> Result<Self, SeedError> {
        if jets.len() < 2 {
            return Err(SeedError::BadSamples(format!("need at least 2 samples, got {}", jets.len())));
        }
        if !(ds > 0.0 && ds.is_finite() && s0.is_finite()) {
            return Err(SeedError::BadSamples(format!("spacing must be positive, got {ds}")));
        }
        if let Some((k, j)) = jets.iter().enumerate().find(|(_, j)| !((j.d1.norm() - 1.0).abs() <= 1e-6 && j.pos.is_finite() && j.d2.is_finite())) {
            return Err(SeedError::BadSamples(format!("sample {k} has |tangent| = {} or a non-finite entry", j.d1.norm())));
        }
        Ok(Self::sampled(s0, ds, jets, None, Provenance::Samples(label.into())))
    }

    /// The same curve moved by the rotation `theta` then the translation `shift`.
    pub fn rigid_motion(&self, theta: f64, shift: Vec2) -> Self {
        let base = self.clone();
        let mut out = Self::analytic(self.s_min, self.s_max, "", move |s| {
            let j = base.jet_clamped(s);
            CurveJet { pos: j.pos.rotate(theta) + shift, d1: j.d1.rotate(theta), d2: j.d2.rotate(theta) }
        });
        out.provenance = self.provenance.clone();
        out
    }

    /// Restriction to a sub-interval.
    pub fn restricted(&self, s_min: f64, s_max: f64) -> Self {
        let mut c = self.clone();
        c.s_min = s_min.max(self.s_min);
        c.s_max = s_max.min(self.s_max);
        c
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.s_min - RANGE_SLACK && s <= self.s_max + RANGE_SLACK
    }

    fn jet_clamped(&self, s: f64) -> CurveJet {
        match &self.repr {
            Repr::Analytic(f) => f(s),
            Repr::Sampled(smp) => smp.interpolate(s),
        }
    }

    pub fn jet(&self, s: f64) -> Result<CurveJet, SeedError> {
        if !self.contains(s) {
            return Err(SeedError::OutOfRange { s, min: self.s_min, max: self.s_max });
        }
        Ok(self.jet_clamped(s))
    }

    pub fn point(&self, s: f64) -> Result<Vec2, SeedError> {
        Ok(self.jet(s)?.pos)
    }

    /// Sample arclengths: `n` evenly spaced values over the range.
    pub fn sample_params(&self, n: usize) -> Vec<f64> {
        if n < 2 {
            return vec![self.s_min];
        }
        (0..n).map(|k| self.s_min + (self.s_max - self.s_min) * k as f64 / (n - 1) as f64).collect()
    }

    /// Stored samples, if the curve is sampled.
    pub fn samples(&self) -> Option<Vec<(f64, CurveJet)>> {
        match &self.repr {
            Repr::Sampled(smp) => Some(smp.jets.iter().enumerate().map(|(k, j)| (smp.s0 + smp.ds * k as f64, *j)).collect()),
            Repr::Analytic(_) => None,
        }
    }
}

/// Signed curvature at `s`.
pub fn curvature(c: &SeedCurve, s: f64) -> Result<f64, SeedError> {
    Ok(c.jet(s)?.kappa())
}

/// `F(s, r) = (gamma1 + r gamma2', gamma2 - r gamma1')`.
pub fn f_map(c: &SeedCurve, s: f64, r: f64) -> Result<Vec2, SeedError> {
    let j = c.jet(s)?;
    Ok(j.pos + j.d1.perp() * r)
}

/// `det DF(s, r) = -1 + r kappa(s)`.
pub fn f_jacobian_det(c: &SeedCurve, s: f64, r: f64) -> Result<f64, SeedError> {
    Ok(-1.0 + r * curvature(c, s)?)
}

/// Determinant of the central-difference Jacobian of [`f_map`].
pub fn f_jacobian_det_fd(c: &SeedCurve, s: f64, r: f64, h: f64) -> Result<f64, SeedError> {
    let fs = (f_map(c, s + h, r)? - f_map(c, s - h, r)?) * (0.5 / h);
    let fr = (f_map(c, s, r + h)? - f_map(c, s, r - h)?) * (0.5 / h);
    Ok(fs.cross(fr))
}

/// Solves `F(s, r) = z` by Newton iteration from `(s0, r0)`.
pub fn f_inverse(c: &SeedCurve, z: Vec2, s0: f64, r0: f64) -> Option<(f64, f64)> {
    let (mut s, mut r) = (s0, r0);
    for _ in 0..50 {
        let j = c.jet(s).ok()?;
        let f = j.pos + j.d1.perp() * r - z;
        if f.norm() < 1e-14 * (1.0 + z.norm()) {
            return Some((s, r));
        }
        let fs = j.d1 + j.d2.perp() * r;
        let fr = j.d1.perp();
        let det = fs.cross(fr);
        if det.abs() < 1e-12 {
            return None;
        }
        // Solve [fs fr] (ds, dr) = f.
        let ds = f.cross(fr) / det;
        let dr = fs.cross(f) / det;
        s -= ds;
        r -= dr;
    }
    let f = f_map(c, s, r).ok()? - z;
    (f.norm() < 1e-10 * (1.0 + z.norm())).then_some((s, r))
}

/// The fold `r = 1 / kappa(s)` of the chart, sampled where `|kappa| > eps_kappa`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SingularLocus {
    pub branches: Vec<Vec<(f64, f64)>>,
}

impl SingularLocus {
    pub fn is_empty(&self) -> bool {
        self.branches.iter().all(|b| b.is_empty())
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.branches.iter().flatten().copied()
    }
}

pub fn singular_locus(c: &SeedCurve, eps_kappa: f64, samples: usize) -> SingularLocus {
    let mut branches = Vec::new();
    let mut cur: Vec<(f64, f64)> = Vec::new();
    for s in c.sample_params(samples) {
        let k = c.jet_clamped(s).kappa();
        if k.abs() > eps_kappa {
            cur.push((s, 1.0 / k));
        } else if !cur.is_empty() {
            branches.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        branches.push(cur);
    }
    SingularLocus { branches }
}

/// Traces the integral curve of the projected Gauss map of `surface` through
/// `z0`, `arc_span` of arclength in each direction with RK4 step `step`.
///
/// The tangent is the renormalized field; the acceleration is the
/// derivative of the unit field along the curve, taken from the first
/// derivatives of `(p, q)`. Tracing stops early on leaving the domain or
/// when `W < 10 eps_char`.
pub fn extract_seed(surface: &GraphPatch, z0: Vec2, arc_span: f64, step: f64) -> Result<SeedCurve, SeedError> {
    if !(arc_span > 0.0 && step > 0.0) {
        return Err(SeedError::InvalidSpan { span: arc_span, step });
    }
    let w0 = surface.horizontal_data(z0)?.w;
    if w0 <= surface.eps_char {
        return Err(SeedError::CharacteristicStart { x: z0.x, y: z0.y, w: w0 });
    }
    let n = (arc_span / step).ceil().max(1.0) as usize;
    let ds = arc_span / n as f64;
    let stop_w = 10.0 * surface.eps_char;
    let surf = surface.clone();
    let jet_at = move |z: Vec2| -> Option<CurveJet> {
        let j = surf.pq_jet(z).ok()?;
        let w = j.w();
        if !(w > stop_w) {
            return None;
        }
        let nu = Vec2::new(j.p / w, j.q / w);
        let dpq = Vec2::new(j.px * nu.x + j.py * nu.y, j.qx * nu.x + j.qy * nu.y);
        let d2 = (dpq - nu * nu.dot(dpq)) * (1.0 / w);
        Some(CurveJet { pos: z, d1: nu, d2 })
    };
    let jet_at: JetRefine = Arc::new(jet_at);
    let field = |sign: f64| {
        let f = jet_at.clone();
        move |z: Vec2| f(z).map(|j| j.d1 * sign)
    };
    let fwd = rk4_integrate(field(1.0), z0, ds, n, |_| false)?;
    let bwd = rk4_integrate(field(-1.0), z0, ds, n, |_| false)?;

    let mut pts: Vec<Vec2> = bwd.points.iter().skip(1).rev().copied().collect();
    pts.extend(fwd.points.iter().copied());
    // The last RK4 point can be valid while its jet is not (stencil at the
    // boundary); keep the longest valid run through z0.
    let jets: Vec<Option<CurveJet>> = pts.iter().map(|z| jet_at(*z)).collect();
    let centre = bwd.points.len() - 1;
    let mut lo = centre;
    while lo > 0 && jets[lo - 1].is_some() {
        lo -= 1;
    }
    let mut hi = centre;
    while hi + 1 < jets.len() && jets[hi + 1].is_some() {
        hi += 1;
    }
    if jets[centre].is_none() || hi == lo {
        return Err(SeedError::CharacteristicStart { x: z0.x, y: z0.y, w: w0 });
    }
    let s0 = -((centre - lo) as f64) * ds;
    let jets: Vec<CurveJet> = jets[lo..=hi].iter().map(|j| j.expect("valid run")).collect();
    Ok(SeedCurve::sampled(s0, ds, jets, Some(jet_at), Provenance::Extracted { forward: fwd.stop, backward: bwd.stop }))
}
