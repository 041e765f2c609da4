//! Surfaces built from a seed curve and a height function.
//!
//! A seed `gamma` and height `h0` generate the ruled surface
//! `(s, r) -> (gamma(s) + r gamma'(s)^perp, h0(s) - (r/2) <gamma, gamma'>)`.
//! Along each rule the signed angle function is
//! `W(s, r) = (W0 + r - r^2 kappa / 2) / (1 - r kappa)` with
//! `W0 = -h0' + (gamma1 gamma2' - gamma2 gamma1') / 2`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{adaptive_simpson, Grid2, PlanarDomain, Rect, ScalarField1, Vec2};
use crate::heis::{dilate, HPoint};
use crate::par::{self, Execution};
use crate::seed::{curvature, extract_seed, f_map, singular_locus, CurveJet, SeedCurve, SeedError, SingularLocus, DEFAULT_EPS_KAPPA};
use crate::surface::{curvature_scan, GraphPatch, SurfaceError, DEFAULT_EPS_CHAR};

/// Minimum `|det DF|` for treating a chart point as part of a graph.
pub const GRAPH_DET_MIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuledError {
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("rule at s = {s} is singular at r = {r}: 1 - r kappa vanishes")]
    SingularRule { s: f64, r: f64 },
    #[error("chart is not locally invertible at (s, r) = ({s}, {r})")]
    NotAGraph { s: f64, r: f64 },
    #[error("<gamma, gamma'> vanishes at s = {s}")]
    DegenerateDenominator { s: f64 },
}

/// Allowed rule parameters.
#[derive(Clone)]
pub enum RRange {
    All,
    Fixed(f64, f64),
    PerS(Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>),
}

impl fmt::Debug for RRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RRange::All => f.write_str("All"),
            RRange::Fixed(a, b) => write!(f, "Fixed({a}, {b})"),
            RRange::PerS(_) => f.write_str("PerS(..)"),
        }
    }
}

impl RRange {
    pub fn at(&self, s: f64) -> (f64, f64) {
        match self {
            RRange::All => (f64::NEG_INFINITY, f64::INFINITY),
            RRange::Fixed(a, b) => (*a, *b),
            RRange::PerS(f) => f(s),
        }
    }
}

/// A seed, a height function along it, and the parameter domain.
#[derive(Clone, Debug)]
pub struct RuledPatch {
    pub seed: SeedCurve,
    pub h0: ScalarField1,
    pub s_range: (f64, f64),
    pub r_range: RRange,
}

pub fn build_surface(seed: SeedCurve, h0: ScalarField1, s_range: (f64, f64), r_range: RRange) -> RuledPatch {
    RuledPatch { seed, h0, s_range, r_range }
}

/// The same seed and height with every rule extended to a full line.
pub fn extend_rules(patch: &RuledPatch) -> RuledPatch {
    RuledPatch { r_range: RRange::All, ..patch.clone() }
}

/// Parameterization partials at one chart point.
#[derive(Clone, Copy, Debug)]
struct Partials {
    z: Vec2,
    fs: Vec2,
    fr: Vec2,
    ts: f64,
    tr: f64,
}

/// Horizontal line `r -> base o dilate(r, dir)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub base: HPoint,
    pub dir: HPoint,
}

impl Rule {
    pub fn at(&self, r: f64) -> HPoint {
        self.base * dilate(r, self.dir)
    }

    /// Sub-Riemannian distance between two points of the rule, by reducing
    /// `at(r1)^-1 o at(r2)` to a horizontal segment from the origin.
    pub fn distance(&self, r1: f64, r2: f64) -> f64 {
        let d = self.at(r1).inv() * self.at(r2);
        debug_assert!(d.t.abs() <= 1e-9 * (1.0 + r1.abs() + r2.abs()).powi(2));
        d.x.hypot(d.y)
    }
}

impl RuledPatch {
    pub fn with_r_range(mut self, r: RRange) -> Self {
        self.r_range = r;
        self
    }

    fn jet(&self, s: f64) -> Result<CurveJet, RuledError> {
        Ok(self.seed.jet(s)?)
    }

    /// `(F(s, r), h0(s) - (r/2) <gamma, gamma'>)`.
    pub fn embed(&self, s: f64, r: f64) -> Result<HPoint, RuledError> {
        let j = self.jet(s)?;
        let z = j.pos + j.d1.perp() * r;
        Ok(HPoint::new(z.x, z.y, self.h0.value(s) - 0.5 * r * j.pos.dot(j.d1)))
    }

    /// The lifted seed `(gamma(s), h0(s))`.
    pub fn lifted_seed(&self, s: f64) -> Result<HPoint, RuledError> {
        self.embed(s, 0.0)
    }

    pub fn rule(&self, s: f64) -> Result<Rule, RuledError> {
        let j = self.jet(s)?;
        Ok(Rule { base: HPoint::new(j.pos.x, j.pos.y, self.h0.value(s)), dir: HPoint::new(j.d1.y, -j.d1.x, 0.0) })
    }

    pub fn kappa(&self, s: f64) -> Result<f64, RuledError> {
        Ok(curvature(&self.seed, s)?)
    }

    pub fn w0(&self, s: f64) -> Result<f64, RuledError> {
        let j = self.jet(s)?;
        Ok(-self.h0.d1(s) + 0.5 * j.pos.cross(j.d1))
    }

    /// Signed angle function along the rule through `s`.
    pub fn w_field(&self, s: f64, r: f64) -> Result<f64, RuledError> {
        let k = self.kappa(s)?;
        let den = 1.0 - r * k;
        if den.abs() < 1e-12 {
            return Err(RuledError::SingularRule { s, r });
        }
        Ok((self.w0(s)? + r - 0.5 * r * r * k) / den)
    }

    fn partials(&self, s: f64, r: f64) -> Result<Partials, RuledError> {
        let j = self.jet(s)?;
        Ok(Partials {
            z: j.pos + j.d1.perp() * r,
            fs: j.d1 + j.d2.perp() * r,
            fr: j.d1.perp(),
            ts: self.h0.d1(s) - 0.5 * r * (j.d1.norm2() + j.pos.dot(j.d2)),
            tr: -0.5 * j.pos.dot(j.d1),
        })
    }

    /// `(p, q)` of the surface at chart point `(s, r)`, from the
    /// parameterization alone: the graph gradient solves
    /// `grad h . F_s = t_s`, `grad h . F_r = t_r`.
    pub fn pq_direct(&self, s: f64, r: f64) -> Result<Vec2, RuledError> {
        let pt = self.partials(s, r)?;
        let det = pt.fs.cross(pt.fr);
        if det.abs() < 1e-12 {
            return Err(RuledError::NotAGraph { s, r });
        }
        let hx = (pt.ts * pt.fr.y - pt.tr * pt.fs.y) / det;
        let hy = (pt.fs.x * pt.tr - pt.fr.x * pt.ts) / det;
        Ok(Vec2::new(-(hx + 0.5 * pt.z.y), -(hy - 0.5 * pt.z.x)))
    }

    /// `<(p, q), gamma'(s)>`: the signed angle function read off the surface.
    pub fn w_direct(&self, s: f64, r: f64) -> Result<f64, RuledError> {
        let pq = self.pq_direct(s, r)?;
        Ok(pq.dot(self.jet(s)?.d1))
    }

    /// `t_s + (x_s y - y_s x) / 2`: the vertical component of the `s`
    /// derivative. Vanishes exactly where the tangent plane is horizontal,
    /// including on the fold of the chart.
    pub fn contact_residual(&self, s: f64, r: f64) -> Result<f64, RuledError> {
        let pt = self.partials(s, r)?;
        Ok(pt.ts + 0.5 * (pt.fs.x * pt.z.y - pt.fs.y * pt.z.x))
    }

    /// `|dW/dr - 1 - kappa W / (1 - r kappa)|` with `W` read off the surface
    /// and `dW/dr` by a fourth-order difference.
    pub fn w_ode_residual(&self, s: f64, r: f64) -> Result<f64, RuledError> {
        let k = self.kappa(s)?;
        let den = 1.0 - r * k;
        if den.abs() < 1e-12 {
            return Err(RuledError::SingularRule { s, r });
        }
        let h = 1e-4;
        let w = |rr: f64| self.w_direct(s, rr);
        let dw = (-w(r + 2.0 * h)? + 8.0 * w(r + h)? - 8.0 * w(r - h)? + w(r - 2.0 * h)?) / (12.0 * h);
        Ok((dw - 1.0 - k * w(r)? / den).abs())
    }

    /// H-mean curvature of the built surface at `(s, r)`, from differences of
    /// `(p, q)` in the chart mapped through `DF^-1`. Requires
    /// `|det DF| > 0.1` and `W > eps_char`.
    pub fn built_curvature(&self, s: f64, r: f64, eps_char: f64) -> Result<f64, RuledError> {
        let pt = self.partials(s, r)?;
        let det = pt.fs.cross(pt.fr);
        if det.abs() <= GRAPH_DET_MIN {
            return Err(RuledError::NotAGraph { s, r });
        }
        let pq = self.pq_direct(s, r)?;
        let w = pq.norm();
        if w <= eps_char {
            return Err(SurfaceError::CharacteristicPoint { x: pt.z.x, y: pt.z.y, w }.into());
        }
        let d = 1e-3;
        let diff = |f: &dyn Fn(f64) -> Result<Vec2, RuledError>| -> Result<Vec2, RuledError> {
            Ok((f(-2.0 * d)? * -1.0 + f(-d)? * -8.0 + f(d)? * 8.0 + f(2.0 * d)? * -1.0) * (1.0 / (12.0 * d)))
        };
        let pq_s = diff(&|e| self.pq_direct(s + e, r))?;
        let pq_r = diff(&|e| self.pq_direct(s, r + e))?;
        // [pq_s pq_r] = [grad p; grad q] [F_s F_r]; invert the chart Jacobian.
        let inv = |a: f64, b: f64| Vec2::new((a * pt.fr.y - b * pt.fs.y) / det, (pt.fs.x * b - pt.fr.x * a) / det);
        let gp = inv(pq_s.x, pq_r.x);
        let gq = inv(pq_s.y, pq_r.y);
        let (p, q) = (pq.x, pq.y);
        Ok((q * q * gp.x + p * p * gq.y - p * q * (gq.x + gp.y)) / (w * w * w))
    }

    /// Whether `(s, r)` lies in the patch and the chart is safely invertible.
    pub fn graph_valid(&self, s: f64, r: f64) -> bool {
        let (lo, hi) = self.r_range.at(s);
        if s < self.s_range.0 || s > self.s_range.1 || r < lo || r > hi {
            return false;
        }
        matches!(self.kappa(s), Ok(k) if (-1.0 + r * k).abs() > GRAPH_DET_MIN)
    }

    /// The seed data of `g0 o patch`: translated seed and adjusted height.
    pub fn left_translated(&self, g0: HPoint) -> RuledPatch {
        let seed = self.seed.rigid_motion(0.0, Vec2::new(g0.x, g0.y));
        let base = self.seed.clone();
        let base2 = self.seed.clone();
        let h0 = self.h0.clone();
        let h0d = self.h0.clone();
        let h = ScalarField1::new(move |s| {
            let p = base.jet(s).map(|j| j.pos).unwrap_or(Vec2::new(f64::NAN, f64::NAN));
            g0.t + h0.value(s) - 0.5 * (p.x * g0.y - g0.x * p.y)
        })
        .with_d1(move |s| {
            let d = base2.jet(s).map(|j| j.d1).unwrap_or(Vec2::new(f64::NAN, f64::NAN));
            h0d.d1(s) - 0.5 * (d.x * g0.y - g0.x * d.y)
        });
        RuledPatch { seed, h0: h, s_range: self.s_range, r_range: self.r_range.clone() }
    }

    /// The seed data of the patch rotated by `theta` about the `t`-axis.
    pub fn rotated(&self, theta: f64) -> RuledPatch {
        RuledPatch { seed: self.seed.rigid_motion(theta, Vec2::ZERO), ..self.clone() }
    }
}

/// How many roots the characteristic quadratic has at one `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocusCase {
    TwoRoots,
    DoubleRoot,
    None,
    KappaZero,
}

impl LocusCase {
    pub fn label(self) -> &'static str {
        match self {
            LocusCase::TwoRoots => "two-roots",
            LocusCase::DoubleRoot => "double-root",
            LocusCase::None => "none",
            LocusCase::KappaZero => "kappa-zero",
        }
    }
}

/// Which root of the quadratic. `Near` continues through `kappa = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootBranch {
    Near,
    Far,
}

/// One characteristic point of the patch in chart and group coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocusPoint {
    pub s: f64,
    pub r: f64,
    pub kappa: f64,
    pub w0: f64,
    pub case: LocusCase,
    pub branch: RootBranch,
    pub image: HPoint,
    /// `|t_s + (x_s y - y_s x)/2|` at the root.
    pub contact_residual: f64,
    /// `|(p, q)|` read off the chart where it is invertible.
    pub w_direct: Option<f64>,
    /// `W` of a reference graph at the planar image, when one was supplied.
    pub w_reference: Option<f64>,
}

/// A corner of a locus branch: one-sided slopes that disagree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlopeJump {
    pub s: f64,
    pub r: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    pub jump: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LociReport {
    pub points: Vec<LocusPoint>,
    /// Samples per case label.
    pub cases: Vec<(LocusCase, usize)>,
    pub singular: SingularLocus,
    pub slope_jumps: Vec<SlopeJump>,
}

impl LociReport {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn branch(&self, b: RootBranch) -> Vec<&LocusPoint> {
        self.points.iter().filter(|p| p.branch == b).collect()
    }

    pub fn max_contact_residual(&self) -> f64 {
        self.points.iter().map(|p| p.contact_residual).fold(0.0, f64::max)
    }

    pub fn max_w_check(&self) -> f64 {
        self.points.iter().flat_map(|p| [p.w_direct, p.w_reference]).flatten().fold(0.0, f64::max)
    }
}

/// Settings for [`characteristic_locus`].
#[derive(Clone, Debug)]
pub struct LocusOptions {
    pub samples: usize,
    pub eps_kappa: f64,
    /// `|1 + 2 W0 kappa|` below this counts as a double root.
    pub eps_disc: f64,
    /// Minimum slope jump reported as a corner.
    pub kink_tol: f64,
    /// Graph used to double-check roots, typically the closed form the
    /// patch was built from.
    pub reference: Option<GraphPatch>,
    pub exec: Execution,
}

impl Default for LocusOptions {
    fn default() -> Self {
        Self { samples: 201, eps_kappa: DEFAULT_EPS_KAPPA, eps_disc: 1e-6, kink_tol: 1e-2, reference: None, exec: Execution::Parallel }
    }
}

/// Roots in `r` of `W0 + r - kappa r^2 / 2 = 0`, ascending.
pub fn characteristic_roots(w0: f64, kappa: f64, eps_kappa: f64, eps_disc: f64) -> (LocusCase, Vec<(f64, RootBranch)>) {
    if kappa.abs() <= eps_kappa {
        return (LocusCase::KappaZero, vec![(-w0, RootBranch::Near)]);
    }
    let disc = 1.0 + 2.0 * w0 * kappa;
    if disc.abs() <= eps_disc {
        return (LocusCase::DoubleRoot, vec![(1.0 / kappa, RootBranch::Near)]);
    }
    if disc < 0.0 {
        return (LocusCase::None, vec![]);
    }
    let sq = disc.sqrt();
    let near = -2.0 * w0 / (1.0 + sq);
    let far = (1.0 + sq) / kappa;
    let mut roots = vec![(near, RootBranch::Near), (far, RootBranch::Far)];
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    (LocusCase::TwoRoots, roots)
}

/// Near-root value `r(s)` of the characteristic quadratic, if any.
pub fn near_root(patch: &RuledPatch, s: f64, opts: &LocusOptions) -> Option<f64> {
    let (w0, k) = (patch.w0(s).ok()?, patch.kappa(s).ok()?);
    characteristic_roots(w0, k, opts.eps_kappa, opts.eps_disc).1.into_iter().find(|r| r.1 == RootBranch::Near).map(|r| r.0)
}

/// One-sided slopes of the near branch at `s`, Richardson-extrapolated
/// from steps `h` and `h / 2`.
pub fn one_sided_slopes(patch: &RuledPatch, s: f64, h: f64, opts: &LocusOptions) -> Option<(f64, f64)> {
    let r0 = near_root(patch, s, opts)?;
    let d = |step: f64| -> Option<f64> { Some((near_root(patch, s + step, opts)? - r0) / step) };
    let right = 2.0 * d(h / 2.0)? - d(h)?;
    let left = 2.0 * d(-h / 2.0)? - d(-h)?;
    Some((left, right))
}

/// Samples the characteristic locus over the patch's `s` range, labels each
/// sample by case and branch, verifies roots, and looks for corners on the
/// near branch.
pub fn characteristic_locus(patch: &RuledPatch, opts: &LocusOptions) -> LociReport {
    let ss = patch.seed.restricted(patch.s_range.0, patch.s_range.1).sample_params(opts.samples);
    let per_s = par::map(opts.exec, &ss, |&s| {
        let (Ok(w0), Ok(k)) = (patch.w0(s), patch.kappa(s)) else {
            return (LocusCase::None, vec![]);
        };
        let (case, roots) = characteristic_roots(w0, k, opts.eps_kappa, opts.eps_disc);
        let pts = roots
            .into_iter()
            .filter_map(|(r, branch)| {
                let (lo, hi) = patch.r_range.at(s);
                if r < lo || r > hi {
                    return None;
                }
                let image = patch.embed(s, r).ok()?;
                let contact_residual = patch.contact_residual(s, r).ok()?.abs();
                let w_direct = ((-1.0 + r * k).abs() > GRAPH_DET_MIN).then(|| patch.pq_direct(s, r).ok().map(|v| v.norm())).flatten();
                let w_reference = opts.reference.as_ref().and_then(|g| g.horizontal_data(Vec2::new(image.x, image.y)).ok()).map(|h| h.w);
                Some(LocusPoint { s, r, kappa: k, w0, case, branch, image, contact_residual, w_direct, w_reference })
            })
            .collect::<Vec<_>>();
        (case, pts)
    });
    let mut cases: Vec<(LocusCase, usize)> = Vec::new();
    let mut points = Vec::new();
    for (case, pts) in per_s {
        match cases.iter_mut().find(|(c, _)| *c == case) {
            Some(e) => e.1 += 1,
            None => cases.push((case, 1)),
        }
        points.extend(pts);
    }
    let singular = singular_locus(&patch.seed.restricted(patch.s_range.0, patch.s_range.1), opts.eps_kappa, opts.samples);

    let mut slope_jumps = Vec::new();
    if ss.len() >= 3 {
        let h = (ss[1] - ss[0]) * 0.5;
        let near: Vec<&LocusPoint> = points.iter().filter(|p| p.branch == RootBranch::Near).collect();
        for p in near {
            if p.s - 2.0 * h < patch.s_range.0 || p.s + 2.0 * h > patch.s_range.1 {
                continue;
            }
            if let Some((l, r)) = one_sided_slopes(patch, p.s, h, opts) {
                let jump = (r - l).abs();
                if jump > opts.kink_tol {
                    slope_jumps.push(SlopeJump { s: p.s, r: p.r, left_slope: l, right_slope: r, jump });
                }
            }
        }
    }
    LociReport { points, cases, singular, slope_jumps }
}

/// Summary of [`minimality_sample`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BuiltCurvature {
    pub evaluated: usize,
    pub max_abs: f64,
    pub max_at: Option<(f64, f64)>,
}

/// Samples the H-mean curvature of a built patch on an `ns x nr` chart grid,
/// keeping graph-valid points only.
pub fn minimality_sample(patch: &RuledPatch, s_range: (f64, f64), r_range: (f64, f64), ns: usize, nr: usize, exec: Execution) -> BuiltCurvature {
    let margin = 3e-3;
    let (s0, s1) = (s_range.0 + margin, s_range.1 - margin);
    let pts: Vec<(f64, f64)> = (0..ns)
        .flat_map(|i| {
            (0..nr).map(move |j| {
                let s = s0 + (s1 - s0) * i as f64 / (ns - 1).max(1) as f64;
                let r = r_range.0 + (r_range.1 - r_range.0) * j as f64 / (nr - 1).max(1) as f64;
                (s, r)
            })
        })
        .collect();
    let vals = par::map(exec, &pts, |&(s, r)| {
        if !patch.graph_valid(s, r) {
            return None;
        }
        patch.built_curvature(s, r, DEFAULT_EPS_CHAR).ok().map(|h| (s, r, h))
    });
    let mut out = BuiltCurvature::default();
    for (s, r, h) in vals.into_iter().flatten() {
        out.evaluated += 1;
        if !(h.abs() <= out.max_abs) {
            out.max_abs = h.abs();
            out.max_at = Some((s, r));
        }
    }
    out
}

/// One lifted seed of a generalized seed curve, on `(a, b)`.
#[derive(Clone, Debug)]
pub struct GscPiece {
    pub seed: SeedCurve,
    pub h0: ScalarField1,
    pub interval: (f64, f64),
}

/// How consecutive pieces meet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Join {
    /// Planar endpoints coincide.
    Endpoint,
    /// Pieces are separated by a vertical plane with this unit normal.
    VerticalPlane { normal: Vec2 },
}

#[derive(Clone, Debug)]
pub struct GeneralizedSeedCurve {
    pub pieces: Vec<GscPiece>,
    pub joins: Vec<Join>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JoinReport {
    pub index: usize,
    pub gap: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GscValidation {
    pub valid: bool,
    pub joins: Vec<JoinReport>,
}

/// Checks that consecutive pieces meet: the planar gap between the end of
/// piece `i` and the start of piece `i + 1` is at most `tol`.
pub fn validate_gsc(g: &GeneralizedSeedCurve, tol: f64) -> GscValidation {
    let joins: Vec<JoinReport> = g
        .pieces
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let end = w[0].seed.point(w[0].interval.1);
            let start = w[1].seed.point(w[1].interval.0);
            let gap = match (end, start) {
                (Ok(a), Ok(b)) => a.dist(b),
                _ => f64::INFINITY,
            };
            JoinReport { index: i, gap, ok: gap <= tol }
        })
        .collect();
    let shape_ok = g.joins.len() + 1 == g.pieces.len() || g.pieces.len() <= 1;
    GscValidation { valid: shape_ok && joins.iter().all(|j| j.ok), joins }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PieceCurvature {
    pub mean: f64,
    pub max_dev: f64,
}

/// Whether every piece has constant signed curvature within `tol`; pieces
/// may have different constants.
pub fn constant_curvature_test(g: &GeneralizedSeedCurve, tol: f64, samples: usize) -> (bool, Vec<PieceCurvature>) {
    let summary: Vec<PieceCurvature> = g
        .pieces
        .iter()
        .map(|p| {
            let c = p.seed.restricted(p.interval.0, p.interval.1);
            let ks: Vec<f64> = c.sample_params(samples).into_iter().filter_map(|s| curvature(&c, s).ok()).collect();
            let mean = ks.iter().sum::<f64>() / ks.len().max(1) as f64;
            let max_dev = ks.iter().map(|k| (k - mean).abs()).fold(0.0, f64::max);
            PieceCurvature { mean, max_dev }
        })
        .collect();
    (summary.iter().all(|p| p.max_dev <= tol), summary)
}

/// `gamma1'(s) / <gamma(s), gamma'(s)>` for a seed normalized to
/// `gamma(0) = 0`, `gamma'(0) = (0, 1)`.
pub fn bernstein_quotient(c: &SeedCurve, s: f64) -> Result<f64, RuledError> {
    let j = c.jet(s)?;
    let den = j.pos.dot(j.d1);
    if den.abs() < 1e-14 {
        return Err(RuledError::DegenerateDenominator { s });
    }
    Ok(j.d1.x / den)
}

/// Outcome of [`classify_entire_graph`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum Classification {
    /// A plane `a x + b y + c t = d` with its single characteristic point.
    Class1 {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        sigma: HPoint,
        fit_residual: f64,
    },
    /// Parallel straight seeds with direction `(a, b)`.
    Class2 {
        a: f64,
        b: f64,
        base: HPoint,
        h0: Vec<(f64, f64)>,
        /// Largest change of `h + ab(x^2 - y^2)/2 + (b^2 - a^2) x y / 2`
        /// along `(b, -a)` per unit length; zero for this family.
        family_residual: f64,
    },
    NotMinimal {
        max_abs_h: f64,
    },
    NotEntire {
        x: f64,
        y: f64,
    },
    Inconclusive {
        reason: String,
    },
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Class1 { .. } => "Class1",
            Classification::Class2 { .. } => "Class2",
            Classification::NotMinimal { .. } => "NotMinimal",
            Classification::NotEntire { .. } => "NotEntire",
            Classification::Inconclusive { .. } => "Inconclusive",
        }
    }
}

/// Settings for [`classify_entire_graph`].
#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    pub window: Rect,
    pub grid: usize,
    pub tol: f64,
    pub exec: Execution,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { window: Rect::square(2.0), grid: 41, tol: 1e-6, exec: Execution::Parallel }
    }
}

/// Sorts an entire minimal graph into the plane or straight-seed family.
pub fn classify_entire_graph(s: &GraphPatch, opts: &ClassifyOptions) -> Classification {
    let w = opts.window;
    let dom = PlanarDomain::rect(w);
    let Ok(grid) = Grid2::on_rect(dom.clone(), w, opts.grid, opts.grid) else {
        return Classification::Inconclusive { reason: "window too small".into() };
    };
    let margin = 10.0 * s.h.stencil_radius() + 1e-2;
    for n in &grid.nodes {
        if !s.domain.contains(n.p) || !s.height(n.p).is_finite() {
            return Classification::NotEntire { x: n.p.x, y: n.p.y };
        }
    }
    let inner = GraphPatch { domain: s.domain.clone(), h: s.h.clone(), eps_char: s.eps_char };
    let inner_grid = Grid2::on_rect(dom, w.inset(margin), opts.grid, opts.grid).expect("inset window");
    let scan = curvature_scan(&inner, &inner_grid, 1e-2, 0.0, opts.exec);
    if scan.max_abs > opts.tol {
        return Classification::NotMinimal { max_abs_h: scan.max_abs };
    }

    // Start the seed where W is largest in the central half of the window.
    let centre = w.inset(0.25 * (w.xmax - w.xmin).min(w.ymax - w.ymin));
    let z0 = inner_grid
        .nodes
        .iter()
        .filter(|n| centre.contains(n.p))
        .filter_map(|n| s.horizontal_data(n.p).ok().map(|h| (n.p, h.w)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p);
    let Some(z0) = z0 else {
        return Classification::Inconclusive { reason: "no non-characteristic start".into() };
    };
    let span = 0.2 * (w.xmax - w.xmin).min(w.ymax - w.ymin);
    let seed = match extract_seed(s, z0, span, 1e-3) {
        Ok(c) => c,
        Err(e) => return Classification::Inconclusive { reason: e.to_string() },
    };
    let ks: Vec<f64> = seed.sample_params(101).into_iter().filter_map(|t| curvature(&seed, t).ok()).collect();
    let mean = ks.iter().sum::<f64>() / ks.len() as f64;
    let dev = ks.iter().map(|k| (k - mean).abs()).fold(0.0, f64::max);
    let kappa_tol = 1e-5;
    if dev > kappa_tol {
        return Classification::Inconclusive { reason: format!("seed curvature not constant (spread {dev:e})") };
    }

    if mean.abs() > kappa_tol {
        // Least-squares plane t = u0 + u1 x + u2 y over the window.
        let mut ata = [[0.0f64; 3]; 3];
        let mut atb = [0.0f64; 3];
        for n in &grid.nodes {
            let row = [1.0, n.p.x, n.p.y];
            let t = s.height(n.p);
            for i in 0..3 {
                atb[i] += row[i] * t;
                for j in 0..3 {
                    ata[i][j] += row[i] * row[j];
                }
            }
        }
        let Some(u) = solve3(ata, atb) else {
            return Classification::Inconclusive { reason: "singular plane fit".into() };
        };
        let fit_residual = grid.nodes.iter().map(|n| (s.height(n.p) - (u[0] + u[1] * n.p.x + u[2] * n.p.y)).abs()).fold(0.0, f64::max);
        if fit_residual > opts.tol {
            return Classification::Inconclusive { reason: format!("circular seed but plane fit residual {fit_residual:e}") };
        }
        // a x + b y + c t = d with c = 1, then scaled so the first nonzero
        // of (a, b, c) is 1.
        let (mut a, mut b, mut c, mut d) = (-u[1], -u[2], 1.0, u[0]);
        let lead = [a, b, c].into_iter().find(|v| v.abs() > 1e-12).unwrap_or(1.0);
        a /= lead;
        b /= lead;
        c /= lead;
        d /= lead;
        let sigma = HPoint::new(-2.0 * b / c, 2.0 * a / c, d / c);
        return Classification::Class1 { a, b, c, d, sigma, fit_residual };
    }

    let j0 = seed.jet(0.0).expect("seed contains 0");
    let (a, b) = (j0.d1.x, j0.d1.y);
    let base = HPoint::new(j0.pos.x, j0.pos.y, s.height(j0.pos));
    let h0: Vec<(f64, f64)> = seed.sample_params(21).into_iter().filter_map(|t| seed.point(t).ok().map(|p| (t, s.height(p)))).collect();
    let g = |p: Vec2| s.height(p) + 0.5 * a * b * (p.x * p.x - p.y * p.y) + 0.5 * (b * b - a * a) * p.x * p.y;
    let dir = Vec2::new(b, -a);
    let step = 1e-3;
    let family_residual = inner_grid.nodes.iter().map(|n| ((g(n.p + dir * step) - g(n.p - dir * step)) / (2.0 * step)).abs()).fold(0.0, f64::max);
    Classification::Class2 { a, b, base, h0, family_residual }
}

fn solve3(m: [[f64; 3]; 3], v: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = v[i];
        }
        *o = det(&mk) / d;
    }
    Some(out)
}

/// Result of [`roundtrip`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub max_error: f64,
    pub samples: usize,
}

/// Extracts a seed from `s` at `z0`, rebuilds the surface from the seed and
/// `h0(s) = h(gamma(s))`, and compares heights at matching planar points.
pub fn roundtrip(s: &GraphPatch, z0: Vec2, s_span: f64, r_span: f64, step: f64) -> Result<RoundtripReport, RuledError> {
    let seed = extract_seed(s, z0, s_span, step)?;
    let h0 = lifted_height(s, &seed);
    let patch = build_surface(seed.clone(), h0, (seed.s_min, seed.s_max), RRange::Fixed(-r_span, r_span));
    let mut max_error: f64 = 0.0;
    let mut samples = 0;
    for sv in seed.sample_params(41) {
        for k in 0..=20 {
            let r = -r_span + 2.0 * r_span * k as f64 / 20.0;
            if !patch.graph_valid(sv, r) {
                continue;
            }
            let g = patch.embed(sv, r)?;
            let z = Vec2::new(g.x, g.y);
            if !s.domain.contains(z) {
                continue;
            }
            let h = s.height(z);
            if !h.is_finite() {
                continue;
            }
            max_error = max_error.max((g.t - h).abs());
            samples += 1;
        }
    }
    Ok(RoundtripReport { max_error, samples })
}

/// `s -> h(gamma(s))` with derivative `grad h . gamma'`.
pub fn lifted_height(s: &GraphPatch, seed: &SeedCurve) -> ScalarField1 {
    let (g1, c1) = (s.clone(), seed.clone());
    let (g2, c2) = (s.clone(), seed.clone());
    ScalarField1::new(move |t| c1.point(t).map(|p| g1.height(p)).unwrap_or(f64::NAN))
        .with_d1(move |t| c2.jet(t).map(|j| g2.h.grad_unchecked(j.pos).dot(j.d1)).unwrap_or(f64::NAN))
}

/// Height function given by its derivative, integrated from `anchor`.
pub fn height_from_derivative(anchor: f64, value_at_anchor: f64, d1: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static) -> ScalarField1 {
    let d = d1.clone();
    ScalarField1::new(move |s| value_at_anchor + adaptive_simpson(&d, anchor, s, 1e-12)).with_d1(d1)
}

/// Maximum `|W_field - W_direct|` over a chart grid, restricted to
/// graph-valid points.
pub fn w_consistency(patch: &RuledPatch, s_range: (f64, f64), r_range: (f64, f64), ns: usize, nr: usize) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for i in 0..ns {
        let s = s_range.0 + (s_range.1 - s_range.0) * i as f64 / (ns - 1).max(1) as f64;
        for j in 0..nr {
            let r = r_range.0 + (r_range.1 - r_range.0) * j as f64 / (nr - 1).max(1) as f64;
            if !patch.graph_valid(s, r) {
                continue;
            }
            if let (Ok(a), Ok(b)) = (patch.w_field(s, r), patch.w_direct(s, r)) {
                worst = worst.max((a - b).abs());
                n += 1;
            }
        }
    }
    (worst, n)
}

/// Chart point closest to `z` on a seed, via [`f_map`] Newton inversion
/// seeded from a coarse search.
pub fn chart_of(patch: &RuledPatch, z: Vec2) -> Option<(f64, f64)> {
    let ss = patch.seed.sample_params(64);
    let (mut best, mut bd) = ((0.0, 0.0), f64::INFINITY);
    for s in ss {
        let Ok(j) = patch.seed.jet(s) else { continue };
        let r = (z - j.pos).dot(j.d1.perp());
        if let Ok(f) = f_map(&patch.seed, s, r) {
            let d = f.dist(z);
            if d < bd {
                bd = d;
                best = (s, r);
            }
        }
    }
    crate::seed::f_inverse(&patch.seed, z, best.0, best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Var};
    use proptest::prelude::*;

    fn h0_expr(src: &str) -> ScalarField1 {
        parse(src).unwrap().to_field1(Var::S).unwrap()
    }

    fn plane_patch() -> RuledPatch {
        build_surface(SeedCurve::rotation_circle(Vec2::new(1.0, 0.0), -3.0, 3.0), ScalarField1::constant(0.0), (-3.0, 3.0), RRange::Fixed(-0.5, 2.0))
    }

    fn hyperbolic_patch(x: f64, y: f64) -> RuledPatch {
        // t = xy/2 along the seed (x - s, y).
        let seed = SeedCurve::line(Vec2::new(x, y), Vec2::new(-1.0, 0.0), -2.0, 2.0);
        let h0 = ScalarField1::new(move |s| (x - s) * y / 2.0).with_d1(move |_| -y / 2.0);
        build_surface(seed, h0, (-2.0, 2.0), RRange::Fixed(-0.5, 0.5))
    }

    fn optreg2() -> RuledPatch {
        let psi = ScalarField1::new(|s: f64| 0.5 + 0.5 * s * s.abs()).with_d1(|s: f64| s.abs());
        let seed = SeedCurve::from_turning_angle(Vec2::ZERO, -1.0, psi, -1.0, 1.0, "turning");
        let c = seed.clone();
        let h0 = height_from_derivative(-1.0, 0.0, move |s| {
            let j = c.jet(s).unwrap();
            -0.5 * j.d1.dot(j.pos.perp()) + 1.0
        });
        build_surface(seed, h0, (-1.0, 1.0), RRange::All)
    }

    #[test]
    fn cylinder_points_satisfy_implicit_form() {
        let seed = SeedCurve::line(Vec2::ZERO, Vec2::new(1.0, 0.0), -0.99, 0.99);
        let p = build_surface(seed, h0_expr("sqrt(1 - s^2)"), (-0.99, 0.99), RRange::Fixed(-2.0, 2.0));
        for s in [-0.9, -0.1, 0.5] {
            for r in [-2.0, 0.0, 1.3] {
                let g = p.embed(s, r).unwrap();
                assert!(((g.t - g.x * g.y / 2.0).powi(2) - (1.0 - g.x * g.x)).abs() < 1e-12);
                assert!(g.dist_to(HPoint::new(s, -r, (1.0 - s * s).sqrt() - r * s / 2.0)) < 1e-14);
            }
        }
    }

    trait Dist {
        fn dist_to(&self, o: HPoint) -> f64;
    }
    impl Dist for HPoint {
        fn dist_to(&self, o: HPoint) -> f64 {
            self.euclid_dist(&o)
        }
    }

    #[test]
    fn cube_root_patch_satisfies_its_equation() {
        let seed = SeedCurve::line(Vec2::ZERO, Vec2::new(1.0, 0.0), 0.05, 2.0);
        let p = build_surface(seed, h0_expr("s^(1/3)"), (0.05, 2.0), RRange::All);
        for s in [0.1, 1.0, 1.9] {
            for r in [-3.0, 0.4] {
                let g = p.embed(s, r).unwrap();
                assert!(((g.t - g.x * g.y / 2.0).powi(3) - g.x).abs() < 1e-12);
            }
            assert_eq!(p.embed(s, 0.0).unwrap(), HPoint::new(s, 0.0, s.powf(1.0 / 3.0)));
        }
    }

    #[test]
    fn w0_examples() {
        let p = plane_patch();
        for s in [-1.0, 0.0, 2.0] {
            assert!((p.w0(s).unwrap() - 0.5).abs() < 1e-15);
            assert!((p.w_direct(s, 0.0).unwrap() - 0.5).abs() < 1e-12);
        }
        let h = hyperbolic_patch(0.0, 1.0);
        assert!((h.w0(0.3).unwrap() - 1.0).abs() < 1e-15);
        let o = optreg2();
        for s in [-0.8, -0.2, 0.0, 0.4, 0.9] {
            assert!((o.w0(s).unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn w_field_examples() {
        let p = plane_patch();
        for (s, r) in [(0.0, 0.5), (1.0, -0.3), (2.0, 1.7)] {
            let w = p.w_field(s, r).unwrap();
            assert!((w - (1.0 + r) / 2.0).abs() < 1e-15);
            assert!((w - p.w_direct(s, r).unwrap()).abs() < 1e-12);
            assert_eq!(p.w_field(s, 0.0).unwrap(), p.w0(s).unwrap());
        }
        assert!(matches!(p.w_field(0.0, -1.0), Err(RuledError::SingularRule { .. })));
        let h = hyperbolic_patch(0.4, 1.0);
        assert!((h.w_field(0.2, 0.3).unwrap() - 1.3).abs() < 1e-15);
        assert!((h.w_direct(0.2, 0.3).unwrap() - 1.3).abs() < 1e-12);
    }

    #[test]
    fn ode_residual_examples() {
        let p = plane_patch();
        let h = hyperbolic_patch(0.0, 1.0);
        for (s, r) in [(0.0, 0.5), (1.0, -0.3), (-2.0, 1.5)] {
            assert!(p.w_ode_residual(s, r).unwrap() < 1e-8);
            assert!(h.w_ode_residual(s, r.clamp(-0.4, 0.4)).unwrap() < 1e-8);
        }
    }

    #[test]
    fn locus_of_the_plane_is_a_double_root() {
        let p = extend_rules(&plane_patch());
        let rep = characteristic_locus(&p, &LocusOptions { samples: 21, ..Default::default() });
        assert_eq!(rep.points.len(), 21);
        for pt in &rep.points {
            assert_eq!(pt.case, LocusCase::DoubleRoot);
            assert!((pt.r + 1.0).abs() < 1e-12);
            assert!(pt.image.euclid_dist(&HPoint::ORIGIN) < 1e-12);
            assert!(pt.contact_residual < 1e-12);
        }
    }

    #[test]
    fn locus_of_hyperbolic_is_one_line() {
        let h = hyperbolic_patch(0.3, 0.25);
        let rep = characteristic_locus(&h, &LocusOptions { samples: 11, ..Default::default() });
        assert!(rep.points.iter().all(|p| p.case == LocusCase::KappaZero && (p.r + 0.25).abs() < 1e-15));
        assert!(rep.points.iter().all(|p| p.image.y.abs() < 1e-15 && p.image.t.abs() < 1e-15));
        assert!(rep.max_w_check() < 1e-12);
        assert!(rep.singular.is_empty());
    }

    #[test]
    fn optreg2_branch_has_a_corner_at_zero() {
        let o = optreg2();
        let opts = LocusOptions { samples: 201, ..Default::default() };
        let r0 = near_root(&o, 0.0, &opts).unwrap();
        assert!((r0 - 1.0).abs() < 1e-12);
        let (l, r) = one_sided_slopes(&o, 0.0, 1e-3, &opts).unwrap();
        assert!((l - 0.5).abs() < 1e-5 && (r + 0.5).abs() < 1e-5, "{l} {r}");
        let rep = characteristic_locus(&o, &opts);
        assert_eq!(rep.slope_jumps.len(), 1);
        assert!(rep.slope_jumps[0].s.abs() < 1e-12);
        assert!((rep.slope_jumps[0].jump - 1.0).abs() < 1e-3);
        assert!(rep.max_contact_residual() < 1e-9);
    }

    #[test]
    fn rules_match_the_parameterization() {
        let p = optreg2();
        for s in [-0.7, 0.0, 0.6] {
            let rule = p.rule(s).unwrap();
            assert_eq!(rule.at(0.0), p.lifted_seed(s).unwrap());
            assert!((rule.dir.x.hypot(rule.dir.y) - 1.0).abs() < 1e-15);
            for r in [-2.0, 0.5, 3.0] {
                assert!(rule.at(r).euclid_dist(&p.embed(s, r).unwrap()) < 1e-12);
                assert!((rule.distance(0.5, r) - (r - 0.5).abs()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extension_keeps_closed_forms() {
        let h = extend_rules(&hyperbolic_patch(0.2, 0.7));
        for r in [-50.0, -1.0, 3.0, 40.0] {
            let g = h.embed(0.3, r).unwrap();
            assert!((g.t - g.x * g.y / 2.0).abs() < 1e-10);
        }
        let p = extend_rules(&plane_patch());
        for r in [-5.0, -1.0, -0.99, 4.0] {
            assert!(p.embed(1.0, r).unwrap().t.abs() < 1e-15);
        }
        assert!(matches!(p.r_range, RRange::All));
    }

    #[test]
    fn gsc_validation() {
        let neg = GscPiece { seed: SeedCurve::line(Vec2::ZERO, Vec2::new(1.0, 0.0), -1.0, 0.0), h0: h0_expr("-abs(s)^(1/3)"), interval: (-1.0, 0.0) };
        let pos = GscPiece { seed: SeedCurve::line(Vec2::ZERO, Vec2::new(1.0, 0.0), 0.0, 1.0), h0: h0_expr("s^(1/3)"), interval: (0.0, 1.0) };
        let g = GeneralizedSeedCurve { pieces: vec![neg.clone(), pos.clone()], joins: vec![Join::Endpoint] };
        let v = validate_gsc(&g, 1e-9);
        assert!(v.valid && v.joins[0].gap == 0.0);
        let (ok, ks) = constant_curvature_test(&g, 1e-9, 11);
        assert!(ok && ks.iter().all(|k| k.mean == 0.0));

        let far = GscPiece { seed: SeedCurve::line(Vec2::new(0.5, 0.0), Vec2::new(1.0, 0.0), 0.0, 1.0), ..pos };
        let bad = GeneralizedSeedCurve { pieces: vec![neg, far], joins: vec![Join::Endpoint] };
        let v = validate_gsc(&bad, 1e-9);
        assert!(!v.valid && (v.joins[0].gap - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bernstein_quotient_on_circles() {
        for k0 in [2.0, -1.0] {
            let c = SeedCurve::normalized_circle(k0, -1.0, 1.0);
            assert!((bernstein_quotient(&c, 0.1).unwrap() - k0).abs() < 1e-8);
            assert!((bernstein_quotient(&c, 1e-4).unwrap() - k0).abs() < 1e-6);
        }
        let c = SeedCurve::normalized_circle(2.0, -1.0, 1.0);
        assert!(matches!(bernstein_quotient(&c, 0.0), Err(RuledError::DegenerateDenominator { .. })));
    }

    fn graph(src: &str) -> GraphPatch {
        GraphPatch::new(parse(src).unwrap().to_field2().unwrap(), PlanarDomain::plane())
    }

    #[test]
    fn classifier_examples() {
        let opts = ClassifyOptions::default();
        match classify_entire_graph(&graph("(4 - x - 2*y)/2"), &opts) {
            Classification::Class1 { a, b, c, d, sigma, .. } => {
                assert!((a - 1.0).abs() < 1e-9 && (b - 2.0).abs() < 1e-9 && (c - 2.0).abs() < 1e-9 && (d - 4.0).abs() < 1e-9);
                assert!(sigma.euclid_dist(&HPoint::new(-2.0, 1.0, 2.0)) < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        match classify_entire_graph(&graph("x*y/2"), &opts) {
            Classification::Class2 { a, b, family_residual, h0, .. } => {
                assert!((a.abs() - 1.0).abs() < 1e-9 && b.abs() < 1e-9);
                assert!(family_residual < 1e-6);
                // h0 linear in s
                let slope = (h0[1].1 - h0[0].1) / (h0[1].0 - h0[0].0);
                assert!(h0.iter().all(|(s, v)| (v - (h0[0].1 + slope * (s - h0[0].0))).abs() < 1e-9));
            }
            other => panic!("{other:?}"),
        }
        match classify_entire_graph(&graph("x^2 - x*y/2"), &opts) {
            Classification::Class2 { a, b, family_residual, .. } => {
                assert!((a.abs() - 2.0 / 5f64.sqrt()).abs() < 1e-6 && (b.abs() - 1.0 / 5f64.sqrt()).abs() < 1e-6);
                assert!(family_residual < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(classify_entire_graph(&graph("(x^2+y^2)/4"), &opts), Classification::NotMinimal { .. }));
        let half = GraphPatch::new(parse("x*y/2").unwrap().to_field2().unwrap(), PlanarDomain::rect(Rect::new(0.0, 5.0, -5.0, 5.0)));
        assert!(matches!(classify_entire_graph(&half, &opts), Classification::NotEntire { .. }));
    }

    #[test]
    fn roundtrip_examples() {
        let r = roundtrip(&graph("x*y/2"), Vec2::new(0.0, 1.0), 1.0, 0.5, 1e-3).unwrap();
        assert!(r.max_error <= 1e-6 && r.samples > 100);
        let r = roundtrip(&graph("0"), Vec2::new(1.0, 0.0), 1.0, 0.5, 1e-3).unwrap();
        assert!(r.max_error <= 1e-6);
    }

    #[test]
    fn translated_data_rebuilds_translated_points() {
        let p = optreg2();
        let g0 = HPoint::new(0.3, -1.2, 0.7);
        let q = p.left_translated(g0);
        for s in [-0.5, 0.25] {
            for r in [-1.0, 0.3] {
                let a = g0 * p.embed(s, r).unwrap();
                let b = q.embed(s, r).unwrap();
                assert!(a.euclid_dist(&b) < 1e-9);
            }
        }
    }

    #[test]
    fn built_plane_and_hyperbolic_are_minimal() {
        for p in [plane_patch(), hyperbolic_patch(0.0, 1.0)] {
            let m = minimality_sample(&p, (-1.0, 1.0), (-0.4, 0.4), 9, 9, Execution::Sequential);
            assert!(m.evaluated > 50 && m.max_abs < 1e-8, "{m:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn roots_are_roots(w0 in -3.0..3.0f64, k in -3.0..3.0f64) {
            let (_, roots) = characteristic_roots(w0, k, 1e-8, 1e-9);
            for (r, _) in roots {
                prop_assert!((w0 + r - 0.5 * k * r * r).abs() <= 1e-9 * (1.0 + r * r));
            }
        }

        #[test]
        fn random_seeds_build_minimal_surfaces(
            a in prop::array::uniform3(-0.8..0.8f64),
            b in prop::array::uniform2(-1.0..1.0f64),
        ) {
            let psi = ScalarField1::new(move |s: f64| a[0] * s + a[1] * (2.0 * s).sin() + a[2] * (3.0 * s).cos())
                .with_d1(move |s: f64| a[0] + 2.0 * a[1] * (2.0 * s).cos() - 3.0 * a[2] * (3.0 * s).sin());
            let seed = SeedCurve::from_turning_angle(Vec2::new(0.3, -0.2), 0.0, psi, -1.0, 1.0, "random");
            let h0 = ScalarField1::new(move |s: f64| b[0] * s + b[1] * (1.5 * s).sin()).with_d1(move |s: f64| b[0] + 1.5 * b[1] * (1.5 * s).cos());
            let p = build_surface(seed, h0, (-1.0, 1.0), RRange::All);
            let m = minimality_sample(&p, (-0.8, 0.8), (-1.0, 1.0), 7, 7, Execution::Sequential);
            prop_assert!(m.max_abs <= 1e-5, "{:?}", m);
        }
    }
}
