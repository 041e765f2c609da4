//! Catalog of example surfaces with closed forms, known seeds and expected
//! verification outcomes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, Var};
use crate::fields::{Grid2, PlanarDomain, Rect, ScalarField1, Vec2};
use crate::heis::HPoint;
use crate::par::{self, Execution};
use crate::ruled::{
    build_surface, characteristic_locus, constant_curvature_test, lifted_height, minimality_sample, near_root, one_sided_slopes, roundtrip, validate_gsc,
    GeneralizedSeedCurve, GscPiece, Join, LocusOptions, RRange, RuledPatch,
};
use crate::seed::{curvature, extract_seed, f_jacobian_det, f_jacobian_det_fd, SeedCurve};
use crate::surface::{characteristic_scan, curvature_scan, vertical_line_test, GraphPatch, ImplicitSurface, Orientation, Sheet};

/// Every catalog name, in display order.
pub const CATALOG: [&str; 9] = ["char-plane", "general-plane", "hyperbolic", "catenoid", "counterexample", "cylinder", "gencurve-n", "optreg2", "iso-profile"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GalleryError {
    #[error("unknown gallery entry `{0}`")]
    UnknownName(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

/// Entry parameters; each entry reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalleryParams {
    /// Rotation surface scale.
    pub a: f64,
    /// Rotation surface vertical offset.
    pub u0: f64,
    /// Exponent of `(t - xy/2)^n = x`.
    pub n: u32,
    /// Radius of the constant-curvature profile.
    pub radius: f64,
    /// Coefficients `(a, b, c, d)` of `a x + b y + c t = d`.
    pub plane: [f64; 4],
}

impl Default for GalleryParams {
    fn default() -> Self {
        Self { a: 2.0, u0: 0.0, n: 3, radius: 1.0, plane: [1.0, 2.0, 2.0, 4.0] }
    }
}

impl GalleryParams {
    fn validate(&self) -> Result<(), GalleryError> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(GalleryError::InvalidParameter { name: "a", reason: format!("must be positive, got {}", self.a) });
        }
        if !self.u0.is_finite() {
            return Err(GalleryError::InvalidParameter { name: "u0", reason: "must be finite".into() });
        }
        if self.n == 0 {
            return Err(GalleryError::InvalidParameter { name: "n", reason: "must be at least 1".into() });
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(GalleryError::InvalidParameter { name: "radius", reason: format!("must be positive, got {}", self.radius) });
        }
        if self.plane[2] == 0.0 || self.plane.iter().any(|v| !v.is_finite()) {
            return Err(GalleryError::InvalidParameter { name: "plane", reason: "need finite coefficients with c != 0".into() });
        }
        Ok(())
    }
}

/// One graph sheet of an entry with the window it is sampled on.
#[derive(Clone, Debug)]
pub struct GraphSheet {
    pub label: String,
    pub expr: String,
    pub patch: GraphPatch,
    pub window: Rect,
}

/// Known curvature of the closed-form seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum KnownKappa {
    Constant(f64),
    /// Read from the closed-form jet.
    FromSeed,
}

/// Closed-form seed data through `z0` on sheet `sheet`.
#[derive(Clone, Debug)]
pub struct KnownSeed {
    pub z0: Vec2,
    pub seed: SeedCurve,
    pub h0: ScalarField1,
    pub h0_expr: Option<String>,
    pub kappa: KnownKappa,
    pub sheet: usize,
    /// Extraction span per direction.
    pub span: f64,
}

/// Where the characteristic set is expected to be.
#[derive(Clone)]
pub enum ExpectedLocus {
    Empty,
    Point(HPoint),
    /// Points satisfy `residual(g) = 0`.
    Curve {
        description: String,
        residual: Arc<dyn Fn(HPoint) -> f64 + Send + Sync>,
    },
    /// A branch through `(s, r)` whose one-sided slopes differ by `jump`.
    Kinked {
        s: f64,
        r: f64,
        jump: f64,
    },
}

impl fmt::Debug for ExpectedLocus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpectedLocus::Empty => f.write_str("Empty"),
            ExpectedLocus::Point(p) => write!(f, "Point({p:?})"),
            ExpectedLocus::Curve { description, .. } => write!(f, "Curve({description})"),
            ExpectedLocus::Kinked { s, r, jump } => write!(f, "Kinked(s={s}, r={r}, jump={jump})"),
        }
    }
}

impl ExpectedLocus {
    pub fn describe(&self) -> String {
        match self {
            ExpectedLocus::Empty => "empty".into(),
            ExpectedLocus::Point(p) => format!("point ({}, {}, {})", p.x, p.y, p.t),
            ExpectedLocus::Curve { description, .. } => description.clone(),
            ExpectedLocus::Kinked { s, r, jump } => format!("branch through (s, r) = ({s}, {r}) with slope jump {jump}"),
        }
    }
}

/// A ruled patch with the chart region it is sampled on.
#[derive(Clone, Debug)]
pub struct PatchEntry {
    pub label: String,
    pub patch: RuledPatch,
    pub s_sample: (f64, f64),
    pub r_sample: (f64, f64),
    /// Sheet used to double-check characteristic roots.
    pub reference: Option<usize>,
    /// Chart points to leave out of curvature sampling, as `s` intervals.
    pub s_excluded: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub sheets: Vec<GraphSheet>,
    pub implicit: Option<(String, ImplicitSurface)>,
    pub known_seed: Option<KnownSeed>,
    pub patches: Vec<PatchEntry>,
    pub gsc: Option<GeneralizedSeedCurve>,
    /// Constant H-mean curvature of every sheet.
    pub expected_h: f64,
    pub expected_locus: ExpectedLocus,
    pub notes: Vec<String>,
}

impl GalleryEntry {
    /// The first ruled patch, the default for construction and loci.
    pub fn primary_patch(&self) -> Option<&PatchEntry> {
        self.patches.first()
    }

    pub fn reference_graph(&self, p: &PatchEntry) -> Option<&GraphPatch> {
        p.reference.and_then(|i| self.sheets.get(i)).map(|s| &s.patch)
    }
}

fn graph(label: &str, src: String, window: Rect, membership: impl Fn(Vec2) -> bool + Send + Sync + 'static) -> GraphSheet {
    let h = parse(&src).expect("catalog expression").to_field2().expect("catalog expression in x, y");
    let patch = GraphPatch::new(h, PlanarDomain::rect(window).with_membership(membership));
    GraphSheet { label: label.into(), expr: src, patch, window }
}

fn implicit(src: String, orientation: Orientation) -> Option<(String, ImplicitSurface)> {
    let phi = parse(&src).expect("catalog expression").to_field3().expect("catalog expression in x, y, t");
    Some((src, ImplicitSurface::new(phi, orientation)))
}

fn height(src: &str) -> ScalarField1 {
    parse(src).expect("catalog expression").to_field1(Var::S).expect("catalog expression in s")
}

fn patch(label: &str, p: RuledPatch, s: (f64, f64), r: (f64, f64), reference: Option<usize>) -> PatchEntry {
    PatchEntry { label: label.into(), patch: p, s_sample: s, r_sample: r, reference, s_excluded: vec![] }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Looks up an entry with default parameters.
pub fn gallery_get(name: &str) -> Result<GalleryEntry, GalleryError> {
    gallery_get_with(name, &GalleryParams::default())
}

pub fn gallery_get_with(name: &str, p: &GalleryParams) -> Result<GalleryEntry, GalleryError> {
    p.validate()?;
    match name {
        "char-plane" => Ok(char_plane()),
        "general-plane" => Ok(general_plane(p.plane)),
        "hyperbolic" => Ok(hyperbolic()),
        "catenoid" => Ok(catenoid(p.a, p.u0)),
        "counterexample" => Ok(counterexample()),
        "cylinder" => Ok(cylinder()),
        "gencurve-n" | "gencurve" => Ok(gencurve(p.n)),
        "optreg2" => Ok(optreg2()),
        "iso-profile" => Ok(iso_profile(p.radius)),
        other => {
            // `gencurve-3` style names carry the exponent.
            if let Some(n) = other.strip_prefix("gencurve-").and_then(|v| v.parse::<u32>().ok()) {
                let q = GalleryParams { n, ..p.clone() };
                q.validate()?;
                return Ok(gencurve(n));
            }
            Err(GalleryError::UnknownName(other.to_string()))
        }
    }
}

fn char_plane() -> GalleryEntry {
    let z0 = Vec2::new(1.0, 0.0);
    let seed = SeedCurve::rotation_circle(z0, -3.0, 3.0);
    let rp = build_surface(seed.clone(), ScalarField1::constant(0.0), (-3.0, 3.0), RRange::Fixed(-1.5, 1.5));
    GalleryEntry {
        name: "char-plane".into(),
        params: BTreeMap::new(),
        sheets: vec![graph("t=0", "0".into(), Rect::square(2.0), |_| true)],
        implicit: implicit("t".into(), Orientation::Positive),
        known_seed: Some(KnownSeed {
            z0,
            seed,
            h0: ScalarField1::constant(0.0),
            h0_expr: Some("0".into()),
            kappa: KnownKappa::Constant(-1.0),
            sheet: 0,
            span: 1.0,
        }),
        patches: vec![patch("circle seed, h0 = 0", rp, (-3.0, 3.0), (-1.5, 1.5), Some(0))],
        gsc: None,
        expected_h: 0.0,
        expected_locus: ExpectedLocus::Point(HPoint::ORIGIN),
        notes: vec!["plane t = 0; seeds are circles about the origin with kappa = -1/|z|".into()],
    }
}

fn general_plane(c: [f64; 4]) -> GalleryEntry {
    let [a, b, cc, d] = c;
    let sigma = HPoint::new(-2.0 * b / cc, 2.0 * a / cc, d / cc);
    let base = char_plane();
    let rp = base.patches[0].patch.left_translated(sigma);
    let z0 = Vec2::new(sigma.x + 1.0, sigma.y);
    let w = Rect::new(sigma.x - 2.0, sigma.x + 2.0, sigma.y - 2.0, sigma.y + 2.0);
    GalleryEntry {
        name: "general-plane".into(),
        params: params(&[("a", a), ("b", b), ("c", cc), ("d", d)]),
        sheets: vec![graph("plane", format!("({d} - ({a})*x - ({b})*y)/({cc})"), w, |_| true)],
        implicit: implicit(format!("({a})*x + ({b})*y + ({cc})*t - ({d})"), Orientation::Positive),
        known_seed: Some(KnownSeed { z0, seed: rp.seed.clone(), h0: rp.h0.clone(), h0_expr: None, kappa: KnownKappa::Constant(-1.0), sheet: 0, span: 1.0 }),
        patches: vec![patch("translated circle seed", rp, (-3.0, 3.0), (-1.5, 1.5), Some(0))],
        gsc: None,
        expected_h: 0.0,
        expected_locus: ExpectedLocus::Point(sigma),
        notes: vec![format!("left translate of t = 0 by its characteristic point ({}, {}, {})", sigma.x, sigma.y, sigma.t)],
    }
}

fn hyperbolic() -> GalleryEntry {
    let z0 = Vec2::new(0.0, 1.0);
    let seed = SeedCurve::line(z0, Vec2::new(-1.0, 0.0), -2.0, 2.0);
    let rp = build_surface(seed.clone(), height("-s/2"), (-2.0, 2.0), RRange::Fixed(-1.5, 1.5));
    GalleryEntry {
        name: "hyperbolic".into(),
        params: BTreeMap::new(),
        sheets: vec![graph("t=xy/2", "x*y/2".into(), Rect::square(2.0), |_| true)],
        implicit: implicit("t - x*y/2".into(), Orientation::Positive),
        known_seed: Some(KnownSeed { z0, seed, h0: height("-s/2"), h0_expr: Some("-s/2".into()), kappa: KnownKappa::Constant(0.0), sheet: 0, span: 1.0 }),
        patches: vec![patch("line seed (x - s, y)", rp, (-2.0, 2.0), (-1.5, 1.5), Some(0))],
        gsc: None,
        expected_h: 0.0,
        expected_locus: ExpectedLocus::Curve { description: "the x-axis, t = 0".into(), residual: Arc::new(|g| g.y.abs() + g.t.abs()) },
        notes: vec!["seed through (x, y) is (x - s, y); characteristic roots r = -y".into()],
    }
}

fn catenoid(a: f64, u0: f64) -> GalleryEntry {
    let waist2 = 4.0 / a;
    // Wide enough for the seed from z0 over s in [-1, 0].
    let ext = (2.0 * waist2 + 4.0 / a.sqrt()).sqrt() + 0.3;
    let window = Rect::square(ext);
    let inside = move |z: Vec2| z.norm2() > 1.05 * waist2;
    let sheet_expr = |sg: &str| format!("{u0} {sg} (2/{a})*sqrt({a}*(x^2 + y^2)/4 - 1)");
    let upper = graph("upper", sheet_expr("+"), window, inside);
    let lower = graph("lower", sheet_expr("-"), window, inside);
    let z0 = Vec2::new((2.0 * waist2).sqrt(), 0.0);
    let s_waist = (z0.norm2() - waist2) * a.sqrt() / 4.0;
    let seed = SeedCurve::catenoid(a, Sheet::Upper, z0, -1.5, s_waist);
    let h0 = lifted_height(&upper.patch, &seed);
    let rp = build_surface(seed.clone(), h0.clone(), (-1.5, 0.5 * s_waist), RRange::Fixed(-0.3, 0.3));

    // The two sheets meet along the waist circle.
    let w = seed.point(s_waist).expect("waist on seed");
    let lower_seed = SeedCurve::catenoid(a, Sheet::Lower, w, 0.0, 1.5);
    let lower_h0 = lifted_height(&lower.patch, &lower_seed);
    let gsc = GeneralizedSeedCurve {
        pieces: vec![
            GscPiece { seed: seed.clone(), h0: h0.clone(), interval: (-1.5, s_waist) },
            GscPiece { seed: lower_seed.clone(), h0: lower_h0.clone(), interval: (0.0, 1.5) },
        ],
        joins: vec![Join::Endpoint],
    };
    let lower_patch = build_surface(lower_seed, lower_h0, (0.1, 1.5), RRange::Fixed(-0.3, 0.3));
    GalleryEntry {
        name: "catenoid".into(),
        params: params(&[("a", a), ("u0", u0)]),
        sheets: vec![upper, lower],
        implicit: implicit(format!("(t - {u0})^2 - (4/{a}^2)*({a}*(x^2 + y^2)/4 - 1)"), Orientation::Positive),
        known_seed: Some(KnownSeed { z0, seed, h0, h0_expr: None, kappa: KnownKappa::FromSeed, sheet: 0, span: 1.0 }),
        patches: vec![
            patch("upper sheet seed", rp, (-1.5, 0.5 * s_waist), (-0.3, 0.3), Some(0)),
            patch("lower sheet seed", lower_patch, (0.1, 1.5), (-0.3, 0.3), Some(1)),
        ],
        gsc: Some(gsc),
        expected_h: 0.0,
        expected_locus: ExpectedLocus::Empty,
        notes: vec![
            "two sheets over |z|^2 > 4/a; each needs its own seed".into(),
            "seed radius law |gamma(s)|^2 = |z0|^2 - (4/sqrt(a)) s on the upper sheet".into(),
        ],
    }
}

fn counterexample() -> GalleryEntry {
    let window = Rect::new(0.25, 2.5, -2.5, 2.5);
    let sheet = graph("x>0", "-atanh(atan(y/x))".into(), window, |z| z.x > 0.2 && (z.y / z.x).atan().abs() < 0.9);
    let z0 = Vec2::new(1.0, 0.0);
    let seed = SeedCurve::rotation_circle(z0, -0.9, 0.9);
    let rp = build_surface(seed.clone(), height("-atanh(s)"), (-0.9, 0.9), RRange::Fixed(-0.5, 0.5));
    GalleryEntry {
        name: "counterexample".into(),
        params: BTreeMap::new(),
        sheets: vec![sheet],
        implicit: implicit("y + x*tan(tanh(t))".into(), Orientation::Positive),
        known_seed: Some(KnownSeed {
            z0,
            seed,
            h0: height("-atanh(s)"),
            h0_expr: Some("-atanh(s)".into()),
            kappa: KnownKappa::Constant(-1.0),
            sheet: 0,
            span: 0.8,
        }),
        patches: vec![patch("circle seed, h0 = -atanh(arg z + s/|z|)", rp, (-0.9, 0.9), (-0.5, 0.5), Some(0))],
        gsc: None,
        expected_h: 0.0,
        expected_locus: ExpectedLocus::Empty,
        notes: vec!["y = -x tan(tanh t): entire over the xt-plane, empty characteristic locus, not a vertical plane".into()],
    }
}

fn cylinder() -> GalleryEntry {
    let window = Rect::new(-0.95, 0.95, -2.0, 2.0);
    let strip = |z: Vec2| z.x.abs() < 0.96;
    let upper = graph("upper", "x*y/2 + sqrt(1 - x^2)".into(), window, strip);
    let lower = graph("lower", "x*y/2 - sqrt(1 - x^2)".into(), window, strip);
    let z0 = Vec2::new(0.5, 0.0);
    let seed = SeedCurve::line(z0, Vec2::new(1.0, 0.0), -1.4, 0.45);
    let h0_src = "sqrt(1 - (0.5 + s)^2)";
    let rp = build_surface(seed.clone(), height(h0_src), (-1.4, 0.45), RRange::Fixed(-2.0, 2.0));
    let line = SeedCurve::line(Vec2::ZERO, Vec2::new(1.0, 0.0), -1.0, 1.0);
    let s1 = build_surface(line.clone(), height("sqrt(1 - s^2)"), (-1.0, 1.0), RRange::All);
    let s2 = build_surface(line, height("-sqrt(1 - s^2)"), (-1.0, 1.0), RRange::All);
    // Gluing needs the second piece traversed backwards to close up.
    let back = SeedCurve::line(Vec2::ZERO, Vec2::new(-1.0, 0.0), -1.0, 1.0);
    let gsc = GeneralizedSeedCurve {
        pieces: vec![
            GscPiece { seed: s1.seed.clone(), h0: s1.h0.clone(), interval: (-1.0, 1.0) },
            GscPiece { seed: back, h0: height("-sqrt(1 - s^2)"), interval: (-1.0, 1.0) },
        ],
        joins: vec![Join::Endpoint],
    };
    GalleryEntry {
        name: "cylinder".into(),
        params: BTreeMap::new(),
        sheets: vec![upper, lower],
        implicit: implicit("(t - x*y/2)^2 - (1 - x^2)".into(), Orientation::Positive),
        known_seed: Some(KnownSeed { z0, seed, h0: height(h0_src), h0_expr: Some(h0_src.into()), kappa: KnownKappa::Constant(0.0), sheet: 0, span: 0.4 }),
        patches: vec![
            patch("line seed through (0.5, 0)", rp, (-1.35, 0.4), (-2.0, 2.0), Some(0)),
            patch("S1: (s, 0), h0 = sqrt(1 - s^2)", s1, (-0.95, 0.95), (-2.0, 2.0), Some(0)),
            patch("S2: (s, 0), h0 = -sqrt(1 - s^2)", s2, (-0.95, 0.95), (-2.0, 2.0), Some(1)),
        ],
        gsc: Some(gsc),
        expected_h: 0.0,
        expected_locus: ExpectedLocus::Curve { description: "x = y (t - xy/2)".into(), residual: Arc::new(|g| g.x - g.y * (g.t - g.x * g.y / 2.0)) },
        notes: vec!["(t - xy/2)^2 = 1 - x^2, glued from two straight seeds; nu = (+-1, 0) off the characteristic curve".into()],
    }
}

fn gencurve(n: u32) -> GalleryEntry {
    let nf = n as f64;
    let odd = n % 2 == 1;
    let (sheets, gsc) = if odd {
        let s = graph("x!=0", format!("x*y/2 + sign(x)*abs(x)^(1/{n})"), Rect::square(2.0), |z| z.x.abs() > 0.1);
        let neg =
            GscPiece { seed: SeedCurve::line(Vec2::ZERO, Vec2::new(1.0, 0.0), -1.0, 0.0), h0: height(&format!("-abs(s)^(1/{n})")), interval: (-1.0, 0.0) };
        let pos = GscPiece { seed: SeedCurve::line(Vec2::ZERO, Vec2::new(1.0, 0.0), 0.0, 1.0), h0: height(&format!("s^(1/{n})")), interval: (0.0, 1.0) };
        (vec![s], GeneralizedSeedCurve { pieces: vec![neg, pos], joins: vec![Join::Endpoint] })
    } else {
        let w = Rect::new(0.1, 2.0, -2.0, 2.0);
        let up = graph("upper", format!("x*y/2 + x^(1/{n})"), w, |z| z.x > 0.05);
        let lo = graph("lower", format!("x*y/2 - x^(1/{n})"), w, |z| z.x > 0.05);
        let a = GscPiece { seed: SeedCurve::line(Vec2::ZERO, Vec2::new(-1.0, 0.0), -1.0, 0.0), h0: height(&format!("abs(s)^(1/{n})")), interval: (-1.0, 0.0) };
        let b = GscPiece { seed: SeedCurve::line(Vec2::ZERO, Vec2::new(1.0, 0.0), 0.0, 1.0), h0: height(&format!("-s^(1/{n})")), interval: (0.0, 1.0) };
        (vec![up, lo], GeneralizedSeedCurve { pieces: vec![a, b], joins: vec![Join::Endpoint] })
    };
    let z0 = Vec2::new(1.0, 0.0);
    let seed = SeedCurve::line(z0, Vec2::new(-1.0, 0.0), -0.85, 0.85);
    let h0_src = format!("(1 - s)^(1/{n})");
    let rp = build_surface(seed.clone(), height(&h0_src), (-0.85, 0.85), RRange::Fixed(-2.0, 2.0));
    GalleryEntry {
        name: format!("gencurve-{n}"),
        params: params(&[("n", nf)]),
        sheets,
        implicit: implicit(format!("(t - x*y/2)^{n} - x"), Orientation::Positive),
        known_seed: Some(KnownSeed { z0, seed, h0: height(&h0_src), h0_expr: Some(h0_src), kappa: KnownKappa::Constant(0.0), sheet: 0, span: 0.8 }),
        patches: vec![patch("line seed through (1, 0)", rp, (-0.85, 0.85), (-2.0, 2.0), Some(0))],
        gsc: Some(gsc),
        expected_h: 0.0,
        expected_locus: ExpectedLocus::Curve {
            description: format!("n x y + (t - xy/2) = 0 with n = {n}"),
            residual: Arc::new(move |g| nf * g.x * g.y + (g.t - g.x * g.y / 2.0)),
        },
        notes: vec![if odd {
            "odd n: one graph over x != 0, joined along the vertical line (0, r, 0)".into()
        } else {
            "even n: two sheets over x > 0; only a generalized seed describes the whole surface".into()
        }],
    }
}

/// Seed with turning angle `1/2 + s|s|/2` from the origin at `s = -1`, so
/// `kappa = -|s|`, and height making `W0 = -1`.
pub fn optreg2_patch() -> RuledPatch {
    let psi = ScalarField1::new(|s: f64| 0.5 + 0.5 * s * s.abs()).with_d1(|s: f64| s.abs());
    let seed = SeedCurve::from_turning_angle(Vec2::ZERO, -1.0, psi, -1.0, 1.0, "turning angle 1/2 + s|s|/2");
    let c = seed.clone();
    let h0 = crate::ruled::height_from_derivative(-1.0, 0.0, move |s| {
        let j = c.jet(s).expect("seed in range");
        -0.5 * j.d1.dot(j.pos.perp()) + 1.0
    });
    build_surface(seed, h0, (-1.0, 1.0), RRange::All)
}

fn optreg2() -> GalleryEntry {
    let mut pe = patch("turning-angle seed, W0 = -1", optreg2_patch(), (-0.99, 0.99), (-3.0, 3.0), None);
    pe.s_excluded = vec![(-5e-3, 5e-3)];
    GalleryEntry {
        name: "optreg2".into(),
        params: BTreeMap::new(),
        sheets: vec![],
        implicit: None,
        known_seed: None,
        patches: vec![pe],
        gsc: None,
        expected_h: 0.0,
        expected_locus: ExpectedLocus::Kinked { s: 0.0, r: 1.0, jump: 1.0 },
        notes: vec!["kappa = -|s|; near characteristic root 2/(1 + sqrt(1 + 2|s|)) has slopes +1/2 and -1/2 at s = 0".into()],
    }
}

fn iso_profile(r: f64) -> GalleryEntry {
    let src = format!("0.25*sqrt(x^2 + y^2)*sqrt({r}^2 - x^2 - y^2) - ({r}^2/4)*atan(sqrt(x^2 + y^2)/sqrt({r}^2 - x^2 - y^2)) + pi*{r}^2/8");
    let (lo, hi) = (0.05 * r, 0.95 * r);
    let sheet = graph("upper", src.clone(), Rect::square(hi), move |z| {
        let n = z.norm();
        n >= lo && n <= hi
    });
    GalleryEntry {
        name: "iso-profile".into(),
        params: params(&[("R", r)]),
        sheets: vec![sheet],
        implicit: implicit(format!("t - ({src})"), Orientation::Positive),
        known_seed: None,
        patches: vec![],
        gsc: None,
        expected_h: 2.0 / r,
        expected_locus: ExpectedLocus::Empty,
        notes: vec![format!("upper profile of radius {r}; constant H-mean curvature 2/R, sampled on {lo} <= |z| <= {hi}")],
    }
}

/// Verification thresholds.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub h_analytic: f64,
    pub h_fd: f64,
    pub seed: f64,
    pub kappa: f64,
    pub roundtrip: f64,
    pub w: f64,
    pub ode: f64,
    pub jacobian: f64,
    pub closed_forms: f64,
    pub locus: f64,
    pub built_h: f64,
    pub slope_jump: f64,
    /// Nodes with `W` at or below this are left out of curvature scans.
    pub w_min: f64,
    pub grid: usize,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            h_analytic: 1e-8,
            h_fd: 1e-4,
            seed: 1e-8,
            kappa: 1e-6,
            roundtrip: 1e-5,
            w: 1e-6,
            ode: 1e-6,
            jacobian: 1e-6,
            closed_forms: 1e-10,
            locus: 1e-6,
            built_h: 1e-5,
            slope_jump: 1e-3,
            w_min: 1e-2,
            grid: 101,
            exec: Execution::Parallel,
        }
    }
}

/// One labeled measurement against a threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { name: name.into(), measured, threshold, pass: measured <= threshold, detail: None }
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { name: name.into(), measured, threshold, pass: measured >= threshold, detail: None }
    }

    pub fn flag(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), measured: ok as u8 as f64, threshold: 1.0, pass: ok, detail: Some(detail.into()) }
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub entry: String,
    pub params: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn gallery_verify(name: &str, p: &GalleryParams, tol: &Tolerances) -> Result<VerifyReport, GalleryError> {
    let e = gallery_get_with(name, p)?;
    Ok(verify_entry(&e, tol))
}

/// Runs every applicable check on an entry.
pub fn verify_entry(e: &GalleryEntry, tol: &Tolerances) -> VerifyReport {
    let mut checks = Vec::new();
    closed_form_checks(e, tol, &mut checks);
    for sh in &e.sheets {
        curvature_checks(e, sh, tol, &mut checks);
        char_scan_check(e, sh, tol, &mut checks);
    }
    if let Some(k) = &e.known_seed {
        seed_checks(e, k, tol, &mut checks);
    }
    for pe in &e.patches {
        patch_checks(e, pe, tol, &mut checks);
    }
    if let Some(g) = &e.gsc {
        let v = validate_gsc(g, 1e-9);
        let gap = v.joins.iter().map(|j| j.gap).fold(0.0, f64::max);
        checks.push(Check::at_most("gsc-joins", gap, 1e-9));
        let (_, ks) = constant_curvature_test(g, 1e-6, 51);
        let dev = ks.iter().map(|k| k.max_dev).fold(0.0, f64::max);
        if e.name != "catenoid" {
            checks.push(Check::at_most("gsc-constant-curvature", dev, 1e-6));
        }
    }
    specific_checks(e, tol, &mut checks);
    let pass = checks.iter().all(|c| c.pass);
    VerifyReport { entry: e.name.clone(), params: e.params.clone(), checks, pass }
}

fn closed_form_checks(e: &GalleryEntry, tol: &Tolerances, out: &mut Vec<Check>) {
    let Some((_, imp)) = &e.implicit else { return };
    for sh in &e.sheets {
        let grid = Grid2::on_rect(sh.patch.domain.clone(), sh.window, 41, 41).expect("catalog window");
        let worst = grid.nodes.iter().filter(|n| sh.patch.domain.contains(n.p)).map(|n| imp.value(sh.patch.point(n.p)).abs()).fold(0.0, f64::max);
        out.push(Check::at_most(format!("closed-forms-agree[{}]", sh.label), worst, tol.closed_forms));
    }
}

fn curvature_checks(e: &GalleryEntry, sh: &GraphSheet, tol: &Tolerances, out: &mut Vec<Check>) {
    let grid = Grid2::on_rect(sh.patch.domain.clone(), sh.window, tol.grid, tol.grid).expect("catalog window");
    let analytic = curvature_scan(&sh.patch, &grid, tol.w_min, e.expected_h, tol.exec);
    let fd = curvature_scan(&sh.patch.fd_only(), &grid, tol.w_min, e.expected_h, tol.exec);
    let what = if e.expected_h == 0.0 { "max |H|".to_string() } else { format!("max |H - {}|", e.expected_h) };
    let analytic_tol = if e.expected_h == 0.0 { tol.h_analytic } else { tol.h_fd };
    out.push(
        Check::at_most(format!("h-analytic[{}]", sh.label), analytic.max_dev, analytic_tol)
            .with_detail(format!("{what} over {} nodes, {} skipped", analytic.evaluated, analytic.skipped)),
    );
    out.push(Check::at_most(format!("h-fd[{}]", sh.label), fd.max_dev, tol.h_fd).with_detail(format!("{what} over {} nodes", fd.evaluated)));
    out.push(Check::at_least(format!("h-nodes[{}]", sh.label), analytic.evaluated as f64, (tol.grid * tol.grid / 10) as f64));
}

fn char_scan_check(e: &GalleryEntry, sh: &GraphSheet, tol: &Tolerances, out: &mut Vec<Check>) {
    let n = tol.grid.min(61);
    let grid = Grid2::on_rect(sh.patch.domain.clone(), sh.window, n, n).expect("catalog window");
    let scan = characteristic_scan(&sh.patch, &grid, sh.patch.eps_char.max(1e-9), tol.exec);
    let name = format!("characteristic-set[{}]", sh.label);
    let c = match &e.expected_locus {
        ExpectedLocus::Empty => Check::at_most(name, scan.components.len() as f64, 0.0).with_detail("number of components"),
        ExpectedLocus::Point(p) => {
            let ok = scan.components.len() == 1 && scan.components[0].isolated;
            let err = if ok {
                let c = scan.components[0].centroid();
                c.dist(Vec2::new(p.x, p.y)) + (sh.patch.height(c) - p.t).abs()
            } else {
                f64::INFINITY
            };
            Check::at_most(name, err, tol.locus).with_detail(format!("{} component(s); distance to expected point", scan.components.len()))
        }
        ExpectedLocus::Curve { residual, .. } => {
            let pts: Vec<Vec2> = scan.components.iter().flat_map(|c| c.points.iter().copied()).collect();
            let worst = pts.iter().map(|z| residual(sh.patch.point(*z)).abs()).fold(0.0, f64::max);
            let ok = !pts.is_empty() && scan.components.iter().any(|c| !c.isolated);
            Check::at_most(name, if ok { worst } else { f64::INFINITY }, tol.locus).with_detail(format!(
                "{} component(s), {} points; max curve residual",
                scan.components.len(),
                pts.len()
            ))
        }
        ExpectedLocus::Kinked { .. } => return,
    };
    out.push(c);
}

fn seed_checks(e: &GalleryEntry, k: &KnownSeed, tol: &Tolerances, out: &mut Vec<Check>) {
    let sheet = &e.sheets[k.sheet].patch;
    let ext = match extract_seed(sheet, k.z0, k.span, crate::fields::DEFAULT_RK4_STEP) {
        Ok(c) => c,
        Err(err) => {
            out.push(Check::flag("seed-vs-known", false, err.to_string()));
            return;
        }
    };
    let (lo, hi) = (ext.s_min.max(k.seed.s_min), ext.s_max.min(k.seed.s_max));
    let ss: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    let mut pos_err: f64 = 0.0;
    let mut kappa_err: f64 = 0.0;
    for &s in &ss {
        if let (Ok(a), Ok(b)) = (ext.point(s), k.seed.point(s)) {
            pos_err = pos_err.max(a.dist(b) / s.abs().max(1.0));
        }
        let want = match k.kappa {
            KnownKappa::Constant(c) => c,
            KnownKappa::FromSeed => curvature(&k.seed, s).unwrap_or(f64::NAN),
        };
        if let Ok(got) = curvature(&ext, s) {
            kappa_err = kappa_err.max((got - want).abs());
        }
    }
    out.push(Check::at_most("seed-vs-known", pos_err, tol.seed).with_detail(format!("extracted on [{lo:.4}, {hi:.4}]; error per unit arclength")));
    out.push(Check::at_most("kappa-vs-known", kappa_err, tol.kappa));
    let h0_err = ss.iter().filter_map(|&s| ext.point(s).ok().map(|z| (sheet.height(z) - k.h0.value(s)).abs())).fold(0.0, f64::max);
    out.push(Check::at_most("h0-vs-known", h0_err, tol.roundtrip));
    match roundtrip(sheet, k.z0, k.span, 0.3, crate::fields::DEFAULT_RK4_STEP) {
        Ok(r) => out.push(Check::at_most("roundtrip", r.max_error, tol.roundtrip).with_detail(format!("{} matched points", r.samples))),
        Err(err) => out.push(Check::flag("roundtrip", false, err.to_string())),
    }
}

/// Low-discrepancy points in `[0, 1)^2`.
pub fn quasi_random(n: usize) -> Vec<(f64, f64)> {
    const G: f64 = 1.324_717_957_244_746;
    let (a1, a2) = (1.0 / G, 1.0 / (G * G));
    (1..=n).map(|k| ((0.5 + a1 * k as f64).fract(), (0.5 + a2 * k as f64).fract())).collect()
}

fn chart_grid(pe: &PatchEntry, ns: usize, nr: usize) -> Vec<(f64, f64)> {
    let (s0, s1) = pe.s_sample;
    let (r0, r1) = pe.r_sample;
    let mut out = Vec::with_capacity(ns * nr);
    for i in 0..ns {
        let s = s0 + (s1 - s0) * i as f64 / (ns - 1) as f64;
        if pe.s_excluded.iter().any(|(a, b)| s >= *a && s <= *b) {
            continue;
        }
        for j in 0..nr {
            out.push((s, r0 + (r1 - r0) * j as f64 / (nr - 1) as f64));
        }
    }
    out
}

fn patch_checks(e: &GalleryEntry, pe: &PatchEntry, tol: &Tolerances, out: &mut Vec<Check>) {
    let p = &pe.patch;
    let label = &pe.label;
    let pts = chart_grid(pe, 41, 41);
    let valid: Vec<(f64, f64)> = pts.iter().copied().filter(|&(s, r)| p.graph_valid(s, r)).collect();

    let w_err = par::map(tol.exec, &valid, |&(s, r)| match (p.w_field(s, r), p.w_direct(s, r)) {
        (Ok(a), Ok(b)) => (a - b).abs(),
        _ => 0.0,
    })
    .into_iter()
    .fold(0.0, f64::max);
    out.push(Check::at_most(format!("w-consistency[{label}]"), w_err, tol.w).with_detail(format!("{} graph points", valid.len())));

    let ode = par::map(tol.exec, &valid, |&(s, r)| p.w_ode_residual(s, r).unwrap_or(0.0)).into_iter().fold(0.0, f64::max);
    out.push(Check::at_most(format!("ode-residual[{label}]"), ode, tol.ode));

    let (s0, s1) = pe.s_sample;
    let (r0, r1) = pe.r_sample;
    let jac: Vec<(f64, f64)> = quasi_random(1000).into_iter().map(|(u, v)| (s0 + 0.01 + (s1 - s0 - 0.02) * u, r0 + (r1 - r0) * v)).collect();
    let jac_err = par::map(tol.exec, &jac, |&(s, r)| match (f_jacobian_det(&p.seed, s, r), f_jacobian_det_fd(&p.seed, s, r, 1e-5)) {
        (Ok(a), Ok(b)) => (a - b).abs(),
        _ => f64::INFINITY,
    })
    .into_iter()
    .fold(0.0, f64::max);
    out.push(Check::at_most(format!("jacobian-identity[{label}]"), jac_err, tol.jacobian).with_detail("1000 chart samples"));

    let mut built_max: f64 = 0.0;
    let mut built_n = 0;
    let mut ranges = vec![pe.s_sample];
    for (a, b) in &pe.s_excluded {
        ranges = ranges.into_iter().flat_map(|(lo, hi)| [(lo, hi.min(*a)), (lo.max(*b), hi)]).filter(|(lo, hi)| hi > lo).collect();
    }
    for rg in ranges {
        let m = minimality_sample(p, rg, pe.r_sample, 15, 15, tol.exec);
        built_max = built_max.max(m.max_abs);
        built_n += m.evaluated;
    }
    out.push(Check::at_most(format!("built-h[{label}]"), built_max, tol.built_h).with_detail(format!("{built_n} graph points")));

    let opts = LocusOptions { samples: 201, reference: e.reference_graph(pe).cloned(), exec: tol.exec, ..Default::default() };
    let sub = RuledPatch { s_range: pe.s_sample, ..p.clone() };
    let rep = characteristic_locus(&sub, &opts);
    let contact = rep.max_contact_residual();
    out.push(Check::at_most(format!("locus-contact[{label}]"), contact, 1e-9).with_detail(format!("{} roots", rep.points.len())));
    out.push(Check::at_most(format!("locus-w[{label}]"), rep.max_w_check(), tol.locus));
    let name = format!("locus[{label}]");
    let c = match &e.expected_locus {
        ExpectedLocus::Empty => Check::at_most(name, rep.points.len() as f64, 0.0).with_detail("number of roots"),
        ExpectedLocus::Point(g) => {
            let err = rep.points.iter().map(|q| q.image.euclid_dist(g)).fold(0.0, f64::max);
            let ok = !rep.points.is_empty();
            Check::at_most(name, if ok { err } else { f64::INFINITY }, tol.locus).with_detail(format!("{} roots", rep.points.len()))
        }
        ExpectedLocus::Curve { residual, .. } => {
            let err = rep.points.iter().map(|q| residual(q.image).abs()).fold(0.0, f64::max);
            Check::at_most(name, err, tol.locus).with_detail(format!("{} roots", rep.points.len()))
        }
        ExpectedLocus::Kinked { s, r, jump } => {
            let got = near_root(p, *s, &opts).unwrap_or(f64::NAN);
            out.push(Check::at_most("locus-value", (got - r).abs(), 1e-9).with_detail(format!("r({s}) = {got}")));
            let (l, rr) = one_sided_slopes(p, *s, 1e-3, &opts).unwrap_or((f64::NAN, f64::NAN));
            out.push(
                Check::at_most("slope-jump", ((rr - l).abs() - jump).abs(), tol.slope_jump).with_detail(format!("left slope {l:.6}, right slope {rr:.6}")),
            );
            let found = rep.slope_jumps.len() == 1 && (rep.slope_jumps[0].s - s).abs() < 1e-9;
            Check::flag(name, found, format!("{} corner(s) flagged", rep.slope_jumps.len()))
        }
    };
    out.push(c);
}

fn specific_checks(e: &GalleryEntry, tol: &Tolerances, out: &mut Vec<Check>) {
    match e.name.as_str() {
        "catenoid" => {
            let k = e.known_seed.as_ref().expect("catenoid seed");
            let a = e.params["a"];
            if let Ok(ext) = extract_seed(&e.sheets[0].patch, k.z0, k.span, crate::fields::DEFAULT_RK4_STEP) {
                let lo = ext.s_min.max(-1.0);
                let err = (0..=100)
                    .map(|i| lo * (1.0 - i as f64 / 100.0))
                    .filter_map(|s| ext.point(s).ok().map(|z| (z.norm2() - (k.z0.norm2() - 4.0 / a.sqrt() * s)).abs()))
                    .fold(0.0, f64::max);
                out.push(Check::at_most("radius-law", err, 1e-6).with_detail(format!("|gamma|^2 = |z0|^2 - (4/sqrt(a)) s on [{lo:.3}, 0]")));
            } else {
                out.push(Check::flag("radius-law", false, "extraction failed"));
            }
        }
        "counterexample" => {
            let y = parse("-x*tan(tanh(t))").expect("closed form");
            let pts: Vec<HPoint> = (0..81)
                .flat_map(|i| (0..81).map(move |j| (-3.0 + 6.0 * i as f64 / 80.0, -3.0 + 6.0 * j as f64 / 80.0)))
                .map(|(x, t)| HPoint::new(x, t, y.eval(&crate::expr::Env::xyt(x, 0.0, t))))
                .collect();
            let finite = pts.iter().all(|g| g.is_finite());
            let entire = finite && vertical_line_test(&pts, 1e-3, 1e-12).is_ok();
            out.push(Check::flag("entire-over-xt-plane", entire, "y(x, t) finite and single-valued on [-3, 3]^2"));
            // Distance from the best vertical plane a x + b y = c.
            let pl: Vec<Vec2> = pts.iter().map(|g| Vec2::new(g.x, g.t)).collect();
            let res = vertical_plane_residual(&pl);
            out.push(Check::at_least("not-a-vertical-plane", res, 1e-3).with_detail("rms distance to best vertical plane"));
        }
        "cylinder" => {
            let imp = &e.implicit.as_ref().expect("implicit").1;
            let mut worst: f64 = 0.0;
            let mut nu_err: f64 = 0.0;
            for pe in &e.patches[1..] {
                for (s, r) in mesh_params((-1.0, 1.0), (-2.0, 2.0), 50, 50) {
                    let g = pe.patch.embed(s, r).expect("chart point");
                    worst = worst.max(imp.value(g).abs());
                    if s.abs() < 1.0 {
                        if let Ok(pq) = pe.patch.pq_direct(s, r) {
                            let w = pq.norm();
                            if w > 1e-6 {
                                let nu = pq * (1.0 / w);
                                let d = nu.dist(Vec2::new(1.0, 0.0)).min(nu.dist(Vec2::new(-1.0, 0.0)));
                                nu_err = nu_err.max(d);
                            }
                        }
                    }
                }
            }
            out.push(Check::at_most("implicit-on-mesh", worst, 1e-9).with_detail("(t - xy/2)^2 - (1 - x^2) at S1 and S2 vertices"));
            out.push(Check::at_most("gauss-map-piecewise-constant", nu_err, 1e-9).with_detail("distance of nu from (+-1, 0)"));
        }
        name if name.starts_with("gencurve-") => {
            let imp = &e.implicit.as_ref().expect("implicit").1;
            let n = e.params["n"] as u32;
            let sheets = count_sheets(imp, Vec2::new(1.0, 0.3), (-20.0, 20.0), 4001);
            let want = if n.is_multiple_of(2) { 2 } else { 1 };
            out.push(Check::flag("sheets-over-xy", sheets == want, format!("{sheets} sheet(s) over (1, 0.3), expected {want}")));
        }
        _ => {}
    }
    let _ = tol;
}

/// Parameter grid used for meshes and vertex checks: `ns x nr` points.
pub fn mesh_params(s: (f64, f64), r: (f64, f64), ns: usize, nr: usize) -> Vec<(f64, f64)> {
    (0..ns).flat_map(|i| (0..nr).map(move |j| (s.0 + (s.1 - s.0) * i as f64 / (ns - 1) as f64, r.0 + (r.1 - r.0) * j as f64 / (nr - 1) as f64))).collect()
}

/// Number of sign changes of `phi` along the vertical line over `z`.
pub fn count_sheets(s: &ImplicitSurface, z: Vec2, t: (f64, f64), n: usize) -> usize {
    let vals: Vec<f64> = (0..n).map(|i| s.value(HPoint::new(z.x, z.y, t.0 + (t.1 - t.0) * i as f64 / (n - 1) as f64))).collect();
    vals.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count()
}

/// RMS distance of planar points `(x, y)` from their best-fit line, i.e.
/// of the samples from the best vertical plane.
fn vertical_plane_residual(pts: &[Vec2]) -> f64 {
    let n = pts.len() as f64;
    let c = pts.iter().fold(Vec2::ZERO, |a, p| a + *p) * (1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let d = *p - c;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let lmin = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
    (lmin / n).sqrt()
}
