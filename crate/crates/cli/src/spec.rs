//! JSON surface specifications.

use std::path::{Path, PathBuf};

use hmin_core::expr::{parse, Expr, Var};
use hmin_core::fields::{PlanarDomain, Rect, ScalarField1, Vec2, DEFAULT_FD_STEP, DEFAULT_RK4_STEP};
use hmin_core::gallery::GalleryParams;
use hmin_core::ruled::{build_surface, RRange, RuledPatch};
use hmin_core::seed::{CurveJet, SeedCurve};
use hmin_core::surface::{GraphPatch, ImplicitSurface, Orientation, DEFAULT_EPS_CHAR};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A whole spec file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub surface: SurfaceKind,
    #[serde(default)]
    pub numeric: Numeric,
    /// Sampling grid, overridden by `--grid`.
    #[serde(default)]
    pub grid: Option<[usize; 2]>,
    /// Start point and span for `seed`.
    #[serde(default)]
    pub seed: Option<SeedRequest>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SurfaceKind {
    Graph {
        h: String,
        domain: RectSpec,
    },
    Implicit {
        phi: String,
        #[serde(default)]
        orientation: OrientationSpec,
        window: RectSpec,
        t_range: [f64; 2],
    },
    Ruled {
        seed: SeedSpec,
        h0: String,
        s_range: [f64; 2],
        r_range: [f64; 2],
    },
    Gallery {
        name: String,
        #[serde(default)]
        params: GalleryParams,
    },
}

impl SurfaceKind {
    pub fn kind(&self) -> &'static str {
        match self {
            SurfaceKind::Graph { .. } => "graph",
            SurfaceKind::Implicit { .. } => "implicit",
            SurfaceKind::Ruled { .. } => "ruled",
            SurfaceKind::Gallery { .. } => "gallery",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl RectSpec {
    pub fn to_rect(self) -> Result<Rect, CliError> {
        let r = Rect::new(self.xmin, self.xmax, self.ymin, self.ymax);
        if !(r.is_finite() && r.xmin < r.xmax && r.ymin < r.ymax) {
            return Err(CliError::spec(format!("empty or non-finite rectangle {self:?}")));
        }
        Ok(r)
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationSpec {
    #[default]
    Positive,
    Negative,
}

/// Seed as a pair of arclength expressions in `s`, or a CSV of samples in
/// the format written by `hmin seed`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SeedSpec {
    Expr { x: String, y: String },
    File { samples: PathBuf },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRequest {
    pub z0: [f64; 2],
    #[serde(default)]
    pub span: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Derivatives {
    #[default]
    Analytic,
    Fd,
}

/// Numeric settings, echoed into every report.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numeric {
    pub fd_step: f64,
    pub rk4_step: f64,
    pub eps_char: f64,
    pub tol_h_analytic: f64,
    pub tol_h_fd: f64,
    /// Roots, contact and `W` agreement.
    pub tol_locus: f64,
    /// Nodes with `W` at or below this are left out of curvature checks.
    pub w_min: f64,
    pub derivatives: Derivatives,
}

impl Default for Numeric {
    fn default() -> Self {
        Self {
            fd_step: DEFAULT_FD_STEP,
            rk4_step: DEFAULT_RK4_STEP,
            eps_char: DEFAULT_EPS_CHAR,
            tol_h_analytic: 1e-8,
            tol_h_fd: 1e-4,
            tol_locus: 1e-6,
            w_min: 1e-2,
            derivatives: Derivatives::Analytic,
        }
    }
}

impl Numeric {
    /// Applies one `NAME=VALUE` override.
    pub fn set(&mut self, kv: &str) -> Result<(), CliError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::spec(format!("--tol expects NAME=VALUE, got `{kv}`")))?;
        if k == "derivatives" {
            self.derivatives = match v {
                "analytic" => Derivatives::Analytic,
                "fd" => Derivatives::Fd,
                _ => return Err(CliError::spec(format!("derivatives must be analytic or fd, got `{v}`"))),
            };
            return Ok(());
        }
        let x: f64 = v.parse().map_err(|_| CliError::spec(format!("--tol {k}: `{v}` is not a number")))?;
        let slot = match k {
            "fd_step" => &mut self.fd_step,
            "rk4_step" => &mut self.rk4_step,
            "eps_char" => &mut self.eps_char,
            "tol_h_analytic" => &mut self.tol_h_analytic,
            "tol_h_fd" => &mut self.tol_h_fd,
            "tol_locus" => &mut self.tol_locus,
            "w_min" => &mut self.w_min,
            _ => return Err(CliError::spec(format!("unknown numeric setting `{k}`"))),
        };
        *slot = x;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (k, v) in [
            ("fd_step", self.fd_step),
            ("rk4_step", self.rk4_step),
            ("eps_char", self.eps_char),
            ("tol_h_analytic", self.tol_h_analytic),
            ("tol_h_fd", self.tol_h_fd),
            ("tol_locus", self.tol_locus),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::spec(format!("{k} must be positive, got {v}")));
            }
        }
        if !(self.w_min >= 0.0 && self.w_min.is_finite()) {
            return Err(CliError::spec(format!("w_min must be non-negative, got {}", self.w_min)));
        }
        Ok(())
    }

    /// H tolerance for the derivative mode in use.
    pub fn tol_h(&self) -> f64 {
        match self.derivatives {
            Derivatives::Analytic => self.tol_h_analytic,
            Derivatives::Fd => self.tol_h_fd,
        }
    }
}

/// A spec file with its raw bytes, for digests and relative paths.
pub struct LoadedSpec {
    pub spec: SurfaceSpec,
    pub bytes: Vec<u8>,
    pub dir: PathBuf,
}

pub fn load(path: &Path) -> Result<LoadedSpec, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let spec: SurfaceSpec = serde_json::from_slice(&bytes).map_err(|e| CliError::spec(format!("{}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedSpec { spec, bytes, dir })
}

pub fn parse_expr(src: &str) -> Result<Expr, CliError> {
    parse(src).map_err(|source| CliError::Expr { src: src.to_string(), source })
}

fn range(name: &str, r: [f64; 2]) -> Result<(f64, f64), CliError> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
        return Err(CliError::spec(format!("{name} must be an increasing pair, got {r:?}")));
    }
    Ok((r[0], r[1]))
}

pub fn graph_patch(h: &str, domain: RectSpec, num: &Numeric) -> Result<GraphPatch, CliError> {
    let e = parse_expr(h)?;
    let mut field = e.to_field2().map_err(|source| CliError::Expr { src: h.to_string(), source })?.with_fd_step(num.fd_step);
    if num.derivatives == Derivatives::Fd {
        field = field.fd_only();
    }
    Ok(GraphPatch::new(field, PlanarDomain::rect(domain.to_rect()?)).with_eps_char(num.eps_char))
}

pub struct ImplicitSpec {
    pub surface: ImplicitSurface,
    pub window: Rect,
    pub t_range: (f64, f64),
}

pub fn implicit_surface(phi: &str, orientation: OrientationSpec, window: RectSpec, t_range: [f64; 2], num: &Numeric) -> Result<ImplicitSpec, CliError> {
    let e = parse_expr(phi)?;
    let mut field = e.to_field3().map_err(|source| CliError::Expr { src: phi.to_string(), source })?.with_fd_step(num.fd_step);
    if num.derivatives == Derivatives::Fd {
        field = field.fd_only();
    }
    let o = match orientation {
        OrientationSpec::Positive => Orientation::Positive,
        OrientationSpec::Negative => Orientation::Negative,
    };
    Ok(ImplicitSpec { surface: ImplicitSurface::new(field, o), window: window.to_rect()?, t_range: range("t_range", t_range)? })
}

/// Seed from expressions or a sample file, plus any extra bytes that feed
/// the inputs digest.
pub fn seed_curve(spec: &SeedSpec, s_range: (f64, f64), dir: &Path) -> Result<(SeedCurve, Vec<u8>), CliError> {
    match spec {
        SeedSpec::Expr { x, y } => Ok((expr_seed(x, y, s_range)?, Vec::new())),
        SeedSpec::File { samples } => {
            let path = if samples.is_absolute() { samples.clone() } else { dir.join(samples) };
            let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            let curve = crate::tables::read_seed_csv(&bytes, &path.display().to_string())?;
            if curve.s_min > s_range.0 + 1e-12 || curve.s_max < s_range.1 - 1e-12 {
                return Err(CliError::spec(format!("s_range [{}, {}] leaves the samples' range [{}, {}]", s_range.0, s_range.1, curve.s_min, curve.s_max)));
            }
            Ok((curve, bytes))
        }
    }
}

fn expr_seed(x: &str, y: &str, s_range: (f64, f64)) -> Result<SeedCurve, CliError> {
    let fx = field1(x, Var::S)?;
    let fy = field1(y, Var::S)?;
    let label = format!("({x}, {y})");
    let (a, b) = (fx.clone(), fy.clone());
    let curve = SeedCurve::analytic(s_range.0, s_range.1, label, move |s| CurveJet {
        pos: Vec2::new(a.value(s), b.value(s)),
        d1: Vec2::new(a.d1(s), b.d1(s)),
        d2: Vec2::new(a.d2(s), b.d2(s)),
    });
    for s in curve.sample_params(1001) {
        let j = curve.jet(s).expect("sample in range");
        let speed = j.d1.norm();
        if !((speed - 1.0).abs() <= 1e-6) {
            return Err(CliError::spec(format!("seed ({x}, {y}) is not parameterized by arclength: |gamma'({s})| = {speed}")));
        }
    }
    Ok(curve)
}

pub fn field1(src: &str, var: Var) -> Result<ScalarField1, CliError> {
    parse_expr(src)?.to_field1(var).map_err(|source| CliError::Expr { src: src.to_string(), source })
}

pub struct RuledSpec {
    pub patch: RuledPatch,
    pub s_range: (f64, f64),
    pub r_range: (f64, f64),
    pub extra_input: Vec<u8>,
}

pub fn ruled_patch(seed: &SeedSpec, h0: &str, s_range: [f64; 2], r_range: [f64; 2], dir: &Path) -> Result<RuledSpec, CliError> {
    let s_range = range("s_range", s_range)?;
    let r_range = range("r_range", r_range)?;
    let (curve, extra_input) = seed_curve(seed, s_range, dir)?;
    let h0 = field1(h0, Var::S)?;
    let patch = build_surface(curve, h0, s_range, RRange::Fixed(r_range.0, r_range.1));
    Ok(RuledSpec { patch, s_range, r_range, extra_input })
}
