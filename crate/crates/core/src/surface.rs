//! Horizontal geometry of surfaces given as graphs `t = h(x, y)` or as level
//! sets `phi = 0`.
//!
//! Graphs are oriented by `phi = t - h`, so
//! `p = -(h_x + y/2)`, `q = -(h_y - x/2)` and `W = |(p, q)|`. Off the
//! characteristic locus `W = 0` the projected horizontal Gauss map is
//! `(p, q) / W` and the H-mean curvature is its planar divergence.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{stencil_inside, FieldError, Grid2, Jet2, PlanarDomain, Rect, ScalarField1, ScalarField2, ScalarField3, Sym2, Vec2};
use crate::heis::HPoint;
use crate::par::{self, Execution};

/// Default threshold on `W` below which a point counts as characteristic.
pub const DEFAULT_EPS_CHAR: f64 = 1e-9;

/// Step of the five-point stencil used for the divergence form.
const DIV_STEP: f64 = 2.5e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurfaceError {
    #[error("characteristic point at ({x}, {y}): W = {w:e}")]
    CharacteristicPoint { x: f64, y: f64, w: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("rotational curvature needs s > 0, got {0}")]
    NonPositiveRadius(f64),
    #[error("transformed samples are not a graph over the plane near ({x}, {y}): heights differ by {gap:e}")]
    NotAGraphAfterTransform { x: f64, y: f64, gap: f64 },
}

/// `p`, `q`, `W` and the unit field `(p, q) / W` where defined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizontalData {
    pub p: f64,
    pub q: f64,
    pub w: f64,
    pub nu: Option<Vec2>,
}

impl HorizontalData {
    pub fn from_pq(p: f64, q: f64, eps_char: f64) -> Self {
        let w = p.hypot(q);
        let nu = (w > eps_char).then(|| Vec2::new(p / w, q / w));
        Self { p, q, w, nu }
    }
}

/// First derivatives of `(p, q)` in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PqJet {
    pub p: f64,
    pub q: f64,
    pub px: f64,
    pub py: f64,
    pub qx: f64,
    pub qy: f64,
}

impl PqJet {
    fn from_graph(z: Vec2, j: &Jet2) -> Self {
        Self { p: -(j.grad.x + 0.5 * z.y), q: -(j.grad.y - 0.5 * z.x), px: -j.hess.xx, py: -(j.hess.xy + 0.5), qx: -(j.hess.xy - 0.5), qy: -j.hess.yy }
    }

    pub fn w(&self) -> f64 {
        self.p.hypot(self.q)
    }

    /// `(q^2 p_x + p^2 q_y - p q (q_x + p_y)) / W^3`.
    pub fn mean_curvature(&self) -> f64 {
        mse2(self.p, self.q, self.px, self.qy, self.qx + self.py)
    }

    pub fn shape_matrix(&self) -> ShapeMatrix {
        let (p, q) = (self.p, self.q);
        let w3 = self.w().powi(3);
        ShapeMatrix {
            m: [
                [(q * q * self.px - p * q * self.qx) / w3, (p * p * self.qx - p * q * self.px) / w3],
                [(q * q * self.py - p * q * self.qy) / w3, (p * p * self.qy - p * q * self.py) / w3],
            ],
        }
    }
}

fn mse2(p: f64, q: f64, x1p: f64, x2q: f64, mixed: f64) -> f64 {
    let w = p.hypot(q);
    (q * q * x1p + p * p * x2q - p * q * mixed) / (w * w * w)
}

/// The 2x2 matrix whose trace is the H-mean curvature. `(p, q)` spans its
/// kernel, so the other eigenvalue is the trace; `(q, -p)` is the matching
/// left eigenvector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeMatrix {
    pub m: [[f64; 2]; 2],
}

impl ShapeMatrix {
    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.m[0][0] * v.x + self.m[0][1] * v.y, self.m[1][0] * v.x + self.m[1][1] * v.y)
    }

    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Eigenvalues in ascending order. Real for every matrix produced here
    /// since one eigenvalue vanishes.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let tr = self.trace();
        let disc = (tr * tr - 4.0 * self.det()).max(0.0).sqrt();
        let a = 0.5 * (tr - disc);
        let b = 0.5 * (tr + disc);
        [a.min(b), a.max(b)]
    }
}

/// A graph `t = h(x, y)` over a planar domain.
#[derive(Clone, Debug)]
pub struct GraphPatch {
    pub domain: PlanarDomain,
    pub h: ScalarField2,
    pub eps_char: f64,
}

impl GraphPatch {
    pub fn new(h: ScalarField2, domain: PlanarDomain) -> Self {
        Self { domain, h, eps_char: DEFAULT_EPS_CHAR }
    }

    pub fn with_eps_char(mut self, eps: f64) -> Self {
        self.eps_char = eps;
        self
    }

    /// Same surface with all derivatives taken by finite differences.
    pub fn fd_only(&self) -> Self {
        Self { domain: self.domain.clone(), h: self.h.fd_only(), eps_char: self.eps_char }
    }

    pub fn height(&self, z: Vec2) -> f64 {
        self.h.value(z)
    }

    pub fn point(&self, z: Vec2) -> HPoint {
        HPoint::new(z.x, z.y, self.h.value(z))
    }

    fn check(&self, z: Vec2, radius: f64) -> Result<(), SurfaceError> {
        if stencil_inside(&self.domain, z, radius) {
            Ok(())
        } else {
            Err(FieldError::StencilOutOfDomain { x: z.x, y: z.y }.into())
        }
    }

    pub fn jet(&self, z: Vec2) -> Result<Jet2, SurfaceError> {
        self.check(z, self.h.stencil_radius())?;
        Ok(self.h.jet_unchecked(z))
    }

    pub fn pq_jet(&self, z: Vec2) -> Result<PqJet, SurfaceError> {
        Ok(PqJet::from_graph(z, &self.jet(z)?))
    }

    fn pq_unchecked(&self, z: Vec2) -> (f64, f64) {
        let g = self.h.grad_unchecked(z);
        (-(g.x + 0.5 * z.y), -(g.y - 0.5 * z.x))
    }

    pub fn horizontal_data(&self, z: Vec2) -> Result<HorizontalData, SurfaceError> {
        let r = if self.h.is_analytic() { 0.0 } else { self.h.fd_step };
        self.check(z, r)?;
        let (p, q) = self.pq_unchecked(z);
        Ok(HorizontalData::from_pq(p, q, self.eps_char))
    }

    fn non_characteristic(&self, z: Vec2, j: &PqJet) -> Result<(), SurfaceError> {
        let w = j.w();
        if w <= self.eps_char || !w.is_finite() {
            return Err(SurfaceError::CharacteristicPoint { x: z.x, y: z.y, w });
        }
        Ok(())
    }

    /// H-mean curvature from the closed second-order form.
    pub fn h_mean_curvature(&self, z: Vec2) -> Result<f64, SurfaceError> {
        let j = self.pq_jet(z)?;
        self.non_characteristic(z, &j)?;
        Ok(j.mean_curvature())
    }

    /// H-mean curvature as the planar divergence of the unit field, by a
    /// fourth-order central difference.
    pub fn h_mean_curvature_divergence(&self, z: Vec2) -> Result<f64, SurfaceError> {
        let d = DIV_STEP;
        self.check(z, 2.0 * d + self.h.stencil_radius())?;
        let nu = |pt: Vec2| -> Result<Vec2, SurfaceError> {
            let (p, q) = self.pq_unchecked(pt);
            let w = p.hypot(q);
            if w <= self.eps_char || !w.is_finite() {
                return Err(SurfaceError::CharacteristicPoint { x: pt.x, y: pt.y, w });
            }
            Ok(Vec2::new(p / w, q / w))
        };
        let ex = Vec2::new(d, 0.0);
        let ey = Vec2::new(0.0, d);
        let dx = (-nu(z + ex * 2.0)?.x + 8.0 * nu(z + ex)?.x - 8.0 * nu(z - ex)?.x + nu(z - ex * 2.0)?.x) / (12.0 * d);
        let dy = (-nu(z + ey * 2.0)?.y + 8.0 * nu(z + ey)?.y - 8.0 * nu(z - ey)?.y + nu(z - ey * 2.0)?.y) / (12.0 * d);
        Ok(dx + dy)
    }

    /// Both forms: `(closed form, divergence form)`.
    pub fn h_mean_curvature_forms(&self, z: Vec2) -> Result<(f64, f64), SurfaceError> {
        Ok((self.h_mean_curvature(z)?, self.h_mean_curvature_divergence(z)?))
    }

    pub fn shape_matrix(&self, z: Vec2) -> Result<ShapeMatrix, SurfaceError> {
        let j = self.pq_jet(z)?;
        self.non_characteristic(z, &j)?;
        Ok(j.shape_matrix())
    }
}

/// Sign convention for an implicit surface: `Negative` flips the normal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// A level set `phi(x, y, t) = 0`.
#[derive(Clone, Debug)]
pub struct ImplicitSurface {
    pub phi: ScalarField3,
    pub orientation: Orientation,
    pub eps_char: f64,
}

impl ImplicitSurface {
    pub fn new(phi: ScalarField3, orientation: Orientation) -> Self {
        Self { phi, orientation, eps_char: DEFAULT_EPS_CHAR }
    }

    pub fn value(&self, g: HPoint) -> f64 {
        self.phi.value([g.x, g.y, g.t])
    }

    /// `p = X1 phi`, `q = X2 phi`, with the orientation sign applied.
    pub fn horizontal_data(&self, g: HPoint) -> HorizontalData {
        let [fx, fy, ft] = self.phi.grad([g.x, g.y, g.t]);
        let s = self.orientation.sign();
        HorizontalData::from_pq(s * (fx - 0.5 * g.y * ft), s * (fy + 0.5 * g.x * ft), self.eps_char)
    }

    pub fn h_mean_curvature(&self, g: HPoint) -> Result<f64, SurfaceError> {
        let pt = [g.x, g.y, g.t];
        let [fx, fy, ft] = self.phi.grad(pt);
        let h = self.phi.hess(pt);
        let (x, y) = (g.x, g.y);
        let p = fx - 0.5 * y * ft;
        let q = fy + 0.5 * x * ft;
        let w = p.hypot(q);
        if w <= self.eps_char || !w.is_finite() {
            return Err(SurfaceError::CharacteristicPoint { x, y, w });
        }
        let x1p = h[0][0] - y * h[0][2] + 0.25 * y * y * h[2][2];
        let x2q = h[1][1] + x * h[1][2] + 0.25 * x * x * h[2][2];
        let mixed = 2.0 * h[0][1] + x * h[0][2] - y * h[1][2] - 0.5 * x * y * h[2][2];
        Ok(self.orientation.sign() * mse2(p, q, x1p, x2q, mixed))
    }
}

/// H-mean curvature of the rotation surface `phi = u(|z|^2 / 4) - t` at
/// `s = |z|^2 / 4`, homogeneous dimension 4.
pub fn rotational_h(u: &ScalarField1, s: f64) -> Result<f64, SurfaceError> {
    if s <= 0.0 || s.is_nan() {
        return Err(SurfaceError::NonPositiveRadius(s));
    }
    const Q: f64 = 4.0;
    let u1 = u.d1(s);
    let u2 = u.d2(s);
    let g = 1.0 + u1 * u1;
    Ok((2.0 * s * u2 + (Q - 3.0) * u1 * g) / (2.0 * s.sqrt() * g.powf(1.5)))
}

/// Which sheet of a two-sheeted profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sheet {
    Upper,
    Lower,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::Upper => 1.0,
            Sheet::Lower => -1.0,
        }
    }
}

/// Minimal rotational profile `u(s) = u0 +- (2/a) sqrt(a s - 1)`, `s >= 1/a`.
pub fn catenoid_profile(a: f64, u0: f64, sheet: Sheet) -> ScalarField1 {
    let sg = sheet.sign();
    ScalarField1::new(move |s| u0 + sg * (2.0 / a) * (a * s - 1.0).sqrt())
        .with_d1(move |s| sg / (a * s - 1.0).sqrt())
        .with_d2(move |s| -sg * 0.5 * a / (a * s - 1.0).powf(1.5))
}

/// Image of a graph under `g -> g0 o g`, again a graph.
pub fn left_translate_graph(s: &GraphPatch, g0: HPoint) -> GraphPatch {
    let h = s.h.clone();
    let shift = Vec2::new(g0.x, g0.y);
    let back = move |z: Vec2| z - shift;
    let correction = move |z: Vec2| {
        let w = z - shift;
        -0.5 * (w.x * g0.y - g0.x * w.y)
    };
    let h_val = h.clone();
    let mut field = ScalarField2::new(move |z| g0.t + h_val.value(back(z)) + correction(z)).with_fd_step(s.h.fd_step);
    if s.h.is_analytic() {
        let hg = h.clone();
        let hh = h.clone();
        field = field.with_grad(move |z| hg.grad_unchecked(back(z)) + Vec2::new(-0.5 * g0.y, 0.5 * g0.x)).with_hess(move |z| hh.hess_unchecked(back(z)));
    }
    let dom = s.domain.clone();
    let b = dom.bounds;
    let domain = PlanarDomain::rect(Rect::new(b.xmin + g0.x, b.xmax + g0.x, b.ymin + g0.y, b.ymax + g0.y)).with_membership(move |z| dom.contains(back(z)));
    GraphPatch { domain, h: field, eps_char: s.eps_char }
}

/// Image of a graph under the rotation by `theta` about the `t`-axis.
pub fn rotate_graph(s: &GraphPatch, theta: f64) -> GraphPatch {
    let h = s.h.clone();
    let back = move |z: Vec2| z.rotate(-theta);
    let h_val = h.clone();
    let mut field = ScalarField2::new(move |z| h_val.value(back(z))).with_fd_step(s.h.fd_step);
    if s.h.is_analytic() {
        let hg = h.clone();
        let hh = h.clone();
        field = field.with_grad(move |z| hg.grad_unchecked(back(z)).rotate(theta)).with_hess(move |z| {
            let m = hh.hess_unchecked(back(z));
            let (sn, c) = theta.sin_cos();
            // R M R^T
            let a = [[c, -sn], [sn, c]];
            let mm = [[m.xx, m.xy], [m.xy, m.yy]];
            let mut out = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            out[i][j] += a[i][k] * mm[k][l] * a[j][l];
                        }
                    }
                }
            }
            Sym2 { xx: out[0][0], xy: 0.5 * (out[0][1] + out[1][0]), yy: out[1][1] }
        });
    }
    let dom = s.domain.clone();
    let b = dom.bounds;
    let r = [b.xmin.abs(), b.xmax.abs()].iter().fold(0.0f64, |m, v| m.max(*v)).hypot([b.ymin.abs(), b.ymax.abs()].iter().fold(0.0f64, |m, v| m.max(*v)));
    let bounds = if r.is_finite() { Rect::square(r) } else { b };
    let domain = PlanarDomain::rect(bounds).with_membership(move |z| dom.contains(back(z)));
    GraphPatch { domain, h: field, eps_char: s.eps_char }
}

/// Checks that no two samples share a planar cell of size `cell` while
/// differing in height by more than `tol`.
pub fn vertical_line_test(points: &[HPoint], cell: f64, tol: f64) -> Result<(), SurfaceError> {
    let mut seen: HashMap<(i64, i64), f64> = HashMap::new();
    for g in points {
        let key = ((g.x / cell).round() as i64, (g.y / cell).round() as i64);
        match seen.get(&key) {
            Some(&t) if (t - g.t).abs() > tol => {
                return Err(SurfaceError::NotAGraphAfterTransform { x: g.x, y: g.y, gap: (t - g.t).abs() });
            }
            Some(_) => {}
            None => {
                seen.insert(key, g.t);
            }
        }
    }
    Ok(())
}

/// Left-translates sample points and checks the image is still a graph.
pub fn left_translate_points(points: &[HPoint], g0: HPoint, cell: f64, tol: f64) -> Result<Vec<HPoint>, SurfaceError> {
    let out: Vec<HPoint> = points.iter().map(|g| g0 * *g).collect();
    vertical_line_test(&out, cell, tol)?;
    Ok(out)
}

/// One connected piece of the characteristic set found on a grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CharacteristicComponent {
    /// Grid nodes flagged in this component.
    pub nodes: Vec<Vec2>,
    /// Refined zeros of `(p, q)` seeded from the nodes.
    pub points: Vec<Vec2>,
    /// Largest distance between refined points.
    pub extent: f64,
    pub isolated: bool,
}

impl CharacteristicComponent {
    pub fn centroid(&self) -> Vec2 {
        let n = self.points.len().max(1) as f64;
        self.points.iter().fold(Vec2::ZERO, |a, p| a + *p) * (1.0 / n)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CharacteristicScan {
    pub components: Vec<CharacteristicComponent>,
    pub min_w: f64,
}

impl CharacteristicScan {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Gauss-Newton step towards `(p, q) = 0`, minimum-norm where the Jacobian
/// is rank deficient.
fn newton_step(s: &GraphPatch, z: Vec2) -> Option<Vec2> {
    let j = s.pq_jet(z).ok()?;
    let (a, b, c, d) = (j.px, j.py, j.qx, j.qy);
    let det = a * d - b * c;
    let fro2 = a * a + b * b + c * c + d * d;
    if fro2 == 0.0 {
        return None;
    }
    Some(if det.abs() > 1e-10 * fro2 {
        Vec2::new((d * j.p - b * j.q) / det, (-c * j.p + a * j.q) / det)
    } else {
        Vec2::new((a * j.p + c * j.q) / fro2, (b * j.p + d * j.q) / fro2)
    })
}

fn refine_zero(s: &GraphPatch, mut z: Vec2, eps: f64, max_move: f64) -> Option<Vec2> {
    let start = z;
    for _ in 0..60 {
        let j = s.pq_jet(z).ok()?;
        if j.w() < eps {
            return Some(z);
        }
        z = z - newton_step(s, z)?;
        if !z.is_finite() || z.dist(start) > max_move {
            return None;
        }
    }
    let w = s.pq_jet(z).ok()?.w();
    (w < eps).then_some(z)
}

/// Locates the characteristic set of a graph on a grid.
///
/// Nodes with `W < eps`, nodes whose Gauss-Newton step is shorter than a
/// cell diagonal, and local minima of `W` over the 8-neighbourhood are
/// refined by Gauss-Newton. Converged nodes are
/// grouped into 8-connected components.
pub fn characteristic_scan(s: &GraphPatch, grid: &Grid2, eps: f64, exec: Execution) -> CharacteristicScan {
    let ws: Vec<f64> = par::map(exec, &grid.nodes, |n| s.horizontal_data(n.p).map(|h| h.w).unwrap_or(f64::NAN));
    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(grid.nodes.len());
    for (k, n) in grid.nodes.iter().enumerate() {
        index.insert((n.i, n.j), k);
    }
    let neighbours = |k: usize| {
        let n = grid.nodes[k];
        let mut out = Vec::with_capacity(8);
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (i, j) = (n.i as i64 + di, n.j as i64 + dj);
                if i < 0 || j < 0 {
                    continue;
                }
                if let Some(&m) = index.get(&(i as usize, j as usize)) {
                    out.push(m);
                }
            }
        }
        out
    };
    let sp = grid.spacing();
    let cell = sp.x.hypot(sp.y);
    let steps: Vec<f64> = par::map(exec, &grid.nodes, |n| newton_step(s, n.p).map(|v| v.norm()).unwrap_or(f64::INFINITY));
    let candidates: Vec<usize> = (0..grid.nodes.len())
        .filter(|&k| {
            let w = ws[k];
            w.is_finite() && (w < eps || steps[k] <= cell || neighbours(k).iter().all(|&m| !(ws[m] < w)))
        })
        .collect();
    let refined: Vec<Option<Vec2>> = par::map(exec, &candidates, |&k| refine_zero(s, grid.nodes[k].p, eps, 2.0 * cell));

    let accepted: Vec<(usize, Vec2)> = candidates.iter().zip(refined).filter_map(|(&k, r)| r.map(|z| (k, z))).collect();
    let pos: HashMap<usize, usize> = accepted.iter().enumerate().map(|(a, (k, _))| (*k, a)).collect();
    let mut uf = UnionFind::new(accepted.len());
    for (a, (k, _)) in accepted.iter().enumerate() {
        for m in neighbours(*k) {
            if let Some(&b) = pos.get(&m) {
                uf.union(a, b);
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for a in 0..accepted.len() {
        groups.entry(uf.find(a)).or_default().push(a);
    }
    let mut components: Vec<CharacteristicComponent> = groups
        .into_values()
        .map(|members| {
            let nodes: Vec<Vec2> = members.iter().map(|&a| grid.nodes[accepted[a].0].p).collect();
            let points: Vec<Vec2> = members.iter().map(|&a| accepted[a].1).collect();
            let mut extent: f64 = 0.0;
            for (i, a) in points.iter().enumerate() {
                for b in &points[i + 1..] {
                    extent = extent.max(a.dist(*b));
                }
            }
            CharacteristicComponent { nodes, points, extent, isolated: extent <= 2.0 * cell }
        })
        .collect();
    components.sort_by(|a, b| {
        let (ca, cb) = (a.centroid(), b.centroid());
        ca.x.total_cmp(&cb.x).then(ca.y.total_cmp(&cb.y))
    });
    let min_w = ws.iter().copied().filter(|w| w.is_finite()).fold(f64::INFINITY, f64::min);
    CharacteristicScan { components, min_w }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Result of sampling the H-mean curvature over a grid.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CurvatureScan {
    /// Nodes where the closed form was evaluated.
    pub evaluated: usize,
    /// Nodes skipped as near-characteristic or outside the stencil.
    pub skipped: usize,
    /// Evaluated nodes whose divergence-form stencil left the domain.
    pub divergence_skipped: usize,
    pub max_abs: f64,
    pub max_at: Option<Vec2>,
    /// Largest `|H - target|`.
    pub max_dev: f64,
    /// Largest gap between the closed and divergence forms.
    pub max_form_gap: f64,
}

/// Samples the H-mean curvature on `grid`, skipping nodes with `W <= w_min`.
/// `target` is the expected constant value (0 for minimal surfaces).
pub fn curvature_scan(s: &GraphPatch, grid: &Grid2, w_min: f64, target: f64, exec: Execution) -> CurvatureScan {
    let vals = par::map(exec, &grid.nodes, |n| {
        let hd = s.horizontal_data(n.p).ok()?;
        if !(hd.w > w_min) {
            return None;
        }
        let a = s.h_mean_curvature(n.p).ok()?;
        Some((n.p, a, s.h_mean_curvature_divergence(n.p).ok()))
    });
    let mut out = CurvatureScan::default();
    for v in vals {
        match v {
            None => out.skipped += 1,
            Some((p, a, b)) => {
                out.evaluated += 1;
                if !(a.abs() <= out.max_abs) {
                    out.max_abs = a.abs();
                    out.max_at = Some(p);
                }
                let dev = (a - target).abs();
                if !(dev <= out.max_dev) {
                    out.max_dev = dev;
                }
                match b {
                    Some(b) => {
                        let gap = (a - b).abs();
                        if !(gap <= out.max_form_gap) {
                            out.max_form_gap = gap;
                        }
                    }
                    None => out.divergence_skipped += 1,
                }
            }
        }
    }
    out
}
