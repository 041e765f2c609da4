//! Planar and spatial scalar fields, domains, grids and the small numerical
//! kernels shared by the geometry modules (RK4, adaptive Simpson).

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default central-difference step for first derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Default RK4 step in arclength.
pub const DEFAULT_RK4_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("finite-difference stencil at ({x}, {y}) leaves the domain")]
    StencilOutOfDomain { x: f64, y: f64 },
    #[error("vector field undefined at ({x}, {y})")]
    FieldUndefined { x: f64, y: f64 },
    #[error("domain bounds must be finite to lay out a grid")]
    UnboundedDomain,
    #[error("grid needs at least 2 nodes per axis, got {nx}x{ny}")]
    GridTooSmall { nx: usize, ny: usize },
}

/// A vector (or point) in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// `z x w` as a scalar: `x w_y - y w_x`.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    /// The fixed perpendicular `(z2, -z1)`.
    pub fn perp(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

pub type Eval1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Eval2 = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
pub type Grad2 = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
pub type Hess2 = Arc<dyn Fn(Vec2) -> Sym2 + Send + Sync>;
pub type Eval3 = Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>;
pub type Grad3 = Arc<dyn Fn([f64; 3]) -> [f64; 3] + Send + Sync>;
pub type Hess3 = Arc<dyn Fn([f64; 3]) -> [[f64; 3]; 3] + Send + Sync>;
pub type Membership = Arc<dyn Fn(Vec2) -> bool + Send + Sync>;

/// A real function of one variable with optional analytic derivatives.
#[derive(Clone)]
pub struct ScalarField1 {
    eval: Eval1,
    d1: Option<Eval1>,
    d2: Option<Eval1>,
    pub fd_step: f64,
}

impl fmt::Debug for ScalarField1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField1")
            .field("analytic_d1", &self.d1.is_some())
            .field("analytic_d2", &self.d2.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl ScalarField1 {
    pub fn new(eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), d1: None, d2: None, fd_step: 1e-6 }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c).with_d1(|_| 0.0).with_d2(|_| 0.0)
    }

    pub fn with_d1(mut self, d1: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d1 = Some(Arc::new(d1));
        self
    }

    pub fn with_d2(mut self, d2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d2 = Some(Arc::new(d2));
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn has_analytic_d1(&self) -> bool {
        self.d1.is_some()
    }

    pub fn value(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    pub fn d1(&self, s: f64) -> f64 {
        match &self.d1 {
            Some(d) => d(s),
            None => {
                let h = self.fd_step;
                (self.value(s + h) - self.value(s - h)) / (2.0 * h)
            }
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match (&self.d2, &self.d1) {
            (Some(d), _) => d(s),
            (None, Some(d1)) => {
                let h = self.fd_step;
                (d1(s + h) - d1(s - h)) / (2.0 * h)
            }
            (None, None) => {
                let h = self.fd_step.sqrt() * 1e-1;
                (self.value(s + h) - 2.0 * self.value(s) + self.value(s - h)) / (h * h)
            }
        }
    }
}

/// A real function on (part of) the plane with optional analytic gradient
/// and Hessian. Missing derivatives fall back to central differences.
#[derive(Clone)]
pub struct ScalarField2 {
    eval: Eval2,
    grad: Option<Grad2>,
    hess: Option<Hess2>,
    pub fd_step: f64,
}

impl fmt::Debug for ScalarField2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField2")
            .field("analytic_grad", &self.grad.is_some())
            .field("analytic_hess", &self.hess.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

/// Value, gradient and Hessian at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet2 {
    pub f: f64,
    pub grad: Vec2,
    pub hess: Sym2,
}

impl ScalarField2 {
    pub fn new(eval: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), grad: None, hess: None, fd_step: DEFAULT_FD_STEP }
    }

    pub fn with_grad(mut self, g: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_hess(mut self, h: impl Fn(Vec2) -> Sym2 + Send + Sync + 'static) -> Self {
        self.hess = Some(Arc::new(h));
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    /// Drops analytic derivatives so every derivative goes through differences.
    pub fn fd_only(&self) -> Self {
        Self { eval: self.eval.clone(), grad: None, hess: None, fd_step: self.fd_step }
    }

    pub fn is_analytic(&self) -> bool {
        self.grad.is_some() && self.hess.is_some()
    }

    pub fn value(&self, p: Vec2) -> f64 {
        (self.eval)(p)
    }

    /// Step used by the nine-point Hessian stencil. Second differences lose
    /// about `eps / h^2`, so they use a coarser step than the gradient.
    pub fn hess_step(&self) -> f64 {
        10.0 * self.fd_step
    }

    /// Largest distance from `p` the difference stencils may reach.
    pub fn stencil_radius(&self) -> f64 {
        match (&self.grad, &self.hess) {
            (Some(_), Some(_)) => 0.0,
            (Some(_), None) => self.fd_step,
            _ => self.hess_step().max(self.fd_step),
        }
    }

    /// Gradient without any domain check.
    pub fn grad_unchecked(&self, p: Vec2) -> Vec2 {
        match &self.grad {
            Some(g) => g(p),
            None => {
                let h = self.fd_step;
                let f = |dx: f64, dy: f64| self.value(Vec2::new(p.x + dx, p.y + dy));
                Vec2::new((f(h, 0.0) - f(-h, 0.0)) / (2.0 * h), (f(0.0, h) - f(0.0, -h)) / (2.0 * h))
            }
        }
    }

    /// Hessian without any domain check. With an analytic gradient but no
    /// analytic Hessian, differentiates the gradient; otherwise uses the
    /// nine-point stencil with symmetrized mixed partials.
    pub fn hess_unchecked(&self, p: Vec2) -> Sym2 {
        if let Some(h) = &self.hess {
            return h(p);
        }
        if let Some(g) = &self.grad {
            let h = self.fd_step;
            let gx = (g(Vec2::new(p.x + h, p.y)) - g(Vec2::new(p.x - h, p.y))) * (0.5 / h);
            let gy = (g(Vec2::new(p.x, p.y + h)) - g(Vec2::new(p.x, p.y - h))) * (0.5 / h);
            return Sym2 { xx: gx.x, xy: 0.5 * (gx.y + gy.x), yy: gy.y };
        }
        let h = self.hess_step();
        let f = |dx: f64, dy: f64| self.value(Vec2::new(p.x + dx, p.y + dy));
        let c = f(0.0, 0.0);
        let xx = (f(h, 0.0) - 2.0 * c + f(-h, 0.0)) / (h * h);
        let yy = (f(0.0, h) - 2.0 * c + f(0.0, -h)) / (h * h);
        let xy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        Sym2 { xx, xy, yy }
    }

    pub fn jet_unchecked(&self, p: Vec2) -> Jet2 {
        Jet2 { f: self.value(p), grad: self.grad_unchecked(p), hess: self.hess_unchecked(p) }
    }
}

/// Checks that the axis-aligned stencil of radius `r` around `p` stays in
/// `domain`.
pub fn stencil_inside(domain: &PlanarDomain, p: Vec2, r: f64) -> bool {
    if !domain.contains(p) {
        return false;
    }
    if r == 0.0 {
        return true;
    }
    [(r, 0.0), (-r, 0.0), (0.0, r), (0.0, -r), (r, r), (r, -r), (-r, r), (-r, -r)].iter().all(|&(dx, dy)| domain.contains(Vec2::new(p.x + dx, p.y + dy)))
}

/// Gradient of `f` at `p`, refusing stencils that leave `domain`.
pub fn grad(f: &ScalarField2, domain: &PlanarDomain, p: Vec2) -> Result<Vec2, FieldError> {
    let r = if f.grad.is_some() { 0.0 } else { f.fd_step };
    if !stencil_inside(domain, p, r) {
        return Err(FieldError::StencilOutOfDomain { x: p.x, y: p.y });
    }
    Ok(f.grad_unchecked(p))
}

/// Hessian of `f` at `p`, refusing stencils that leave `domain`.
pub fn hessian(f: &ScalarField2, domain: &PlanarDomain, p: Vec2) -> Result<Sym2, FieldError> {
    if !stencil_inside(domain, p, f.stencil_radius()) {
        return Err(FieldError::StencilOutOfDomain { x: p.x, y: p.y });
    }
    Ok(f.hess_unchecked(p))
}

/// A real function on `R^3` with optional analytic gradient and Hessian.
#[derive(Clone)]
pub struct ScalarField3 {
    eval: Eval3,
    grad: Option<Grad3>,
    hess: Option<Hess3>,
    pub fd_step: f64,
}

impl fmt::Debug for ScalarField3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField3")
            .field("analytic_grad", &self.grad.is_some())
            .field("analytic_hess", &self.hess.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl ScalarField3 {
    pub fn new(eval: impl Fn([f64; 3]) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), grad: None, hess: None, fd_step: DEFAULT_FD_STEP }
    }

    pub fn with_grad(mut self, g: impl Fn([f64; 3]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_hess(mut self, h: impl Fn([f64; 3]) -> [[f64; 3]; 3] + Send + Sync + 'static) -> Self {
        self.hess = Some(Arc::new(h));
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn fd_only(&self) -> Self {
        Self { eval: self.eval.clone(), grad: None, hess: None, fd_step: self.fd_step }
    }

    pub fn value(&self, p: [f64; 3]) -> f64 {
        (self.eval)(p)
    }

    pub fn grad(&self, p: [f64; 3]) -> [f64; 3] {
        if let Some(g) = &self.grad {
            return g(p);
        }
        let h = self.fd_step;
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let mut a = p;
            let mut b = p;
            a[i] += h;
            b[i] -= h;
            *o = (self.value(a) - self.value(b)) / (2.0 * h);
        }
        out
    }

    pub fn hess(&self, p: [f64; 3]) -> [[f64; 3]; 3] {
        if let Some(h) = &self.hess {
            return h(p);
        }
        let mut out = [[0.0; 3]; 3];
        if self.grad.is_some() {
            let h = self.fd_step;
            for i in 0..3 {
                let mut a = p;
                let mut b = p;
                a[i] += h;
                b[i] -= h;
                let (ga, gb) = (self.grad(a), self.grad(b));
                for j in 0..3 {
                    out[i][j] = (ga[j] - gb[j]) / (2.0 * h);
                }
            }
        } else {
            let h = 10.0 * self.fd_step;
            let f = |d: [f64; 3]| self.value([p[0] + d[0], p[1] + d[1], p[2] + d[2]]);
            let c = f([0.0; 3]);
            for i in 0..3 {
                let mut e = [0.0; 3];
                e[i] = h;
                out[i][i] = (f(e) - 2.0 * c + f([-e[0], -e[1], -e[2]])) / (h * h);
                for j in (i + 1)..3 {
                    let mut pp = [0.0; 3];
                    pp[i] = h;
                    pp[j] = h;
                    let mut pm = pp;
                    pm[j] = -h;
                    let mut mp = pp;
                    mp[i] = -h;
                    let mut mm = pm;
                    mm[i] = -h;
                    out[i][j] = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
                    out[j][i] = out[i][j];
                }
            }
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let m = 0.5 * (out[i][j] + out[j][i]);
                out[i][j] = m;
                out[j][i] = m;
            }
        }
        out
    }
}

/// Axis-aligned rectangle `[xmin, xmax] x [ymin, ymax]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub const fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self { xmin, xmax, ymin, ymax }
    }

    pub fn square(half: f64) -> Self {
        Self::new(-half, half, -half, half)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn is_finite(&self) -> bool {
        self.xmin.is_finite() && self.xmax.is_finite() && self.ymin.is_finite() && self.ymax.is_finite()
    }

    pub fn inset(&self, m: f64) -> Rect {
        Rect::new(self.xmin + m, self.xmax - m, self.ymin + m, self.ymax - m)
    }
}

/// A planar region: bounding rectangle plus an optional membership predicate.
#[derive(Clone)]
pub struct PlanarDomain {
    pub bounds: Rect,
    membership: Option<Membership>,
}

impl fmt::Debug for PlanarDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarDomain").field("bounds", &self.bounds).field("predicate", &self.membership.is_some()).finish()
    }
}

impl PlanarDomain {
    pub fn rect(bounds: Rect) -> Self {
        Self { bounds, membership: None }
    }

    pub fn plane() -> Self {
        Self::rect(Rect::new(f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY))
    }

    pub fn with_membership(mut self, m: impl Fn(Vec2) -> bool + Send + Sync + 'static) -> Self {
        self.membership = Some(Arc::new(m));
        self
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.bounds.contains(p) && self.membership.as_ref().is_none_or(|m| m(p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridNode {
    pub i: usize,
    pub j: usize,
    pub p: Vec2,
}

/// A regular `nx x ny` lattice over a rectangle, keeping only nodes that lie
/// in the domain.
#[derive(Clone, Debug)]
pub struct Grid2 {
    pub domain: PlanarDomain,
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub nodes: Vec<GridNode>,
}

impl Grid2 {
    /// Lattice over the domain bounds.
    pub fn new(domain: PlanarDomain, nx: usize, ny: usize) -> Result<Self, FieldError> {
        let rect = domain.bounds;
        Self::on_rect(domain, rect, nx, ny)
    }

    pub fn on_rect(domain: PlanarDomain, rect: Rect, nx: usize, ny: usize) -> Result<Self, FieldError> {
        if !rect.is_finite() {
            return Err(FieldError::UnboundedDomain);
        }
        if nx < 2 || ny < 2 {
            return Err(FieldError::GridTooSmall { nx, ny });
        }
        let mut nodes = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let p = Self::lattice_point(&rect, nx, ny, i, j);
                if domain.contains(p) {
                    nodes.push(GridNode { i, j, p });
                }
            }
        }
        Ok(Self { domain, rect, nx, ny, nodes })
    }

    fn lattice_point(rect: &Rect, nx: usize, ny: usize, i: usize, j: usize) -> Vec2 {
        let fx = i as f64 / (nx - 1) as f64;
        let fy = j as f64 / (ny - 1) as f64;
        Vec2::new(rect.xmin + fx * (rect.xmax - rect.xmin), rect.ymin + fy * (rect.ymax - rect.ymin))
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        Self::lattice_point(&self.rect, self.nx, self.ny, i, j)
    }

    pub fn spacing(&self) -> Vec2 {
        Vec2::new((self.rect.xmax - self.rect.xmin) / (self.nx - 1) as f64, (self.rect.ymax - self.rect.ymin) / (self.ny - 1) as f64)
    }
}

/// Why an RK4 trajectory ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Completed,
    Predicate,
    FieldUndefined,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub points: Vec<Vec2>,
    pub stop: StopReason,
}

/// Fixed-step classical RK4 for `z' = v(z)`. `v` returns `None` where the
/// field is undefined; the trajectory then stops with
/// [`StopReason::FieldUndefined`]. `stop` is tested at each accepted point.
pub fn rk4_integrate<V, S>(v: V, z0: Vec2, step: f64, n_steps: usize, stop: S) -> Result<Trajectory, FieldError>
where
    V: Fn(Vec2) -> Option<Vec2>,
    S: Fn(Vec2) -> bool,
{
    if v(z0).is_none() {
        return Err(FieldError::FieldUndefined { x: z0.x, y: z0.y });
    }
    let mut points = Vec::with_capacity(n_steps + 1);
    points.push(z0);
    let mut z = z0;
    for _ in 0..n_steps {
        let Some(next) = rk4_step(&v, z, step) else {
            return Ok(Trajectory { points, stop: StopReason::FieldUndefined });
        };
        z = next;
        points.push(z);
        if stop(z) {
            return Ok(Trajectory { points, stop: StopReason::Predicate });
        }
    }
    Ok(Trajectory { points, stop: StopReason::Completed })
}

/// One RK4 step; `None` if any stage hits an undefined point.
pub fn rk4_step<V: Fn(Vec2) -> Option<Vec2>>(v: &V, z: Vec2, h: f64) -> Option<Vec2> {
    let k1 = v(z)?;
    let k2 = v(z + k1 * (0.5 * h))?;
    let k3 = v(z + k2 * (0.5 * h))?;
    let k4 = v(z + k3 * h)?;
    Some(z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grad_examples() {
        let plane = PlanarDomain::plane();
        let f = ScalarField2::new(|p| p.x * p.y / 2.0);
        let g = grad(&f, &plane, Vec2::new(1.0, 2.0)).unwrap();
        assert!((g.x - 1.0).abs() < 1e-9 && (g.y - 0.5).abs() < 1e-9);

        let c = ScalarField2::new(|_| 3.5);
        assert_eq!(grad(&c, &plane, Vec2::new(-4.0, 9.0)).unwrap(), Vec2::ZERO);

        let q = ScalarField2::new(|p| p.x * p.x + p.y * p.y).with_fd_step(1e-5);
        let g = grad(&q, &plane, Vec2::new(1.0, 1.0)).unwrap();
        assert!((g.x - 2.0).abs() < 1e-8 && (g.y - 2.0).abs() < 1e-8);
    }

    #[test]
    fn stencil_leaving_domain_is_rejected() {
        let d = PlanarDomain::rect(Rect::new(0.0, 1.0, 0.0, 1.0));
        let f = ScalarField2::new(|p| p.x);
        let err = grad(&f, &d, Vec2::new(0.0, 0.5)).unwrap_err();
        assert!(matches!(err, FieldError::StencilOutOfDomain { .. }));
        assert!(hessian(&f, &d, Vec2::new(0.5, 1.0)).is_err());
        assert!(grad(&f, &d, Vec2::new(0.5, 0.5)).is_ok());
    }

    #[test]
    fn fd_hessian_is_symmetric_and_accurate() {
        let f = ScalarField2::new(|p| (p.x * p.y).sin() + p.x.powi(3));
        let p = Vec2::new(0.3, -0.7);
        let h = f.hess_unchecked(p);
        let (x, y) = (p.x, p.y);
        let exact_xy = (x * y).cos() - x * y * (x * y).sin();
        let exact_xx = -y * y * (x * y).sin() + 6.0 * x;
        assert!((h.xy - exact_xy).abs() < 1e-5);
        assert!((h.xx - exact_xx).abs() < 1e-5);
    }

    #[test]
    fn rk4_constant_field() {
        let tr = rk4_integrate(|_| Some(Vec2::new(0.0, 1.0)), Vec2::ZERO, 0.1, 10, |_| false).unwrap();
        let end = *tr.points.last().unwrap();
        assert!(end.dist(Vec2::new(0.0, 1.0)) < 1e-14);
        assert_eq!(tr.stop, StopReason::Completed);
    }

    fn circle_field(z: Vec2) -> Option<Vec2> {
        let r = z.norm();
        (r > 1e-3).then(|| Vec2::new(-z.y / r, z.x / r))
    }

    #[test]
    fn rk4_closes_the_circle() {
        let n = 1000;
        let tr = rk4_integrate(circle_field, Vec2::new(1.0, 0.0), 2.0 * PI / n as f64, n, |_| false).unwrap();
        assert!(tr.points.last().unwrap().dist(Vec2::new(1.0, 0.0)) < 1e-9);
    }

    #[test]
    fn rk4_stops_where_field_is_undefined() {
        let v = |z: Vec2| (z.norm() > 0.05).then_some(Vec2::new(-1.0, 0.0));
        let tr = rk4_integrate(v, Vec2::new(1.0, 0.0), 0.01, 500, |_| false).unwrap();
        assert_eq!(tr.stop, StopReason::FieldUndefined);
        assert!(tr.points.last().unwrap().x > 0.0);
        assert!(rk4_integrate(v, Vec2::ZERO, 0.1, 1, |_| false).is_err());
    }

    #[test]
    fn rk4_fourth_order() {
        let err = |n: usize| {
            let tr = rk4_integrate(circle_field, Vec2::new(1.0, 0.0), 2.0 * PI / n as f64, n, |_| false).unwrap();
            tr.points.last().unwrap().dist(Vec2::new(1.0, 0.0))
        };
        let (e1, e2, e3) = (err(10), err(20), err(40));
        assert!(e1 / e2 >= 8.0, "{e1} {e2}");
        assert!(e2 / e3 >= 8.0, "{e2} {e3}");
    }

    #[test]
    fn simpson_integrates_smooth_and_kinked() {
        let v = adaptive_simpson(f64::sin, 0.0, PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
        let k = adaptive_simpson(f64::abs, -1.0, 2.0, 1e-12);
        assert!((k - 2.5).abs() < 1e-10);
    }

    #[test]
    fn grid_respects_membership() {
        let d = PlanarDomain::rect(Rect::square(1.0)).with_membership(|p| p.x > 0.0);
        let g = Grid2::new(d.clone(), 11, 11).unwrap();
        assert!(g.nodes.iter().all(|n| d.contains(n.p)));
        assert_eq!(g.nodes.len(), 5 * 11);
        assert!(Grid2::new(PlanarDomain::plane(), 3, 3).is_err());
    }
}
