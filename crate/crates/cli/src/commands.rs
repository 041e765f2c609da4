//! The six subcommands. Each returns a report plus the artifacts to write;
//! nothing touches the file system except spec and sample reads.

use std::path::{Path, PathBuf};

use hmin_core::fields::{Grid2, Rect, Vec2};
use hmin_core::gallery::{gallery_get_with, quasi_random, verify_entry, Check, ExpectedLocus, GalleryEntry, GalleryParams, Tolerances, CATALOG};
use hmin_core::heis::HPoint;
use hmin_core::par::{self, Execution};
use hmin_core::ruled::{
    characteristic_locus, classify_entire_graph, minimality_sample, near_root, one_sided_slopes, Classification, ClassifyOptions, LocusOptions, RuledPatch,
};
use hmin_core::seed::{curvature, extract_seed, f_jacobian_det, f_jacobian_det_fd, SeedCurve, SeedError};
use hmin_core::surface::{characteristic_scan, curvature_scan, GraphPatch};
use serde::Serialize;

use crate::error::CliError;
use crate::mesh::{lint_obj, Mesh};
use crate::report::{InputsDigest, Report};
use crate::spec::{self, ImplicitSpec, Numeric, RuledSpec, SurfaceKind, SurfaceSpec};
use crate::tables::{self, SeedRow};

pub const DEFAULT_GRID: [usize; 2] = [101, 101];
/// Smallest `|det DF|` a mesh vertex may have.
pub const MESH_DET_MIN: f64 = 0.02;

/// Options shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Common {
    pub spec: Option<PathBuf>,
    pub grid: Option<[usize; 2]>,
    pub tol: Vec<String>,
    pub exec: Execution,
}

/// A report and the files that go with it, written by the caller.
pub struct Outcome {
    pub report: Report,
    pub artifacts: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    fn new(report: Report) -> Self {
        Self { report, artifacts: Vec::new() }
    }

    fn artifact(&mut self, name: &str, bytes: Vec<u8>) {
        self.report.outputs.push(name.into());
        self.artifacts.push((name.into(), bytes));
    }
}

struct Ctx {
    spec: SurfaceSpec,
    dir: PathBuf,
    numeric: Numeric,
    grid: [usize; 2],
    digest: InputsDigest,
    exec: Execution,
}

fn context(command: &str, c: &Common) -> Result<Ctx, CliError> {
    let path = c.spec.as_deref().ok_or_else(|| CliError::spec(format!("`{command}` needs --spec FILE")))?;
    let loaded = spec::load(path)?;
    let mut numeric = loaded.spec.numeric.clone();
    for kv in &c.tol {
        numeric.set(kv)?;
    }
    numeric.validate()?;
    let grid = c.grid.or(loaded.spec.grid).unwrap_or(DEFAULT_GRID);
    if grid.iter().any(|&n| n < 2) {
        return Err(CliError::spec(format!("grid needs at least 2 x 2 nodes, got {} x {}", grid[0], grid[1])));
    }
    let mut digest = InputsDigest::default();
    digest.add("command", command.as_bytes());
    digest.add("spec", &loaded.bytes);
    digest.add("tol", c.tol.join("\n").as_bytes());
    digest.add("grid", format!("{}x{}", grid[0], grid[1]).as_bytes());
    Ok(Ctx { spec: loaded.spec, dir: loaded.dir, numeric, grid, digest, exec: c.exec })
}

/// The spec's surface, built.
enum Subject {
    Graph { patch: GraphPatch, window: Rect, label: String },
    Implicit { imp: ImplicitSpec, label: String },
    Ruled { ruled: RuledSpec, label: String },
    Gallery(Box<GalleryEntry>),
}

impl Subject {
    fn label(&self) -> String {
        match self {
            Subject::Graph { label, .. } | Subject::Implicit { label, .. } | Subject::Ruled { label, .. } => label.clone(),
            Subject::Gallery(e) => format!("gallery {}", e.name),
        }
    }
}

fn subject(ctx: &mut Ctx) -> Result<Subject, CliError> {
    let num = &ctx.numeric;
    Ok(match &ctx.spec.surface {
        SurfaceKind::Graph { h, domain } => {
            Subject::Graph { patch: spec::graph_patch(h, *domain, num)?, window: domain.to_rect()?, label: format!("graph t = {h}") }
        }
        SurfaceKind::Implicit { phi, orientation, window, t_range } => {
            Subject::Implicit { imp: spec::implicit_surface(phi, *orientation, *window, *t_range, num)?, label: format!("level set {phi} = 0") }
        }
        SurfaceKind::Ruled { seed, h0, s_range, r_range } => {
            let ruled = spec::ruled_patch(seed, h0, *s_range, *r_range, &ctx.dir)?;
            ctx.digest.add("seed-samples", &ruled.extra_input);
            let what = match seed {
                spec::SeedSpec::Expr { x, y } => format!("({x}, {y})"),
                spec::SeedSpec::File { samples } => samples.display().to_string(),
            };
            Subject::Ruled { ruled, label: format!("ruled seed {what}, h0 = {h0}") }
        }
        SurfaceKind::Gallery { name, params } => Subject::Gallery(Box::new(gallery_get_with(name, params)?)),
    })
}

fn finish(mut out: Outcome, ctx: Ctx, started: std::time::Instant) -> Outcome {
    out.report.inputs_digest = ctx.digest.hex();
    out.report.finish();
    out.report.wall_time_s = started.elapsed().as_secs_f64();
    out
}

fn tolerances(num: &Numeric, grid: [usize; 2], exec: Execution) -> Tolerances {
    Tolerances {
        h_analytic: num.tol_h_analytic,
        h_fd: num.tol_h_fd,
        locus: num.tol_locus,
        w_min: num.w_min,
        grid: grid[0].max(grid[1]),
        exec,
        ..Default::default()
    }
}

// ---------------------------------------------------------------- verify

pub fn verify(c: &Common) -> Result<Outcome, CliError> {
    let started = std::time::Instant::now();
    let mut ctx = context("verify", c)?;
    let subj = subject(&mut ctx)?;
    let mut rep = Report::new("verify", subj.label(), ctx.numeric.clone());
    match &subj {
        Subject::Graph { patch, window, .. } => verify_graph(patch, *window, &ctx, &mut rep)?,
        Subject::Implicit { imp, .. } => verify_implicit(imp, &ctx, &mut rep)?,
        Subject::Ruled { ruled, .. } => verify_ruled(&ruled.patch, ruled.s_range, ruled.r_range, &ctx, &mut rep),
        Subject::Gallery(e) => {
            let v = verify_entry(e, &tolerances(&ctx.numeric, ctx.grid, ctx.exec));
            rep.checks = v.checks;
            rep.info("params", &v.params);
            rep.info("notes", &e.notes);
        }
    }
    Ok(finish(Outcome::new(rep), ctx, started))
}

#[derive(Serialize)]
struct ComponentSummary {
    centroid: [f64; 2],
    points: usize,
    extent: f64,
    isolated: bool,
}

fn verify_graph(patch: &GraphPatch, window: Rect, ctx: &Ctx, rep: &mut Report) -> Result<(), CliError> {
    let num = &ctx.numeric;
    let grid = Grid2::on_rect(patch.domain.clone(), window, ctx.grid[0], ctx.grid[1]).map_err(|e| CliError::spec(e.to_string()))?;
    let bad = grid.nodes.iter().filter(|n| !patch.height(n.p).is_finite()).count();
    rep.check(Check::at_most("non-finite-heights", bad as f64, 0.0).with_detail("grid nodes where h is NaN or infinite"));
    let scan = curvature_scan(patch, &grid, num.w_min, 0.0, ctx.exec);
    let at = scan.max_at.map(|p| format!(" at ({}, {})", p.x, p.y)).unwrap_or_default();
    rep.check(Check::at_most("max-abs-H", scan.max_abs, num.tol_h()).with_detail(format!("{} nodes, {} skipped{at}", scan.evaluated, scan.skipped)));
    rep.check(Check::at_most("H-forms-agree", scan.max_form_gap, num.tol_h_fd).with_detail("closed form vs divergence form"));
    rep.check(Check::at_least("evaluated-nodes", scan.evaluated as f64, 1.0));
    rep.info("curvature_scan", &scan);
    let cs = characteristic_scan(patch, &grid, num.eps_char, ctx.exec);
    let comps: Vec<ComponentSummary> = cs
        .components
        .iter()
        .map(|k| {
            let c = k.centroid();
            ComponentSummary { centroid: [c.x, c.y], points: k.points.len(), extent: k.extent, isolated: k.isolated }
        })
        .collect();
    rep.info("characteristic_components", &comps);
    rep.info("min_w", cs.min_w);
    Ok(())
}

/// Roots of `phi(x, y, .)` on `t_range`: sign changes over `n` cells,
/// refined by bisection.
fn vertical_roots(imp: &ImplicitSpec, z: Vec2, n: usize) -> Vec<f64> {
    let (t0, t1) = imp.t_range;
    let f = |t: f64| imp.surface.value(HPoint::new(z.x, z.y, t));
    let mut out = Vec::new();
    let mut prev = (t0, f(t0));
    for k in 1..=n {
        let t = t0 + (t1 - t0) * k as f64 / n as f64;
        let v = f(t);
        if prev.1 == 0.0 {
            out.push(prev.0);
        } else if prev.1 * v < 0.0 {
            let (mut a, mut b, mut fa) = (prev.0, t, prev.1);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 || b - a <= 1e-15 * (1.0 + m.abs()) {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = (t, v);
    }
    out
}

fn verify_implicit(imp: &ImplicitSpec, ctx: &Ctx, rep: &mut Report) -> Result<(), CliError> {
    let num = &ctx.numeric;
    let grid =
        Grid2::on_rect(hmin_core::fields::PlanarDomain::rect(imp.window), imp.window, ctx.grid[0], ctx.grid[1]).map_err(|e| CliError::spec(e.to_string()))?;
    let per_node = par::map(ctx.exec, &grid.nodes, |n| {
        let mut pts = Vec::new();
        for t in vertical_roots(imp, n.p, 400) {
            let g = HPoint::new(n.p.x, n.p.y, t);
            let w = imp.surface.horizontal_data(g).w;
            pts.push((g, w, imp.surface.h_mean_curvature(g).ok()));
        }
        pts
    });
    let (mut evaluated, mut skipped, mut residual, mut max_abs) = (0usize, 0usize, 0.0f64, 0.0f64);
    let mut max_at = None;
    for (g, w, h) in per_node.into_iter().flatten() {
        residual = residual.max(imp.surface.value(g).abs());
        match h {
            Some(h) if w > num.w_min => {
                evaluated += 1;
                if !(h.abs() <= max_abs) {
                    max_abs = h.abs();
                    max_at = Some([g.x, g.y, g.t]);
                }
            }
            _ => skipped += 1,
        }
    }
    let at = max_at.map(|p| format!(" at ({}, {}, {})", p[0], p[1], p[2])).unwrap_or_default();
    rep.check(Check::at_most("max-abs-H", max_abs, num.tol_h()).with_detail(format!("{evaluated} surface points, {skipped} near-characteristic{at}")));
    rep.check(Check::at_least("evaluated-points", evaluated as f64, 1.0));
    rep.info("max_level_residual", residual);
    Ok(())
}

fn chart_points(s: (f64, f64), r: (f64, f64), ns: usize, nr: usize) -> Vec<(f64, f64)> {
    (0..ns).flat_map(|i| (0..nr).map(move |j| (s.0 + (s.1 - s.0) * i as f64 / (ns - 1) as f64, r.0 + (r.1 - r.0) * j as f64 / (nr - 1) as f64))).collect()
}

fn verify_ruled(p: &RuledPatch, s: (f64, f64), r: (f64, f64), ctx: &Ctx, rep: &mut Report) {
    let num = &ctx.numeric;
    let (ns, nr) = (ctx.grid[0].min(201), ctx.grid[1].min(201));
    let valid: Vec<(f64, f64)> = chart_points(s, r, ns, nr).into_iter().filter(|&(s, r)| p.graph_valid(s, r)).collect();
    rep.check(Check::at_least("graph-valid-points", valid.len() as f64, 1.0));
    let w_err = par::map(ctx.exec, &valid, |&(s, r)| match (p.w_field(s, r), p.w_direct(s, r)) {
        (Ok(a), Ok(b)) => (a - b).abs(),
        _ => f64::INFINITY,
    })
    .into_iter()
    .fold(0.0, f64::max);
    rep.check(Check::at_most("w-consistency", w_err, num.tol_locus).with_detail("closed-form W against W read off the parameterization"));
    let ode = par::map(ctx.exec, &valid, |&(s, r)| p.w_ode_residual(s, r).unwrap_or(f64::INFINITY)).into_iter().fold(0.0, f64::max);
    rep.check(Check::at_most("ode-residual", ode, num.tol_locus));
    let jac: Vec<(f64, f64)> = quasi_random(1000).into_iter().map(|(u, v)| (s.0 + (s.1 - s.0) * u, r.0 + (r.1 - r.0) * v)).collect();
    let jac_err = par::map(ctx.exec, &jac, |&(s, r)| match (f_jacobian_det(&p.seed, s, r), f_jacobian_det_fd(&p.seed, s, r, num.fd_step)) {
        (Ok(a), Ok(b)) => (a - b).abs(),
        _ => f64::INFINITY,
    })
    .into_iter()
    .fold(0.0, f64::max);
    rep.check(Check::at_most("jacobian-identity", jac_err, num.tol_locus).with_detail("1000 chart samples"));
    let built = minimality_sample(p, s, r, ns.min(61), nr.min(61), ctx.exec);
    rep.check(Check::at_most("max-abs-H-built", built.max_abs, num.tol_h_fd).with_detail(format!("{} graph points", built.evaluated)));
    let loci = characteristic_locus(p, &LocusOptions { exec: ctx.exec, ..Default::default() });
    rep.info("characteristic_roots", loci.points.len());
    rep.info("singular_samples", loci.singular.points().count());
}

// ------------------------------------------------------------------ seed

/// Start point and span for `seed`, overriding the spec's `seed` block.
#[derive(Clone, Copy, Debug, Default)]
pub struct SeedArgs {
    pub z0: Option<[f64; 2]>,
    pub span: Option<f64>,
}

pub fn seed(c: &Common, a: SeedArgs) -> Result<Outcome, CliError> {
    let started = std::time::Instant::now();
    let mut ctx = context("seed", c)?;
    let subj = subject(&mut ctx)?;
    let req = ctx.spec.seed;
    let known = match &subj {
        Subject::Gallery(e) => e.known_seed.as_ref(),
        _ => None,
    };
    let (patch, default_z0, default_span) = match &subj {
        Subject::Graph { patch, .. } => (patch.clone(), None, 1.0),
        Subject::Gallery(e) => match known {
            Some(k) => (e.sheets[k.sheet].patch.clone(), Some([k.z0.x, k.z0.y]), k.span),
            None => (e.sheets.first().ok_or_else(|| CliError::spec(format!("gallery entry {} has no graph sheet", e.name)))?.patch.clone(), None, 1.0),
        },
        _ => return Err(CliError::spec("`seed` needs a graph or gallery spec")),
    };
    let patch = patch.with_eps_char(ctx.numeric.eps_char);
    let z0 = a.z0.or(req.map(|r| r.z0)).or(default_z0).ok_or_else(|| CliError::spec("no start point: pass --z0 X Y or a seed block"))?;
    let span = a.span.or(req.and_then(|r| r.span)).unwrap_or(default_span);
    ctx.digest.add("z0", format!("{} {}", z0[0], z0[1]).as_bytes());
    ctx.digest.add("span", span.to_string().as_bytes());

    let z = Vec2::new(z0[0], z0[1]);
    let curve = extract_seed(&patch, z, span, ctx.numeric.rk4_step).map_err(|e| match e {
        SeedError::CharacteristicStart { .. } => CliError::CharacteristicStart(e.to_string()),
        other => CliError::spec(other.to_string()),
    })?;
    let samples = curve.samples().unwrap_or_default();
    let rows: Vec<SeedRow> = samples.iter().map(|(s, j)| SeedRow::new(*s, j)).collect();

    let mut rep = Report::new("seed", subj.label(), ctx.numeric.clone());
    let speed = samples.iter().map(|(_, j)| (j.d1.norm() - 1.0).abs()).fold(0.0, f64::max);
    rep.check(Check::at_most("unit-speed", speed, 1e-12).with_detail("max ||gamma'| - 1| at the samples"));
    let k2 = samples.iter().map(|(_, j)| (j.kappa() * j.kappa() - j.d2.norm2()).abs()).fold(0.0, f64::max);
    rep.check(Check::at_most("kappa-squared-identity", k2, 1e-6).with_detail("kappa^2 against |gamma''|^2"));
    match known {
        Some(k) if k.z0.dist(z) <= 1e-12 => closed_form_seed_checks(&curve, &k.seed, &mut rep),
        Some(_) => rep.info("closed_form", "not compared: start point differs from the catalog's"),
        None => {}
    }
    rep.info("s_range", [curve.s_min, curve.s_max]);
    rep.info("samples", rows.len());
    rep.info("provenance", &curve.provenance);
    let mut out = Outcome::new(rep);
    out.artifact("seed.csv", tables::seed_csv(&rows));
    Ok(finish(out, ctx, started))
}

fn closed_form_seed_checks(ext: &SeedCurve, want: &SeedCurve, rep: &mut Report) {
    let (lo, hi) = (ext.s_min.max(want.s_min), ext.s_max.min(want.s_max));
    let ss: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    let (mut pos, mut kap) = (0.0f64, 0.0f64);
    for &s in &ss {
        if let (Ok(a), Ok(b)) = (ext.point(s), want.point(s)) {
            pos = pos.max(a.dist(b) / s.abs().max(1.0));
        }
        if let (Ok(a), Ok(b)) = (curvature(ext, s), curvature(want, s)) {
            kap = kap.max((a - b).abs());
        }
    }
    rep.check(Check::at_most("seed-vs-closed-form", pos, 1e-8).with_detail(format!("per unit arclength on [{lo:.4}, {hi:.4}]")));
    rep.check(Check::at_most("kappa-vs-closed-form", kap, 1e-6));
}

// ----------------------------------------------------------------- build

/// Mesh of a ruled patch over a chart rectangle, clamping vertices near
/// the singular locus to `|det DF| >= MESH_DET_MIN` on their own side.
fn ruled_mesh(mesh: &mut Mesh, p: &RuledPatch, s: (f64, f64), r: (f64, f64), ns: usize, nr: usize) -> (crate::mesh::GridStats, usize) {
    let clamped = std::sync::atomic::AtomicUsize::new(0);
    let stats = mesh.add_grid(ns, nr, |i, j| {
        let sv = s.0 + (s.1 - s.0) * i as f64 / (ns - 1) as f64;
        let mut rv = r.0 + (r.1 - r.0) * j as f64 / (nr - 1) as f64;
        let k = p.kappa(sv).ok()?;
        let det = -1.0 + rv * k;
        if det.abs() < MESH_DET_MIN {
            let side = if det > 0.0 { 1.0 } else { -1.0 };
            rv = (1.0 + side * MESH_DET_MIN) / k;
            clamped.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        p.embed(sv, rv).ok().map(|g| [g.x, g.y, g.t])
    });
    (stats, clamped.into_inner())
}

pub fn build(c: &Common) -> Result<Outcome, CliError> {
    let started = std::time::Instant::now();
    let mut ctx = context("build", c)?;
    let subj = subject(&mut ctx)?;
    let [ns, nr] = ctx.grid;
    let mut rep = Report::new("build", subj.label(), ctx.numeric.clone());
    let mut mesh = Mesh::default();
    mesh.comments.push("hmin mesh".into());
    mesh.comments.push(format!("subject: {}", subj.label()));
    let mut clamped_total = 0;
    let mut dropped = 0;
    let mut missing = 0;
    match &subj {
        Subject::Ruled { ruled, .. } => {
            mesh.comments
                .push(format!("chart (s, r) in [{}, {}] x [{}, {}], {ns} x {nr} nodes", ruled.s_range.0, ruled.s_range.1, ruled.r_range.0, ruled.r_range.1));
            let (st, cl) = ruled_mesh(&mut mesh, &ruled.patch, ruled.s_range, ruled.r_range, ns, nr);
            clamped_total += cl;
            dropped += st.dropped_faces;
            missing += st.missing_vertices;
            let b = minimality_sample(&ruled.patch, ruled.s_range, ruled.r_range, ns.min(61), nr.min(61), ctx.exec);
            rep.check(Check::at_most("max-abs-H-built", b.max_abs, ctx.numeric.tol_h_fd).with_detail(format!("{} graph points", b.evaluated)));
        }
        Subject::Gallery(e) => {
            if e.patches.is_empty() {
                return Err(CliError::spec(format!("gallery entry {} has no ruled patch", e.name)));
            }
            let mut worst = 0.0f64;
            let mut n = 0;
            for pe in &e.patches {
                mesh.comments.push(format!(
                    "patch {}: chart (s, r) in [{}, {}] x [{}, {}], {ns} x {nr} nodes, vertices from {}",
                    pe.label,
                    pe.s_sample.0,
                    pe.s_sample.1,
                    pe.r_sample.0,
                    pe.r_sample.1,
                    mesh.vertices.len() + 1
                ));
                let (st, cl) = ruled_mesh(&mut mesh, &pe.patch, pe.s_sample, pe.r_sample, ns, nr);
                clamped_total += cl;
                dropped += st.dropped_faces;
                missing += st.missing_vertices;
                let b = minimality_sample(&pe.patch, pe.s_sample, pe.r_sample, ns.min(41), nr.min(41), ctx.exec);
                worst = worst.max(b.max_abs);
                n += b.evaluated;
            }
            if let Some((expr, imp)) = &e.implicit {
                let r = mesh.vertices.iter().map(|v| imp.value(HPoint::new(v[0], v[1], v[2])).abs()).fold(0.0, f64::max);
                rep.check(Check::at_most("implicit-residual", r, 1e-9).with_detail(format!("|{expr}| at every vertex")));
            }
            let tol = if e.expected_h == 0.0 { ctx.numeric.tol_h_fd } else { f64::INFINITY };
            rep.check(Check::at_most("max-abs-H-built", worst, tol).with_detail(format!("{n} graph points")));
        }
        Subject::Graph { patch, window, .. } => {
            mesh.comments.push(format!("chart (x, y) in [{}, {}] x [{}, {}], {ns} x {nr} nodes", window.xmin, window.xmax, window.ymin, window.ymax));
            let st = mesh.add_grid(ns, nr, |i, j| {
                let x = window.xmin + (window.xmax - window.xmin) * i as f64 / (ns - 1) as f64;
                let y = window.ymin + (window.ymax - window.ymin) * j as f64 / (nr - 1) as f64;
                let z = Vec2::new(x, y);
                patch.domain.contains(z).then(|| [x, y, patch.height(z)])
            });
            dropped += st.dropped_faces;
            missing += st.missing_vertices;
            let grid = Grid2::on_rect(patch.domain.clone(), *window, ns, nr).map_err(|e| CliError::spec(e.to_string()))?;
            let scan = curvature_scan(patch, &grid, ctx.numeric.w_min, 0.0, ctx.exec);
            rep.check(Check::at_most("max-abs-H", scan.max_abs, ctx.numeric.tol_h()).with_detail(format!("{} nodes", scan.evaluated)));
        }
        Subject::Implicit { .. } => return Err(CliError::spec("`build` needs a ruled, graph or gallery spec")),
    }
    mesh.comments.push(format!("clamped vertices (|det DF| < {MESH_DET_MIN}): {clamped_total}"));
    mesh.comments.push(format!("dropped faces: {dropped}; skipped vertices: {missing}"));
    let text = mesh.to_obj();
    match lint_obj(&text) {
        Ok(st) => rep.check(Check::flag("obj-lint", true, format!("{} vertices, {} faces", st.vertices, st.faces))),
        Err(errs) => rep.check(Check::flag("obj-lint", false, errs.iter().take(5).map(|e| e.to_string()).collect::<Vec<_>>().join("; "))),
    }
    rep.info("vertices", mesh.vertices.len());
    rep.info("faces", mesh.faces.len());
    rep.info("clamped_vertices", clamped_total);
    rep.info("dropped_faces", dropped);
    rep.info("skipped_vertices", missing);
    let mut out = Outcome::new(rep);
    out.artifact("mesh.obj", text.into_bytes());
    Ok(finish(out, ctx, started))
}

// ------------------------------------------------------------------ loci

pub fn loci(c: &Common) -> Result<Outcome, CliError> {
    let started = std::time::Instant::now();
    let mut ctx = context("loci", c)?;
    let subj = subject(&mut ctx)?;
    let samples = c.grid.map(|g| g[0]).unwrap_or(201);
    let mut opts = LocusOptions { samples, exec: ctx.exec, ..Default::default() };
    let (patch, expected) = match &subj {
        Subject::Ruled { ruled, .. } => (ruled.patch.clone(), None),
        Subject::Gallery(e) => {
            let pe = e.primary_patch().ok_or_else(|| CliError::spec(format!("gallery entry {} has no ruled patch", e.name)))?;
            opts.reference = e.reference_graph(pe).cloned();
            (RuledPatch { s_range: pe.s_sample, ..pe.patch.clone() }, Some(&e.expected_locus))
        }
        _ => return Err(CliError::spec("`loci` needs a ruled or gallery spec")),
    };
    let num = &ctx.numeric;
    let lr = characteristic_locus(&patch, &opts);
    let mut rep = Report::new("loci", subj.label(), num.clone());
    rep.check(Check::at_most("contact-residual", lr.max_contact_residual(), num.tol_locus).with_detail(format!("{} roots", lr.points.len())));
    rep.check(Check::at_most("W-at-roots", lr.max_w_check(), num.tol_locus));
    if let Some(exp) = expected {
        expected_locus_checks(&patch, &lr, exp, &opts, num.tol_locus, &mut rep);
        rep.info("expected", exp.describe());
    }
    let cases: Vec<(String, usize)> = lr.cases.iter().map(|(c, n)| (c.label().to_string(), *n)).collect();
    rep.info("cases", cases);
    rep.info("slope_jumps", &lr.slope_jumps);
    rep.info("singular_samples", lr.singular.points().count());
    let rows = tables::loci_rows(&lr);
    let singular = tables::singular_rows(&lr, |s, r| patch.embed(s, r).ok().map(|g| [g.x, g.y, g.t]));
    let mut out = Outcome::new(rep);
    out.artifact("loci.csv", tables::loci_csv(&rows));
    out.artifact("singular.csv", tables::loci_csv(&singular));
    Ok(finish(out, ctx, started))
}

fn expected_locus_checks(p: &RuledPatch, lr: &hmin_core::ruled::LociReport, exp: &ExpectedLocus, opts: &LocusOptions, tol: f64, rep: &mut Report) {
    match exp {
        ExpectedLocus::Empty => rep.check(Check::at_most("locus-empty", lr.points.len() as f64, 0.0).with_detail("number of roots")),
        ExpectedLocus::Point(g) => {
            let err = lr.points.iter().map(|q| q.image.euclid_dist(g)).fold(0.0, f64::max);
            let err = if lr.points.is_empty() { f64::INFINITY } else { err };
            rep.check(Check::at_most("locus-point", err, tol).with_detail(format!("{} roots; distance to ({}, {}, {})", lr.points.len(), g.x, g.y, g.t)));
        }
        ExpectedLocus::Curve { residual, description } => {
            let err = lr.points.iter().map(|q| residual(q.image).abs()).fold(0.0, f64::max);
            rep.check(Check::at_most("locus-curve", err, tol).with_detail(format!("{} roots on {description}", lr.points.len())));
        }
        ExpectedLocus::Kinked { s, r, jump } => {
            let got = near_root(p, *s, opts).unwrap_or(f64::NAN);
            rep.check(Check::at_most("locus-value", (got - r).abs(), tol).with_detail(format!("r({s}) = {got}")));
            let (l, rr) = one_sided_slopes(p, *s, 1e-3, opts).unwrap_or((f64::NAN, f64::NAN));
            rep.check(Check::at_most("slope-jump", ((rr - l).abs() - jump).abs(), 1e-3).with_detail(format!("left {l:.6}, right {rr:.6}")));
            let found = lr.slope_jumps.iter().any(|j| (j.s - s).abs() < 1e-9);
            rep.check(Check::flag("slope-jump-flagged", found, format!("{} corner(s) flagged", lr.slope_jumps.len())));
        }
    }
}

// -------------------------------------------------------------- classify

pub fn classify(c: &Common) -> Result<Outcome, CliError> {
    let started = std::time::Instant::now();
    let mut ctx = context("classify", c)?;
    let subj = subject(&mut ctx)?;
    let (patch, window) = match &subj {
        Subject::Graph { patch, window, .. } => (patch.clone(), *window),
        Subject::Gallery(e) => {
            let sh = e.sheets.first().ok_or_else(|| CliError::spec(format!("gallery entry {} has no graph sheet", e.name)))?;
            (sh.patch.clone(), sh.window)
        }
        _ => return Err(CliError::spec("`classify` needs a graph or gallery spec")),
    };
    let mut opts = ClassifyOptions { window, exec: ctx.exec, ..Default::default() };
    if let Some(g) = c.grid.or(ctx.spec.grid) {
        opts.grid = g[0].max(g[1]);
    }
    let verdict = classify_entire_graph(&patch, &opts);
    let mut rep = Report::new("classify", subj.label(), ctx.numeric.clone());
    let decided = !matches!(verdict, Classification::Inconclusive { .. });
    rep.check(Check::flag("verdict", decided, verdict.name()));
    rep.info("classification", &verdict);
    rep.info("window", [window.xmin, window.xmax, window.ymin, window.ymax]);
    rep.info("grid", opts.grid);
    Ok(finish(Outcome::new(rep), ctx, started))
}

// --------------------------------------------------------------- gallery

/// Resolves `all` and validates every name before any work starts.
pub fn gallery_names(names: &[String], params: &GalleryParams) -> Result<Vec<String>, CliError> {
    if names.is_empty() {
        return Err(CliError::spec("name at least one entry, or `all`"));
    }
    let mut out = Vec::new();
    for n in names {
        if n == "all" {
            out.extend(CATALOG.iter().map(|s| s.to_string()));
        } else {
            gallery_get_with(n, params)?;
            out.push(n.clone());
        }
    }
    Ok(out)
}

pub fn gallery(c: &Common, names: &[String], params: &GalleryParams) -> Result<Outcome, CliError> {
    let started = std::time::Instant::now();
    let names = gallery_names(names, params)?;
    let mut numeric = Numeric::default();
    for kv in &c.tol {
        numeric.set(kv)?;
    }
    numeric.validate()?;
    let grid = c.grid.unwrap_or(DEFAULT_GRID);
    let tol = tolerances(&numeric, grid, c.exec);
    let mut digest = InputsDigest::default();
    digest.add("command", b"gallery");
    digest.add("names", names.join(",").as_bytes());
    digest.add("params", serde_json::to_string(params).unwrap_or_default().as_bytes());
    digest.add("tol", c.tol.join("\n").as_bytes());
    digest.add("grid", format!("{}x{}", grid[0], grid[1]).as_bytes());
    let mut rep = Report::new("gallery", names.join(", "), numeric);
    let mut entries = Vec::new();
    for n in &names {
        let e = gallery_get_with(n, params)?;
        let v = verify_entry(&e, &tol);
        let failed: Vec<&str> = v.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let detail = if failed.is_empty() { format!("{} checks", v.checks.len()) } else { format!("failed: {}", failed.join(", ")) };
        rep.check(Check::flag(v.entry.clone(), v.pass, detail));
        entries.push(v);
    }
    rep.info("entries", &entries);
    let mut out = Outcome::new(rep);
    out.report.inputs_digest = digest.hex();
    out.report.finish();
    out.report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(out)
}

/// Writes artifacts and `report.json` into `dir`, creating it if needed.
pub fn write_outputs(out: &Outcome, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, bytes) in &out.artifacts {
        let p = dir.join(name);
        std::fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
    }
    let p = dir.join("report.json");
    let json = serde_json::to_vec_pretty(&out.report).expect("report serializes");
    std::fs::write(&p, json).map_err(|e| CliError::io(&p, e))
}
