//! CSV output for seeds and loci, and the seed sample reader.

use hmin_core::fields::Vec2;
use hmin_core::ruled::LociReport;
use hmin_core::seed::{CurveJet, SeedCurve};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct SeedRow {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
    pub kappa: f64,
}

impl SeedRow {
    pub fn new(s: f64, j: &CurveJet) -> Self {
        Self { s, x: j.pos.x, y: j.pos.y, dx: j.d1.x, dy: j.d1.y, kappa: j.kappa() }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LocusRow {
    pub s: f64,
    pub r: f64,
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub kappa: f64,
    #[serde(rename = "W")]
    pub w: Option<f64>,
    pub branch: String,
}

fn write_rows<T: Serialize>(rows: &[T], header: &[&str]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for r in rows {
        w.serialize(r).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

pub const SEED_HEADER: [&str; 6] = ["s", "x", "y", "dx", "dy", "kappa"];
pub const LOCI_HEADER: [&str; 8] = ["s", "r", "x", "y", "t", "kappa", "W", "branch"];

pub fn seed_csv(rows: &[SeedRow]) -> Vec<u8> {
    write_rows(rows, &SEED_HEADER)
}

pub fn loci_csv(rows: &[LocusRow]) -> Vec<u8> {
    write_rows(rows, &LOCI_HEADER)
}

/// One row per characteristic root, in sampling order.
pub fn loci_rows(rep: &LociReport) -> Vec<LocusRow> {
    rep.points
        .iter()
        .map(|p| LocusRow {
            s: p.s,
            r: p.r,
            x: p.image.x,
            y: p.image.y,
            t: p.image.t,
            kappa: p.kappa,
            w: p.w_direct,
            branch: format!("{}/{}", p.case.label(), branch_label(p.branch)),
        })
        .collect()
}

/// One row per sample of the singular locus `r = 1 / kappa`; `W` is empty
/// because the chart is not invertible there.
pub fn singular_rows(rep: &LociReport, embed: impl Fn(f64, f64) -> Option<[f64; 3]>) -> Vec<LocusRow> {
    rep.singular
        .points()
        .filter_map(|(s, r)| {
            let [x, y, t] = embed(s, r)?;
            Some(LocusRow { s, r, x, y, t, kappa: 1.0 / r, w: None, branch: "singular".into() })
        })
        .collect()
}

fn branch_label(b: hmin_core::ruled::RootBranch) -> &'static str {
    match b {
        hmin_core::ruled::RootBranch::Near => "near",
        hmin_core::ruled::RootBranch::Far => "far",
    }
}

/// Reads a seed table with the `hmin seed` header. Arclengths must be
/// uniformly spaced; accelerations are rebuilt as `kappa * tangent^perp`.
pub fn read_seed_csv(bytes: &[u8], name: &str) -> Result<SeedCurve, CliError> {
    let mut rd = csv::Reader::from_reader(bytes);
    let header = rd.headers().map_err(|e| CliError::spec(format!("{name}: {e}")))?.clone();
    if header.iter().collect::<Vec<_>>() != SEED_HEADER {
        return Err(CliError::spec(format!("{name}: header must be {}", SEED_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for r in rd.deserialize::<SeedRow>() {
        rows.push(r.map_err(|e| CliError::spec(format!("{name}: {e}")))?);
    }
    if rows.len() < 2 {
        return Err(CliError::spec(format!("{name}: need at least two samples")));
    }
    let ds = (rows[rows.len() - 1].s - rows[0].s) / (rows.len() - 1) as f64;
    for (k, w) in rows.windows(2).enumerate() {
        if ((w[1].s - w[0].s) - ds).abs() > 1e-9 * ds.abs().max(1.0) {
            return Err(CliError::spec(format!("{name}: arclength spacing is not uniform at row {}", k + 2)));
        }
    }
    let jets = rows
        .iter()
        .map(|r| {
            let d1 = Vec2::new(r.dx, r.dy);
            CurveJet { pos: Vec2::new(r.x, r.y), d1, d2: d1.perp() * r.kappa }
        })
        .collect();
    SeedCurve::from_samples(rows[0].s, ds, jets, name).map_err(|e| CliError::spec(format!("{name}: {e}")))
}
