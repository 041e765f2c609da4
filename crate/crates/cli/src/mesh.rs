//! Triangle meshes in the OBJ subset `v`, `f` and `#` comments.

use std::fmt::Write as _;

use thiserror::Error;

/// Faces with area at or below this are dropped and rejected by the linter.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Clone, Debug, Default)]
pub struct Mesh {
    pub comments: Vec<String>,
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices.
    pub faces: Vec<[usize; 3]>,
}

/// What [`Mesh::add_grid`] left out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GridStats {
    pub vertices: usize,
    pub faces: usize,
    pub missing_vertices: usize,
    pub dropped_faces: usize,
}

fn area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
}

impl Mesh {
    /// Appends an `ni x nj` lattice, two triangles per cell. Points where
    /// `vertex` gives `None` or a non-finite coordinate are skipped along
    /// with the faces that use them.
    pub fn add_grid(&mut self, ni: usize, nj: usize, vertex: impl Fn(usize, usize) -> Option<[f64; 3]>) -> GridStats {
        let mut stats = GridStats::default();
        let mut index = vec![None; ni * nj];
        for i in 0..ni {
            for j in 0..nj {
                match vertex(i, j).filter(|v| v.iter().all(|c| c.is_finite())) {
                    Some(v) => {
                        index[i * nj + j] = Some(self.vertices.len());
                        self.vertices.push(v);
                        stats.vertices += 1;
                    }
                    None => stats.missing_vertices += 1,
                }
            }
        }
        for i in 0..ni.saturating_sub(1) {
            for j in 0..nj.saturating_sub(1) {
                let (a, b, c, d) = (index[i * nj + j], index[(i + 1) * nj + j], index[i * nj + j + 1], index[(i + 1) * nj + j + 1]);
                for tri in [[a, b, d], [a, d, c]] {
                    let Some(f) = tri.iter().copied().collect::<Option<Vec<usize>>>() else {
                        stats.dropped_faces += 1;
                        continue;
                    };
                    if area(self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]) <= DEGENERATE_AREA {
                        stats.dropped_faces += 1;
                        continue;
                    }
                    self.faces.push([f[0], f[1], f[2]]);
                    stats.faces += 1;
                }
            }
        }
        stats
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            for line in c.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct LintError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ObjStats {
    pub vertices: usize,
    pub faces: usize,
}

/// Structural check of the OBJ subset: three finite coordinates per `v`,
/// three distinct in-range one-based indices per `f`, no face with area at
/// or below [`DEGENERATE_AREA`], nothing else besides comments and blanks.
pub fn lint_obj(text: &str) -> Result<ObjStats, Vec<LintError>> {
    let mut errors = Vec::new();
    let mut verts: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<(usize, [usize; 3])> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut err = |m: String| errors.push(LintError { line, message: m });
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut parts = l.split_whitespace();
        let tag = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        match tag {
            "v" => {
                let c: Vec<f64> = rest.iter().filter_map(|s| s.parse().ok()).collect();
                if rest.len() != 3 || c.len() != 3 || c.iter().any(|x| !x.is_finite()) {
                    err(format!("vertex needs three finite numbers: `{l}`"));
                    verts.push([f64::NAN; 3]);
                } else {
                    verts.push([c[0], c[1], c[2]]);
                }
            }
            "f" => {
                let ix: Vec<usize> = rest.iter().filter_map(|s| s.parse().ok()).collect();
                if rest.len() != 3 || ix.len() != 3 {
                    err(format!("face needs three vertex indices: `{l}`"));
                } else {
                    faces.push((line, [ix[0], ix[1], ix[2]]));
                }
            }
            other => err(format!("record `{other}` is outside the v/f subset")),
        }
    }
    for &(line, f) in &faces {
        if f.iter().any(|&i| i == 0 || i > verts.len()) {
            errors.push(LintError { line, message: format!("index out of range 1..={}", verts.len()) });
            continue;
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            errors.push(LintError { line, message: "repeated vertex".into() });
            continue;
        }
        let a = area(verts[f[0] - 1], verts[f[1] - 1], verts[f[2] - 1]);
        if !(a > DEGENERATE_AREA) {
            errors.push(LintError { line, message: format!("degenerate face, area {a:e}") });
        }
    }
    if errors.is_empty() {
        Ok(ObjStats { vertices: verts.len(), faces: faces.len() })
    } else {
        Err(errors)
    }
}
