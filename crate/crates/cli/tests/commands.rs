use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hmin_cli::mesh::lint_obj;
use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    report: Option<Value>,
    stderr: String,
}

fn hmin(dir: &Path, args: &[&str]) -> Run {
    hmin_env(dir, args, &[])
}

fn hmin_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hmin"));
    cmd.current_dir(dir).args(args).env_remove("HMIN_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let Output { status, stdout, stderr } = cmd.output().expect("run hmin");
    Run { code: status.code().expect("exit code"), report: serde_json::from_slice(&stdout).ok(), stderr: String::from_utf8_lossy(&stderr).into_owned() }
}

fn write_spec(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name} in {r}"))
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let header = rd.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rd.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

fn obj_vertices(text: &str) -> Vec<[f64; 3]> {
    text.lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let c: Vec<f64> = l.split_whitespace().map(|s| s.parse().unwrap()).collect();
            [c[0], c[1], c[2]]
        })
        .collect()
}

const HALF_CYLINDER: &str = r#"{"surface": {"kind": "ruled", "seed": {"x": "s", "y": "0"}, "h0": "sqrt(1-s^2)",
    "s_range": [-0.9, 0.9], "r_range": [-1, 1]}, "grid": [50, 50]}"#;

#[test]
fn build_half_cylinder_mesh() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "cyl.json", HALF_CYLINDER);
    let r = hmin(tmp.path(), &["build", "--spec", spec.to_str().unwrap(), "--out", "out"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(tmp.path().join("out/mesh.obj")).unwrap();
    let stats = lint_obj(&text).unwrap();
    assert_eq!((stats.vertices, stats.faces), (2500, 2 * 49 * 49));
    for [x, y, t] in obj_vertices(&text) {
        let res = (t - x * y / 2.0).powi(2) - (1.0 - x * x);
        assert!(res.abs() <= 1e-9, "({x}, {y}, {t}): {res}");
    }
    let report: Value = serde_json::from_slice(&fs::read(tmp.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report, r.report.unwrap());
}

#[test]
fn build_circle_seed_with_zero_height_is_flat() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(
        tmp.path(),
        "circle.json",
        r#"{"surface": {"kind": "ruled", "seed": {"x": "cos(s)", "y": "sin(s)"}, "h0": "0",
            "s_range": [0, 6.283185307179586], "r_range": [-0.5, 0.5]}, "grid": [40, 20]}"#,
    );
    let r = hmin(tmp.path(), &["build", "--spec", spec.to_str().unwrap(), "--out", "."]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let verts = obj_vertices(&fs::read_to_string(tmp.path().join("mesh.obj")).unwrap());
    assert_eq!(verts.len(), 800);
    assert!(verts.iter().all(|v| v[2] == 0.0));
}

#[test]
fn outputs_are_deterministic_across_runs_and_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "cyl.json", HALF_CYLINDER);
    let s = spec.to_str().unwrap();
    assert_eq!(hmin(tmp.path(), &["build", "--spec", s, "--out", "a"]).code, 0);
    assert_eq!(hmin(tmp.path(), &["build", "--spec", s, "--out", "b"]).code, 0);
    assert_eq!(hmin_env(tmp.path(), &["build", "--spec", s, "--out", "c"], &[("HMIN_THREADS", "1")]).code, 0);
    let a = fs::read(tmp.path().join("a/mesh.obj")).unwrap();
    assert_eq!(a, fs::read(tmp.path().join("b/mesh.obj")).unwrap());
    assert_eq!(a, fs::read(tmp.path().join("c/mesh.obj")).unwrap());

    let g = write_spec(tmp.path(), "opt.json", r#"{"surface": {"kind": "gallery", "name": "optreg2"}}"#);
    let g = g.to_str().unwrap();
    assert_eq!(hmin(tmp.path(), &["loci", "--spec", g, "--out", "l1"]).code, 0);
    assert_eq!(hmin_env(tmp.path(), &["loci", "--spec", g, "--out", "l2"], &[("HMIN_THREADS", "2")]).code, 0);
    for f in ["loci.csv", "singular.csv"] {
        assert_eq!(fs::read(tmp.path().join("l1").join(f)).unwrap(), fs::read(tmp.path().join("l2").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bad_thread_count_is_a_spec_error() {
    let tmp = TempDir::new().unwrap();
    let r = hmin_env(tmp.path(), &["gallery", "char-plane"], &[("HMIN_THREADS", "zero")]);
    assert_eq!(r.code, 2);
}

#[test]
fn verify_flags_a_non_minimal_graph() {
    let tmp = TempDir::new().unwrap();
    let spec =
        write_spec(tmp.path(), "bowl.json", r#"{"surface": {"kind": "graph", "h": "(x^2+y^2)/4", "domain": {"xmin": 1, "xmax": 2, "ymin": 0, "ymax": 1}}}"#);
    let r = hmin(tmp.path(), &["verify", "--spec", spec.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    let rep = r.report.unwrap();
    let h = check(&rep, "max-abs-H");
    assert_eq!(h["pass"], false);
    // sqrt(2) / 2 at the corner (1, 0)
    assert!((h["measured"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-9, "{h}");
}

#[test]
fn verify_minimal_graph_and_level_set() {
    let tmp = TempDir::new().unwrap();
    let g = write_spec(tmp.path(), "hyp.json", r#"{"surface": {"kind": "graph", "h": "x*y/2", "domain": {"xmin": -1, "xmax": 1, "ymin": 0.5, "ymax": 1.5}}}"#);
    let r = hmin(tmp.path(), &["verify", "--spec", g.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    let imp = write_spec(
        tmp.path(),
        "cyl.json",
        r#"{"surface": {"kind": "implicit", "phi": "(t - x*y/2)^2 - (1 - x^2)", "orientation": "positive",
            "window": {"xmin": -0.8, "xmax": 0.8, "ymin": -1, "ymax": 1}, "t_range": [0, 3]}, "grid": [41, 41]}"#,
    );
    let r = hmin(tmp.path(), &["verify", "--spec", imp.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(check(r.report.as_ref().unwrap(), "evaluated-points")["measured"].as_f64().unwrap() > 1000.0);
}

#[test]
fn malformed_expression_exits_2() {
    let tmp = TempDir::new().unwrap();
    for h in ["2**x", "2x", "sin(x", "foo(x)"] {
        let json = format!(r#"{{"surface": {{"kind": "graph", "h": "{h}", "domain": {{"xmin": 1, "xmax": 2, "ymin": 0, "ymax": 1}}}}}}"#);
        let spec = write_spec(tmp.path(), "bad.json", &json);
        let r = hmin(tmp.path(), &["verify", "--spec", spec.to_str().unwrap()]);
        assert_eq!(r.code, 2, "{h}: {}", r.stderr);
    }
}

#[test]
fn unknown_fields_and_missing_files_exit_2() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "typo.json", r#"{"surface": {"kind": "gallery", "name": "hyperbolic"}, "gird": [3, 3]}"#);
    assert_eq!(hmin(tmp.path(), &["verify", "--spec", spec.to_str().unwrap()]).code, 2);
    assert_eq!(hmin(tmp.path(), &["verify", "--spec", "missing.json"]).code, 2);
    let spec = write_spec(tmp.path(), "ok.json", r#"{"surface": {"kind": "gallery", "name": "hyperbolic"}}"#);
    assert_eq!(hmin(tmp.path(), &["verify", "--spec", spec.to_str().unwrap(), "--tol", "fd_step=-1"]).code, 2);
    assert_eq!(hmin(tmp.path(), &["verify", "--spec", spec.to_str().unwrap(), "--tol", "nonsense=1"]).code, 2);
}

#[test]
fn seed_on_char_plane_has_constant_curvature() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "cp.json", r#"{"surface": {"kind": "gallery", "name": "char-plane"}}"#);
    let r = hmin(tmp.path(), &["seed", "--spec", spec.to_str().unwrap(), "--z0", "1", "0", "--out", "."]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = csv_rows(&tmp.path().join("seed.csv"));
    assert_eq!(header, ["s", "x", "y", "dx", "dy", "kappa"]);
    assert!(rows.len() > 10);
    for row in &rows {
        let k: f64 = row[5].parse().unwrap();
        assert!((k + 1.0).abs() <= 1e-6, "{row:?}");
    }
}

#[test]
fn seed_on_hyperbolic_passes_through_minus_one_one() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "hyp.json", r#"{"surface": {"kind": "gallery", "name": "hyperbolic"}}"#);
    let r = hmin(tmp.path(), &["seed", "--spec", spec.to_str().unwrap(), "--z0", "0", "1", "--out", "."]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (_, rows) = csv_rows(&tmp.path().join("seed.csv"));
    let at1 = rows.iter().find(|r| (r[0].parse::<f64>().unwrap() - 1.0).abs() < 1e-12).expect("sample at s = 1");
    let (x, y): (f64, f64) = (at1[1].parse().unwrap(), at1[2].parse().unwrap());
    assert!((x + 1.0).abs() < 1e-8 && (y - 1.0).abs() < 1e-8, "({x}, {y})");
}

#[test]
fn seed_from_characteristic_point_exits_3() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "cp.json", r#"{"surface": {"kind": "gallery", "name": "char-plane"}}"#);
    let r = hmin(tmp.path(), &["seed", "--spec", spec.to_str().unwrap(), "--z0", "0", "0", "--out", "."]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(!tmp.path().join("seed.csv").exists());
}

#[test]
fn seed_csv_feeds_a_ruled_spec() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "hyp.json", r#"{"surface": {"kind": "gallery", "name": "hyperbolic"}}"#);
    assert_eq!(hmin(tmp.path(), &["seed", "--spec", spec.to_str().unwrap(), "--z0", "0", "1", "--out", "."]).code, 0);
    let ruled = write_spec(
        tmp.path(),
        "ruled.json",
        r#"{"surface": {"kind": "ruled", "seed": {"samples": "seed.csv"}, "h0": "0",
            "s_range": [-0.5, 0.5], "r_range": [-0.5, 0.5]}, "grid": [21, 21]}"#,
    );
    let r = hmin(tmp.path(), &["verify", "--spec", ruled.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn loci_char_plane_double_root_at_origin() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "cp.json", r#"{"surface": {"kind": "gallery", "name": "char-plane"}}"#);
    let r = hmin(tmp.path(), &["loci", "--spec", spec.to_str().unwrap(), "--out", "."]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = csv_rows(&tmp.path().join("loci.csv"));
    assert_eq!(header, ["s", "r", "x", "y", "t", "kappa", "W", "branch"]);
    assert!(!rows.is_empty());
    for row in &rows {
        assert!(row[7].starts_with("double-root"), "{row:?}");
        let r: f64 = row[1].parse().unwrap();
        assert!((r + 1.0).abs() < 1e-9, "{row:?}");
        for c in &row[2..5] {
            assert!(c.parse::<f64>().unwrap().abs() < 1e-9, "{row:?}");
        }
    }
}

#[test]
fn loci_counterexample_is_empty() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "ce.json", r#"{"surface": {"kind": "gallery", "name": "counterexample"}}"#);
    let r = hmin(tmp.path(), &["loci", "--spec", spec.to_str().unwrap(), "--out", "."]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = csv_rows(&tmp.path().join("loci.csv"));
    assert_eq!(header.len(), 8);
    assert!(rows.is_empty(), "{rows:?}");
    let (_, singular) = csv_rows(&tmp.path().join("singular.csv"));
    assert!(singular.iter().all(|r| r[6].is_empty() && r[7] == "singular"));
}

#[test]
fn loci_optreg2_flags_the_slope_jump() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "o.json", r#"{"surface": {"kind": "gallery", "name": "optreg2"}}"#);
    let r = hmin(tmp.path(), &["loci", "--spec", spec.to_str().unwrap(), "--out", "."]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report.unwrap();
    assert_eq!(check(&rep, "slope-jump-flagged")["pass"], true);
    let jump = check(&rep, "slope-jump");
    assert_eq!(jump["pass"], true, "{jump}");
}

fn classify(h: &str) -> Value {
    let tmp = TempDir::new().unwrap();
    let json = format!(r#"{{"surface": {{"kind": "graph", "h": "{h}", "domain": {{"xmin": -2, "xmax": 2, "ymin": -2, "ymax": 2}}}}}}"#);
    let spec = write_spec(tmp.path(), "g.json", &json);
    let r = hmin(tmp.path(), &["classify", "--spec", spec.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{h}: {}", r.stderr);
    r.report.unwrap()["info"]["classification"].clone()
}

#[test]
fn classify_plane() {
    let c = classify("(4 - x - 2*y)/2");
    assert_eq!(c["class"], "Class1");
    for (k, want) in [("a", 1.0), ("b", 2.0), ("c", 2.0), ("d", 4.0)] {
        assert!((c[k].as_f64().unwrap() - want).abs() < 1e-8, "{k}: {c}");
    }
    for (k, want) in [("x", -2.0), ("y", 1.0), ("t", 2.0)] {
        assert!((c["sigma"][k].as_f64().unwrap() - want).abs() < 1e-8, "sigma {k}: {c}");
    }
}

#[test]
fn classify_saddle_and_bowl() {
    assert_eq!(classify("x*y/2")["class"], "Class2");
    assert_eq!(classify("(x^2+y^2)/4")["class"], "NotMinimal");
}

#[test]
fn gallery_all_passes_and_unknown_exits_4() {
    let tmp = TempDir::new().unwrap();
    let r = hmin(tmp.path(), &["gallery", "all"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report.unwrap();
    assert_eq!(rep["checks"].as_array().unwrap().len(), 9);

    let r = hmin(tmp.path(), &["gallery", "catenoid", "--a", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    let r = hmin(tmp.path(), &["gallery", "hyperbolic", "nope"]);
    assert_eq!(r.code, 4);
    assert!(r.stderr.contains("nope"));
}

#[test]
fn inputs_digest_tracks_inputs() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), "h.json", r#"{"surface": {"kind": "gallery", "name": "hyperbolic"}}"#);
    let s = spec.to_str().unwrap();
    let digest = |args: &[&str]| hmin(tmp.path(), args).report.unwrap()["inputs_digest"].as_str().unwrap().to_string();
    let a = digest(&["verify", "--spec", s]);
    assert_eq!(a.len(), 64);
    assert_eq!(a, digest(&["verify", "--spec", s]));
    assert_ne!(a, digest(&["verify", "--spec", s, "--grid", "31", "31"]));
}

#[test]
fn shipped_specs_load_and_verify() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        seen += 1;
        hmin_cli::spec::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let tmp = TempDir::new().unwrap();
        let r = hmin(tmp.path(), &["verify", "--spec", path.to_str().unwrap()]);
        let want = if path.file_stem().unwrap() == "bowl" { 1 } else { 0 };
        assert_eq!(r.code, want, "{}: {}", path.display(), r.stderr);
    }
    assert!(seen >= 8);
}
