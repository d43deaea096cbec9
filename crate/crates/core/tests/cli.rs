use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;

use nearwall::config::RunConfig;
use nearwall::fields::{write_snapshot, GridSpec, Manufactured};
use nearwall::geometry::Vec3;
use nearwall::sections::TimeProfile;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nearwall"))
}

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn write_config(dir: &Path, v: &serde_json::Value) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, v.to_string()).unwrap();
    path
}

/// Cheap configuration: normal sections and the pressure test only.
fn light(field: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "body": {"shape": "sphere", "radius": 1.0},
        "field": field,
        "filter": {"h": 0.1, "ell": 0.05},
        "extension": {"cutoff": 0.4},
        "sections": [
            {"kind": "normal", "id": "quadratic", "profile": {"polynomial": [
                {"coefficient": 1.0, "powers": [2, 0, 0]},
                {"coefficient": 0.5, "powers": [0, 1, 1]}]}},
            {"kind": "normal", "id": "zero", "profile": {"constant": 0.0}}
        ],
        "scalar_test": {"cutoff": 0.4, "constant": 0.5, "gradient": [1.0, 0.2, -0.3]},
        "suite": {"coarse_grained": false},
        "quadrature": {"surface": 12, "radial": 8, "time": 16}
    })
}

fn pair_value(config: &Path, id: &str, out: &Path) -> f64 {
    let o = bin().args(["pair", id, "--config"]).arg(config).arg("--out").arg(out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    v["value"].as_f64().unwrap()
}

#[test]
fn potential_form_drag_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let v = pair_value(&shipped("potential_sphere.cfg"), "form_drag", dir.path());
    assert!(v.abs() < 1e-10, "form drag {v:e}");
    assert!(dir.path().join("pairings.csv").exists());
}

#[test]
fn stokes_drag_pairings_match_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped("stokes_sphere.cfg");
    let beta = TimeProfile::standard(1.0).exact_integral();
    let (nu, u, a) = (0.5, 1.0, 1.0);
    let form = pair_value(&cfg, "form_drag", dir.path());
    let skin = pair_value(&cfg, "skin_drag", dir.path());
    let total = pair_value(&cfg, "total_drag", dir.path());
    let rel = |x: f64, y: f64| ((x - y) / y).abs();
    assert!(rel(form, 2.0 * PI * nu * u * a * beta) < 1e-6, "form {form}");
    assert!(rel(skin, 4.0 * PI * nu * u * a * beta) < 1e-6, "skin {skin}");
    assert!(rel(total, 6.0 * PI * nu * u * a * beta) < 1e-6, "total {total}");
}

#[test]
fn zero_section_pairs_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &light(serde_json::json!({"kind": "potential_sphere", "free_stream": [1.0, 0.3, 0.0]})),
    );
    assert_eq!(pair_value(&cfg, "zero", dir.path()), 0.0);
}

#[test]
fn unknown_pairing_id_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &light(serde_json::json!({"kind": "quiescent"})));
    let o = bin().args(["pair", "nope", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = light(serde_json::json!({"kind": "quiescent"}));
    v["filter"]["ell"] = 0.2.into();
    let cfg = write_config(dir.path(), &v);
    let o = bin().arg("verify").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("configuration error"));
    let o = bin().arg("verify").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn truncated_snapshot_exits_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    // Covers only |x_i| <= 1.2, but the extension reaches distance 1.4.
    let grid = GridSpec {
        origin: Vec3::new(-1.2, -1.2, -1.2),
        spacing: Vec3::new(0.2, 0.2, 0.2),
        dims: [13, 13, 13],
        times: vec![0.0, 1.0],
        viscosity: 0.0,
    };
    write_snapshot(&Manufactured::free_stream(Vec3::x(), 0.0), &grid, &dir.path().join("flow.snap")).unwrap();
    let cfg = write_config(dir.path(), &light(serde_json::json!({"kind": "snapshot", "path": "flow.snap"})));
    let o = bin().arg("verify").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of data coverage"));
}

#[test]
fn missing_snapshot_exits_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &light(serde_json::json!({"kind": "snapshot", "path": "absent.snap"})));
    let o = bin().arg("verify").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_writes_reports_and_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let v = light(serde_json::json!({"kind": "potential_sphere", "free_stream": [1.0, 0.3, 0.0]}));
    let cfg_path = write_config(dir.path(), &v);
    let out = dir.path().join("out");
    let o = bin().arg("verify").arg("--config").arg(&cfg_path).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "identities.csv", "pairings.csv", "verdicts.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["summary"]["pass"], true);
    let echo: RunConfig = serde_json::from_value(report["config"].clone()).unwrap();
    assert_eq!(echo, RunConfig::load(&cfg_path).unwrap());
    // Every identity row carries its inputs and error estimates.
    let ids = std::fs::read_to_string(out.join("identities.csv")).unwrap();
    let header = ids.lines().next().unwrap();
    for col in ["field", "section", "nu", "error_left", "error_right", "threshold", "pass"] {
        assert!(header.split(',').any(|c| c == col), "{col}");
    }
}

#[test]
fn quad_order_override_reaches_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &light(serde_json::json!({"kind": "potential_sphere", "free_stream": [1.0, 0.0, 0.0]})),
    );
    let out = dir.path().join("out");
    let o = bin()
        .args(["verify", "--quad-order", "10", "--threads", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success());
    let mut r = csv::Reader::from_path(out.join("identities.csv")).unwrap();
    let col = r.headers().unwrap().iter().position(|h| h == "surface_order").unwrap();
    for row in r.records() {
        assert_eq!(&row.unwrap()[col], "10");
    }
}

#[test]
fn verify_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &light(serde_json::json!({"kind": "stokes_sphere", "free_stream": [1.0, 0.0, 0.0], "viscosity": 0.5})),
    );
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = bin().args(["verify", "--threads", "2", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert!(o.status.success());
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["identities.csv", "pairings.csv", "verdicts.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn schema_prints_a_valid_config() {
    let o = bin().arg("schema").output().unwrap();
    assert!(o.status.success());
    let cfg = RunConfig::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg, RunConfig::example());
}

#[test]
fn failing_verdict_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = light(serde_json::json!({"kind": "potential_sphere", "free_stream": [1.0, 0.0, 0.0]}));
    v["sweep"] = serde_json::json!({"runs": ["near_wall_sup", "no_flow_through"], "deltas": [0.2, 0.1, 0.05]});
    // Free stream through the body: u·n does not vanish at the wall.
    v["field"] = serde_json::json!({"kind": "free_stream", "velocity": [1.0, 0.0, 0.0]});
    let cfg = write_config(dir.path(), &v);
    let out = dir.path().join("out");
    let o = bin().arg("sweep").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let verdicts = std::fs::read_to_string(out.join("verdicts.csv")).unwrap();
    assert!(verdicts.lines().any(|l| l.starts_with("no_flow_through,false")));
    assert!(verdicts.lines().any(|l| l.starts_with("near_wall_sup,true")));
}
