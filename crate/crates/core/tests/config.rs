use std::path::PathBuf;

use nearwall::config::{RunConfig, SweepKind};
use nearwall::Error;

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn base() -> serde_json::Value {
    serde_json::json!({
        "body": {"shape": "sphere", "radius": 1.0},
        "field": {"kind": "potential_sphere", "free_stream": [1.0, 0.0, 0.0]},
        "filter": {"h": 0.1, "ell": 0.05},
        "extension": {"cutoff": 0.4},
        "sections": [{"kind": "normal", "id": "one", "profile": {"constant": 1.0}}]
    })
}

fn parse(v: &serde_json::Value) -> Result<RunConfig, Error> {
    RunConfig::from_json(&v.to_string())
}

fn config_error(v: &serde_json::Value) -> String {
    match parse(v) {
        Err(e @ Error::Config(_)) => {
            assert_eq!(e.exit_code(), 2);
            e.to_string()
        }
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn shipped_configs_parse() {
    for name in ["potential_sphere.cfg", "stokes_sphere.cfg", "theorem2_stokes.cfg", "bl_sqrt_nu.cfg", "bl_nu.cfg"] {
        let cfg = RunConfig::load(&shipped(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!cfg.sections().unwrap().is_empty(), "{name}");
        cfg.budget().unwrap();
    }
}

#[test]
fn minimal_config_gets_defaults() {
    let cfg = parse(&base()).unwrap();
    assert_eq!(cfg.horizon, 1.0);
    assert_eq!(cfg.quadrature.surface, 16);
    assert_eq!(cfg.quadrature.time, 32);
    assert_eq!(cfg.filter.kernel_radial_order, 8);
    assert_eq!(cfg.tolerances.error_multiplier, 10.0);
    assert!(cfg.sweep.is_none());
}

#[test]
fn json_round_trip_is_exact() {
    for cfg in [RunConfig::example(), parse(&base()).unwrap(), RunConfig::load(&shipped("bl_nu.cfg")).unwrap()] {
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let mut v = base();
    v["colour"] = "blue".into();
    assert!(config_error(&v).contains("colour"));
    let mut v = base();
    v["filter"]["width"] = 1.0.into();
    assert!(config_error(&v).contains("width"));
    let mut v = base();
    v["field"]["viscosity"] = 1.0.into();
    config_error(&v);
}

#[test]
fn lengths_must_be_positive() {
    for (path, value) in [("h", -0.1), ("ell", 0.0)] {
        let mut v = base();
        v["filter"][path] = value.into();
        config_error(&v);
    }
    let mut v = base();
    v["horizon"] = 0.0.into();
    config_error(&v);
    let mut v = base();
    v["body"]["radius"] = (-1.0).into();
    config_error(&v);
}

#[test]
fn ell_must_stay_below_h() {
    let mut v = base();
    v["filter"]["ell"] = 0.1.into();
    assert!(config_error(&v).contains("ell"));
}

#[test]
fn window_must_fit_inside_cutoff() {
    let mut v = base();
    v["filter"]["h"] = 0.3.into();
    v["filter"]["ell"] = 0.15.into();
    config_error(&v);
    let mut v = base();
    v["extension"]["cutoff"] = 0.6.into();
    assert!(config_error(&v).contains("tubular"));
}

#[test]
fn ellipsoid_tube_bounded_by_curvature() {
    let mut v = base();
    v["field"] = serde_json::json!({"kind": "free_stream", "velocity": [1.0, 0.0, 0.0]});
    v["body"] = serde_json::json!({"shape": "ellipsoid", "semi_axes": [2.0, 1.0, 1.0], "tubular_radius": 0.6});
    assert!(config_error(&v).contains("curvature"));
    v["body"]["tubular_radius"] = 0.45.into();
    parse(&v).unwrap();
}

#[test]
fn sphere_fields_need_a_sphere() {
    let mut v = base();
    v["body"] = serde_json::json!({"shape": "ellipsoid", "semi_axes": [1.5, 1.2, 1.2]});
    let cfg = parse(&v).unwrap();
    assert!(matches!(cfg.state(std::path::Path::new(".")), Err(Error::Config(_))));
}

#[test]
fn empty_grids_are_rejected() {
    let mut v = base();
    v["sweep"] = serde_json::json!({"runs": ["scale"], "h_grid": []});
    config_error(&v);
    let mut v = base();
    v["sweep"] = serde_json::json!({"runs": []});
    config_error(&v);
    let mut v = base();
    v["sweep"] = serde_json::json!({"runs": ["scale"], "h_grid": [0.1, 0.2, 0.05]});
    config_error(&v);
}

#[test]
fn viscosity_sweep_needs_a_family() {
    let mut v = base();
    v["sweep"] = serde_json::json!({"runs": ["viscosity"]});
    assert!(config_error(&v).contains("boundary_layer"));
    let cfg = RunConfig::load(&shipped("bl_sqrt_nu.cfg")).unwrap();
    assert!(cfg.sweep.as_ref().unwrap().runs.contains(&SweepKind::Viscosity));
}

#[test]
fn no_flow_through_needs_deltas_inside_tube() {
    let mut v = base();
    v["sweep"] = serde_json::json!({"runs": ["no_flow_through"]});
    config_error(&v);
    v["sweep"]["deltas"] = serde_json::json!([0.2, 0.6]);
    config_error(&v);
    v["sweep"]["deltas"] = serde_json::json!([0.2, 0.1]);
    parse(&v).unwrap();
}

#[test]
fn section_ids_are_unique_and_times_inside_horizon() {
    let mut v = base();
    v["sections"] = serde_json::json!([
        {"kind": "normal", "id": "a", "profile": {"constant": 1.0}},
        {"kind": "tangential", "id": "a", "field": {"constant": [1.0, 0.0, 0.0]}}
    ]);
    assert!(config_error(&v).contains("duplicate"));
    let mut v = base();
    v["sections"][0]["time"] = serde_json::json!({"start": 0.0, "end": 0.5});
    config_error(&v);
}

#[test]
fn lemma2_block_is_checked() {
    let mut v = base();
    v["sweep"] = serde_json::json!({"runs": ["lemma2"]});
    config_error(&v);
    v["sweep"]["lemma2"] = serde_json::json!({"annulus": [0.0, 0.3], "p": 3, "component": 0});
    config_error(&v);
    v["sweep"]["lemma2"]["p"] = 1.into();
    parse(&v).unwrap();
}

#[test]
fn malformed_json_is_a_config_error() {
    assert!(matches!(RunConfig::from_json("{ not json"), Err(Error::Config(_))));
    assert!(matches!(RunConfig::load(std::path::Path::new("/nonexistent/x.cfg")), Err(Error::Config(_))));
}
