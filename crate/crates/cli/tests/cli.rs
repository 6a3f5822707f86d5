use std::path::PathBuf;
use std::process::Command;

use adf_cli::{parse_scene, parse_scene_with, render_svg, run_command, CliError, Options, Verb};
use serde_json::Value;

fn scene(name: &str) -> (String, String) {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenes", name].iter().collect();
    let text = std::fs::read_to_string(&path).unwrap();
    (path.display().to_string(), text)
}

fn coarse(h: f64) -> Options {
    Options { lambda: None, quad_h: Some(h), tol: None }
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn circle_construction_radius() {
    let s = parse_scene(&scene("circle.toml").1).unwrap();
    let r = s.graph.vertices()[0].norm();
    assert!((r - 0.2f64.sqrt()).abs() < 1e-10, "{r}");
    // λ override changes the construction itself
    let s = parse_scene_with(&scene("circle.toml").1, Some(0.1)).unwrap();
    assert!((s.graph.vertices()[0].norm() - 0.4f64.sqrt()).abs() < 1e-10);
}

#[test]
fn bad_edge_index_names_the_edge() {
    let text = "lambda = 0.1\n[graph]\nvertices = [[0.1, 0.1], [0.2, 0.2]]\nedges = [[0, 1], [1, 5]]\n";
    match parse_scene(text) {
        Err(CliError::Validation { path, .. }) => assert_eq!(path, "graph.edges[1]"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn vertex_outside_region_is_rejected() {
    let text = "lambda = 0.1\n[graph]\nvertices = [[0.1, 0.1], [2.0, 0.0]]\nedges = [[0, 1]]\n\
                [region]\nkind = \"disk\"\ncenter = [0.0, 0.0]\nradius = 1.0\n";
    match parse_scene(text) {
        Err(CliError::Validation { path, .. }) => assert_eq!(path, "graph.vertices[1]"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn degenerate_circle_surfaces_core_error() {
    let err = parse_scene_with(&scene("circle.toml").1, Some(0.5)).unwrap_err();
    assert!(matches!(err, CliError::Core(adf_core::Error::DegenerateConstruction(_))), "{err:?}");
}

#[test]
fn unknown_fields_and_syntax_errors() {
    let err = parse_scene("lambda = 0.1\nlamda = 0.2\n").unwrap_err();
    assert!(matches!(err, CliError::Parse(ref m) if m.contains("lamda")), "{err}");
    let err = parse_scene("lambda = 0.1\n[graph\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line 2"), "{msg}");
}

#[test]
fn negative_lambda_is_invalid() {
    let err = parse_scene_with(&scene("stadium.toml").1, Some(-1.0)).unwrap_err();
    assert!(matches!(err, CliError::Validation { ref path, .. } if path == "lambda"), "{err}");
}

#[test]
fn reports_are_deterministic() {
    let (p, t) = scene("wedge.toml");
    let a = run_command(Verb::Variation, &p, &t, &coarse(0.02)).unwrap().0;
    let b = run_command(Verb::Variation, &p, &t, &coarse(0.02)).unwrap().0;
    assert_eq!(a.body(), b.body());
    assert_eq!(a.inputs.scene_sha256.len(), 64);
    let mut x = Vec::new();
    let mut y = Vec::new();
    a.write_csv(&mut x).unwrap();
    b.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
    let header = String::from_utf8(x).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, a.columns.join(","));
}

#[test]
fn stadium_checks_stationary_and_wedge_does_not() {
    let (p, t) = scene("stadium.toml");
    let r = run_command(Verb::Check, &p, &t, &coarse(0.01)).unwrap().0;
    assert_eq!(r.results["verdict"], "stationary", "{}", r.to_json());
    let (p, t) = scene("wedge.toml");
    let r = run_command(Verb::Check, &p, &t, &coarse(0.01)).unwrap().0;
    assert_eq!(r.results["verdict"], "non-stationary", "{}", r.to_json());
}

#[test]
fn corner_math_values() {
    let (p, t) = scene("corner.toml");
    let r = run_command(Verb::CornerMath, &p, &t, &Options::default()).unwrap().0;
    let get = |k: &str| num(&r.results[k]);
    assert!((get("b") - (1.25f64.sqrt() - 1.0)).abs() < 1e-12);
    assert!((get("r") - 0.5).abs() < 1e-12);
    assert!((get("f_alpha") - get("radius_plus_b")).abs() < 1e-12);
    assert!((get("h_phi") - 1.295_587).abs() < 1e-5, "{}", get("h_phi"));
    assert!((get("h_phi") - get("h_phi_closed_form")).abs() < 1e-10);
}

#[test]
fn empty_crack_compliance() {
    let text = "[graph]\nvertices = []\n[compliance]\nh = 0.015625\n";
    let r = run_command(Verb::ComplianceSolve, "inline", text, &Options::default()).unwrap().0;
    // series value of ∫u for the unit square with f = 1
    let c = num(&r.results["richardson"]);
    assert!((c - 0.035_144).abs() < 2e-4, "{c}");
    assert!(num(&r.results["dual_gap"]) < 1e-6);
}

#[test]
fn svg_overlays() {
    let (p, t) = scene("stadium.toml");
    let (_, fig) = run_command(Verb::Eval, &p, &t, &coarse(0.02)).unwrap();
    let svg = render_svg(&fig);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("<polyline"));
    assert!(svg.matches("<line").count() >= 32);

    let (p, t) = scene("wedge.toml");
    let (_, fig) = run_command(Verb::Variation, &p, &t, &coarse(0.02)).unwrap();
    let svg = render_svg(&fig);
    assert!(svg.contains("#c0392b"), "descent arrows missing");

    // the ridge of a circle is its center
    let (p, t) = scene("circle.toml");
    let (_, fig) = run_command(Verb::Eval, &p, &t, &coarse(0.02)).unwrap();
    let ridge: Vec<_> = fig
        .overlays
        .iter()
        .filter_map(|o| match o {
            adf_cli::Overlay::Ridge(p) => Some(p.clone()),
            _ => None,
        })
        .flatten()
        .collect();
    assert!(!ridge.is_empty());
    let far: Vec<_> = ridge.iter().filter(|q| q.norm() >= 0.08).collect();
    assert!(far.is_empty(), "{} of {} away from center: {:?}", far.len(), ridge.len(), &far[..far.len().min(8)]);
}

#[test]
fn binary_writes_outputs_and_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let (p, _) = scene("stadium.toml");
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let svg = dir.path().join("r.svg");
    let status = Command::new(env!("CARGO_BIN_EXE_adf"))
        .args(["eval", "--scene", &p, "--quad-h", "0.02", "--threads", "2"])
        .arg("--out")
        .arg(&out)
        .arg("--csv")
        .arg(&csv)
        .arg("--svg")
        .arg(&svg)
        .status()
        .unwrap();
    assert!(status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["command"], "eval");
    assert_eq!(report["inputs"]["quad_h"], 0.02);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("h,samples,mass"));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "lambda = 0.1\n[graph]\nvertices = [[0.0, 0.0]]\nedges = [[0, 3]]\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_adf")).args(["eval", "--scene"]).arg(&bad).output().unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("graph.edges[0]"), "{err}");
}
