use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn canopyfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_canopyfit"))
        .args(args)
        .env("CANOPYFIT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(args: &[&str]) -> Output {
    let out = canopyfit(args);
    assert_eq!(code(&out), 0, "{args:?} failed: {}", stderr(&out));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_is_deterministic_and_groups_match_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&["generate", "--seed", "5", "--out", s(&a)]);
    ok(&["generate", "--seed", "5", "--out", s(&b)]);
    ok(&["generate", "--seed", "6", "--out", s(&c)]);
    let obj = std::fs::read_to_string(a.join("canopy.obj")).unwrap();
    assert_eq!(obj, std::fs::read_to_string(b.join("canopy.obj")).unwrap());
    assert_ne!(obj, std::fs::read_to_string(c.join("canopy.obj")).unwrap());

    let groups = obj.lines().filter(|l| l.starts_with("g ")).count();
    let sidecar = json(&a.join("canopy_labels.json"));
    assert_eq!(groups, sidecar.as_object().unwrap().len());
    assert_eq!(json(&a.join("params.json"))["seed"], 5);
}

#[test]
fn single_plant_with_explicit_values() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--species", "maize", "--single", "--values", "1.1,-2,0.9,12", "--out", s(dir.path())]);
    let rec = json(&dir.path().join("params.json"));
    assert_eq!(rec["species"], "maize");
    assert_eq!(rec["values"][3], 12.0);
    assert!(dir.path().join("plant.obj").exists());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = canopyfit(&["generate", "--species", "rice", "--out", s(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("rice"));

    assert_eq!(code(&canopyfit(&["frobnicate"])), 2);
    assert_eq!(code(&canopyfit(&["generate"])), 2);
    assert_eq!(code(&canopyfit(&["generate", "--out", s(dir.path()), "--opt.n_runs=many"])), 2);
    assert_eq!(code(&canopyfit(&["generate", "--out", s(dir.path()), "--values", "1,2"])), 2);

    let out = Command::new(env!("CARGO_BIN_EXE_canopyfit"))
        .args(["generate", "--out", s(dir.path())])
        .env("CANOPYFIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn render_then_stats_follows_species_bins() {
    let dir = tempfile::tempdir().unwrap();
    let (g, r) = (dir.path().join("g"), dir.path().join("r"));
    ok(&["generate", "--out", s(&g)]);
    ok(&["render", "--mesh", s(&g.join("canopy.obj")), "--out", s(&r), "--render.width=240", "--render.height=180"]);
    let depth = r.join("depth.cdm");
    let camera = r.join("camera.json");
    let mask = r.join("mask.pgm");

    let stats = |extra: &[&str]| -> Value {
        let mut args = vec!["stats", "--depth", s(&depth), "--camera", s(&camera), "--mask", s(&mask)];
        args.extend_from_slice(extra);
        serde_json::from_slice(&ok(&args).stdout).unwrap()
    };
    let soy = stats(&[]);
    assert_eq!(soy["depth_hist"].as_array().unwrap().len(), 20);
    assert!(soy["mask_area"].as_u64().unwrap() > 0);
    let total: f64 = soy["depth_hist"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let maize = stats(&["--species", "maize"]);
    assert_eq!(maize["depth_hist"].as_array().unwrap().len(), 10);
    let custom = stats(&["--stats.depth.bins=7"]);
    assert_eq!(custom["depth_hist"].as_array().unwrap().len(), 7);
}

#[test]
fn corrupted_depth_magic_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let (g, r) = (dir.path().join("g"), dir.path().join("r"));
    ok(&["generate", "--out", s(&g)]);
    ok(&["render", "--mesh", s(&g.join("canopy.obj")), "--out", s(&r), "--render.width=64", "--render.height=48"]);
    let depth = r.join("depth.cdm");
    let mut bytes = std::fs::read(&depth).unwrap();
    bytes[0] = b'X';
    std::fs::write(&depth, bytes).unwrap();
    let out = canopyfit(&["stats", "--depth", s(&depth), "--camera", s(&r.join("camera.json"))]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("offset 0"), "{}", stderr(&out));
}

#[test]
fn rowfit_without_colors_names_missing_property() {
    let dir = tempfile::tempdir().unwrap();
    let (g, r) = (dir.path().join("g"), dir.path().join("r"));
    ok(&["generate", "--out", s(&g)]);
    ok(&["render", "--mesh", s(&g.join("canopy.obj")), "--out", s(&r), "--render.width=64", "--render.height=48"]);
    let cloud = dir.path().join("cloud.ply");
    ok(&["export", "--depth", s(&r.join("depth.cdm")), "--camera", s(&r.join("camera.json")), "--out", s(&cloud)]);
    let out = canopyfit(&["rowfit", "--cloud", s(&cloud), "--out", s(dir.path())]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("red/green/blue"), "{}", stderr(&out));
}

#[test]
fn maize_rowfit_camera_sits_five_metres_up() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    ok(&["generate", "--species", "maize", "--out", s(&g)]);
    let cloud = dir.path().join("cloud.ply");
    ok(&[
        "export", "--species", "maize", "--mesh", s(&g.join("canopy.obj")), "--ground", "--points", "100000", "--out",
        s(&cloud),
    ]);
    let rf = dir.path().join("rf");
    ok(&["rowfit", "--species", "maize", "--cloud", s(&cloud), "--out", s(&rf)]);
    let report = json(&rf.join("rowfit_report.json"));
    assert_eq!(report["render_height"], 5.0);
    let camera = json(&rf.join("camera.json"));
    let plane = &report["plane"];
    let n: Vec<f64> = (0..3).map(|k| plane["normal"][k].as_f64().unwrap()).collect();
    let c: Vec<f64> = (0..3).map(|k| camera["center"][k].as_f64().unwrap()).collect();
    let height = n.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() + plane["offset"].as_f64().unwrap();
    assert!((height - 5.0).abs() < 1e-9, "camera height {height}");
}

#[test]
fn metrics_scores_mesh_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--out", s(dir.path())]);
    let mesh = dir.path().join("canopy.obj");
    let out = dir.path().join("metrics.json");
    ok(&["metrics", "--mesh", s(&mesh), "--truth", s(&mesh), "--out", s(&out)]);
    let m = json(&out);
    assert_eq!(m["report"]["laipe"], 0.0);
    assert!(m["predicted"][0]["lai"].as_f64().unwrap() > 0.0);
}

#[test]
fn small_fit_writes_outputs_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scene.json");
    std::fs::write(
        &cfg,
        r#"{"species": "soybean", "render": {"width": 120, "height": 90},
            "opt": {"n_initial": 4, "n_total": 7, "n_runs": 2, "candidate_count": 50, "seed": 11}}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["fit", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["fit", "--config", s(&cfg), "--out", s(&b), "--opt.n_runs=2"]);
    for f in ["fit_result.json", "params.json", "canopy.obj", "predicted_depth.cdm", "predicted_mask.pgm", "report.txt"] {
        assert!(a.join(f).exists(), "missing {f}");
    }
    assert_eq!(
        std::fs::read(a.join("fit_result.json")).unwrap(),
        std::fs::read(b.join("fit_result.json")).unwrap()
    );
    let result = json(&a.join("fit_result.json"));
    assert_eq!(result["runs"].as_array().unwrap().len(), 2);
    assert!(result["truth"]["metrics"]["lai"].as_f64().unwrap() > 0.0);
}
