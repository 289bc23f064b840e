use std::path::Path;

use canopyfit::io::{decode_cdm, decode_pgm, decode_ply, encode_cdm, encode_pgm, encode_ply, write_file, write_json};
use canopyfit::mesh::LabeledMesh;
use canopyfit::morphology::Species;
use canopyfit::pipeline::{
    fit, fit_observation, load_observation, write_fit_outputs, ObservationSource, Preset, SceneConfig,
};
use canopyfit::render::{sample_surface_points, unproject, OrganColors};
use canopyfit::rng::RandomSeed;

fn tiny(species: Species) -> SceneConfig {
    let mut cfg = SceneConfig::preset(species, Preset::Desk);
    cfg.render.width = 160;
    cfg.render.height = 120;
    cfg.opt.n_initial = 5;
    cfg.opt.n_total = 9;
    cfg.opt.n_runs = 2;
    cfg.opt.candidate_count = 64;
    cfg.opt.seed = RandomSeed(21);
    cfg
}

fn result_json(cfg: &SceneConfig, threads: usize) -> String {
    serde_json::to_string(&fit(cfg, threads).unwrap().result).unwrap()
}

#[test]
fn fit_result_is_identical_across_invocations_and_thread_counts() {
    let cfg = tiny(Species::Soybean);
    let a = result_json(&cfg, 1);
    assert_eq!(a, result_json(&cfg, 1));
    assert_eq!(a, result_json(&cfg, 2));

    let mut other = cfg.clone();
    other.opt.seed = RandomSeed(22);
    assert_ne!(a, result_json(&other, 1));
}

#[test]
fn maize_fit_runs_end_to_end() {
    let out = fit(&tiny(Species::Maize), 1).unwrap();
    let r = &out.result;
    assert_eq!(r.species, Species::Maize);
    assert_eq!(r.averaged.values.len(), 4);
    assert_eq!(r.observation.depth_hist.len(), 10);
    assert!(r.loss.total.is_finite());
}

#[test]
fn single_run_average_is_its_best_point() {
    let mut cfg = tiny(Species::Soybean);
    cfg.opt.n_runs = 1;
    let out = fit(&cfg, 1).unwrap();
    assert_eq!(out.result.runs.len(), 1);
    assert_eq!(out.result.averaged.values, out.result.runs[0].best_x);
    assert_eq!(out.result.runs[0].best_loss, out.run_results[0].trace.iter().map(|t| t.loss).fold(f64::INFINITY, f64::min));
}

#[test]
fn interrupted_fit_resumes_from_traces() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(Species::Soybean);
    let fresh = result_json(&cfg, 1);

    cfg.output_dir = Some(dir.path().to_path_buf());
    let first = fit(&cfg, 1).unwrap();
    write_fit_outputs(&first, dir.path()).unwrap();
    assert_eq!(serde_json::to_string(&first.result).unwrap(), fresh);

    // Drop the tail of one trace, as if the process died mid-run.
    let trace = dir.path().join("traces").join("run_1.jsonl");
    let text = std::fs::read_to_string(&trace).unwrap();
    let kept: Vec<&str> = text.lines().take(6).collect();
    std::fs::write(&trace, kept.join("\n") + "\n").unwrap();
    let resumed = fit(&cfg, 1).unwrap();
    assert_eq!(serde_json::to_string(&resumed.result).unwrap(), fresh);
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), cfg.opt.n_total);
}

#[test]
fn fit_outputs_round_trip_through_readers() {
    let dir = tempfile::tempdir().unwrap();
    let out = fit(&tiny(Species::Soybean), 1).unwrap();
    write_fit_outputs(&out, dir.path()).unwrap();
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();

    let depth = decode_cdm(&read("predicted_depth.cdm")).unwrap();
    assert_eq!(depth.data.len(), out.solution.depth.data.len());
    assert!(depth.data.iter().zip(&out.solution.depth.data).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(decode_pgm(&read("predicted_mask.pgm")).unwrap(), out.solution.mask);

    let mesh = LabeledMesh::from_obj(&String::from_utf8(read("canopy.obj")).unwrap()).unwrap();
    assert_eq!(mesh.num_faces(), out.solution.mesh.num_faces());
    assert_eq!(mesh.face_labels, out.solution.mesh.face_labels);

    let result: serde_json::Value = serde_json::from_slice(&read("fit_result.json")).unwrap();
    assert_eq!(result, serde_json::to_value(&out.result).unwrap());
}

fn write_observation(cfg: &SceneConfig, dir: &Path) -> SceneConfig {
    let profile = cfg.load_profile().unwrap();
    let obs = load_observation(cfg, &profile).unwrap();
    write_file(&dir.join("depth.cdm"), &encode_cdm(&obs.depth)).unwrap();
    write_file(&dir.join("mask.pgm"), &encode_pgm(&obs.mask)).unwrap();
    write_json(&dir.join("camera.json"), &obs.camera).unwrap();
    let mut files = cfg.clone();
    files.observation = ObservationSource::Files {
        depth: dir.join("depth.cdm"),
        camera: dir.join("camera.json"),
        mask: Some(dir.join("mask.pgm")),
        rgb: None,
    };
    files
}

#[test]
fn file_observation_matches_synthetic_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(Species::Soybean);
    let files = write_observation(&cfg, dir.path());
    let profile = cfg.load_profile().unwrap();
    let synthetic = load_observation(&cfg, &profile).unwrap();
    let loaded = load_observation(&files, &profile).unwrap();
    assert_eq!(loaded.stats, synthetic.stats);
    assert!(loaded.hidden.is_none());

    let a = fit_observation(&cfg, profile.clone(), &synthetic, 1).unwrap().result;
    let b = fit(&files, 1).unwrap().result;
    assert_eq!(a.averaged, b.averaged);
    assert!(b.truth.is_none());
}

#[test]
fn point_clouds_round_trip() {
    let cfg = tiny(Species::Soybean);
    let profile = cfg.load_profile().unwrap();
    let obs = load_observation(&cfg, &profile).unwrap();
    let mesh = &obs.hidden.as_ref().unwrap().mesh;
    let colored = sample_surface_points(mesh, 2000, RandomSeed(4), &OrganColors::default(), None).unwrap();
    let plain = unproject(&obs.depth, Some(&obs.mask), &obs.camera);
    assert_eq!(plain.len(), obs.mask.area());
    for cloud in [colored, plain] {
        // Coordinates are stored as f32, so a second pass is byte-exact.
        let bytes = encode_ply(&cloud);
        let back = decode_ply(&bytes).unwrap();
        assert_eq!(encode_ply(&back), bytes);
        assert_eq!(back.colors, cloud.colors);
        for (a, b) in back.points.iter().zip(&cloud.points) {
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
    }
}
