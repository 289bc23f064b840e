use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use serde_json::Value;

use canopyfit::io::{
    decode_cdm, decode_pgm, decode_ply, encode_cdm, encode_pgm, encode_ply, read_file, read_json, write_file,
    write_json,
};
use canopyfit::loss::compute_stats;
use canopyfit::mesh::LabeledMesh;
use canopyfit::metrics::{compute_metrics, score, CanopyMetrics};
use canopyfit::morphology::{build_canopy, generate_plant, ParamsRecord, PlantParams, Species};
use canopyfit::pipeline::{fit, nominal_params, worker_threads, write_fit_outputs, SceneConfig};
use canopyfit::render::{render_depth, sample_surface_points, unproject, GroundQuad, OrganColors, PinholeCamera};
use canopyfit::rng::RandomSeed;
use canopyfit::rowfit::run_rowfit;
use canopyfit::Error;

#[derive(clap::Args)]
struct Common {
    /// Scene config JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Species (soybean | maize); shorthand for --species=... in the config.
    #[arg(long, global = true)]
    species: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a canopy (or one plant) mesh as OBJ plus label sidecar and parameter record.
    Generate {
        /// Comma-separated parameter values; species nominal values when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generate a single plant at the origin instead of the full layout.
        #[arg(long)]
        single: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a mesh to a CDM1 depth map and PGM mask.
    Render {
        #[arg(long)]
        mesh: PathBuf,
        /// Camera JSON; the canonical downward camera from the config when absent.
        #[arg(long)]
        camera: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit ground plane and rows in a colored PLY cloud and emit the standardized camera.
    Rowfit {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute histogram statistics of a depth map.
    Stats {
        #[arg(long)]
        depth: PathBuf,
        /// PGM mask; finite depths when absent.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        camera: PathBuf,
        /// Output JSON; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit morphology parameters to the configured observation.
    Fit {
        /// Output directory; overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Canopy metrics of an OBJ mesh, optionally scored against truth meshes.
    Metrics {
        /// Predicted meshes.
        #[arg(long, required = true, num_args = 1..)]
        mesh: Vec<PathBuf>,
        /// True meshes, one per predicted mesh.
        #[arg(long, num_args = 1..)]
        truth: Vec<PathBuf>,
        /// Ground area in m^2; the layout footprint when absent.
        #[arg(long)]
        ground_area: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a mesh or a depth map as a PLY point cloud.
    Export {
        #[arg(long, conflicts_with = "depth")]
        mesh: Option<PathBuf>,
        #[arg(long, requires = "camera")]
        depth: Option<PathBuf>,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        camera: Option<PathBuf>,
        /// Surface samples drawn from a mesh.
        #[arg(long, default_value_t = 100_000)]
        points: usize,
        /// Add a ground quad under the layout footprint when sampling a mesh.
        #[arg(long)]
        ground: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Fit procedural crop-canopy models to depth observations.
///
/// Every subcommand reads an optional JSON scene config (`--config`); any
/// `--dotted.key=value` flag that is not a subcommand option overrides a config field.
#[derive(Parser)]
#[command(name = "canopyfit", version)]
struct Args {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_) | Error::OutOfBounds { .. } | Error::Config(_) => 2,
            Error::Numeric(_) => 4,
            Error::Format { .. } | Error::Data(_) | Error::Io { .. } | Error::Json(_) => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

/// Separates `--key=value` config overrides from options the subcommand declares.
fn split_overrides(argv: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let cmd = Args::command();
    let mut known: HashSet<String> = cmd.get_arguments().filter_map(|a| a.get_long().map(String::from)).collect();
    known.extend(["help", "version"].map(String::from));
    if let Some(sub) = argv.get(1).and_then(|name| cmd.find_subcommand(name)) {
        known.extend(sub.get_arguments().filter_map(|a| a.get_long().map(String::from)));
    }
    let mut args = Vec::new();
    let mut overrides = Vec::new();
    for (i, a) in argv.into_iter().enumerate() {
        if i > 1 {
            if let Some((k, v)) = a.strip_prefix("--").and_then(|s| s.split_once('=')) {
                if !known.contains(k) {
                    overrides.push((k.to_string(), v.to_string()));
                    continue;
                }
            }
        }
        args.push(a);
    }
    (args, overrides)
}

fn scene_config(common: &Common, mut overrides: Vec<(String, String)>) -> CliResult<SceneConfig> {
    let doc = match &common.config {
        Some(p) => Some(read_json::<Value>(p)?),
        None => None,
    };
    if let Some(s) = &common.species {
        let species: Species = s.parse().map_err(|e: Error| usage(e.to_string()))?;
        overrides.insert(0, ("species".into(), format!("\"{}\"", species.as_str())));
    }
    Ok(SceneConfig::resolve(doc, &overrides)?)
}

fn read_mesh(path: &Path) -> CliResult<LabeledMesh> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|e| Failure::from(Error::format(e.utf8_error().valid_up_to(), "OBJ is not UTF-8")))?;
    Ok(LabeledMesh::from_obj(&text)?)
}

fn write_mesh(dir: &Path, stem: &str, mesh: &LabeledMesh) -> CliResult<()> {
    write_file(&dir.join(format!("{stem}.obj")), mesh.to_obj().as_bytes())?;
    write_json(&dir.join(format!("{stem}_labels.json")), &mesh.sidecar())?;
    Ok(())
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => write_json(p, value)?,
        None => say(&serde_json::to_string_pretty(value).map_err(Error::from)?),
    }
    Ok(())
}

/// Prints a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn say(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}") {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("warning: cannot write to stdout: {e}");
        }
    }
}

fn run(args: Args, overrides: Vec<(String, String)>) -> CliResult<()> {
    let cfg = scene_config(&args.common, overrides)?;
    match args.command {
        Command::Generate { values, seed, single, out } => {
            let params = match values {
                Some(v) => PlantParams::from_slice(cfg.species, &v)?,
                None => nominal_params(cfg.species),
            };
            let profile = cfg.load_profile()?;
            let seed = RandomSeed(seed);
            let mesh = if single {
                generate_plant(&params, &profile, seed, 0)?
            } else {
                build_canopy(&params, &cfg.layout, &profile, seed)?
            };
            write_mesh(&out, if single { "plant" } else { "canopy" }, &mesh)?;
            write_json(&out.join("params.json"), &ParamsRecord::new(&params, seed))?;
            log::info!("wrote {} faces, {} organs", mesh.num_faces(), mesh.sidecar().len());
        }
        Command::Render { mesh, camera, out } => {
            let mesh = read_mesh(&mesh)?;
            let camera: PinholeCamera = match camera {
                Some(p) => read_json(&p)?,
                None => cfg.render.camera(),
            };
            let (depth, mask) = render_depth(&mesh, &camera);
            write_file(&out.join("depth.cdm"), &encode_cdm(&depth))?;
            write_file(&out.join("mask.pgm"), &encode_pgm(&mask))?;
            write_json(&out.join("camera.json"), &camera)?;
        }
        Command::Rowfit { cloud, seed, out } => {
            let cloud = decode_ply(&read_file(&cloud)?)?;
            let report = run_rowfit(&cloud, &cfg.rowfit, RandomSeed(seed))?;
            write_json(&out.join("camera.json"), &report.camera)?;
            write_json(&out.join("rowfit_report.json"), &report)?;
            say(&format!(
                "plane rms {:.4} m, {} ground / {} plant points, {} rows, render height {} m",
                report.plane_rms_residual,
                report.ground_points,
                report.plant_points,
                report.rows.len(),
                report.render_height
            ));
        }
        Command::Stats { depth, mask, camera, out } => {
            let depth = decode_cdm(&read_file(&depth)?)?;
            let mask = match mask {
                Some(p) => decode_pgm(&read_file(&p)?)?,
                None => depth.finite_mask(),
            };
            let camera: PinholeCamera = read_json(&camera)?;
            let stats = compute_stats(&depth, &mask, &camera, &cfg.stats_config())?;
            emit_json(&stats, out.as_deref())?;
        }
        Command::Fit { out } => {
            let mut cfg = cfg;
            if out.is_some() {
                cfg.output_dir = out;
            }
            let dir = cfg.output_dir.clone().ok_or_else(|| usage("fit needs --out or output_dir"))?;
            let outcome = fit(&cfg, worker_threads()?)?;
            write_json(&dir.join("scene_config.json"), &cfg)?;
            write_fit_outputs(&outcome, &dir)?;
            let r = &outcome.result;
            say(&format!("averaged parameters {:?}", r.averaged.values));
            say(&format!("loss {:.6}, LAI {:.3}", r.loss.total, r.metrics.lai));
            if let Some(t) = &r.truth {
                let report = score(std::slice::from_ref(&r.metrics), std::slice::from_ref(&t.metrics))?;
                write_file(&dir.join("report.txt"), format!("{report}\n").as_bytes())?;
                say(&report.to_string());
            }
        }
        Command::Metrics { mesh, truth, ground_area, out } => {
            let area = ground_area.unwrap_or_else(|| cfg.layout.ground_area());
            let metrics = |paths: &[PathBuf]| -> CliResult<Vec<CanopyMetrics>> {
                paths.iter().map(|p| Ok(compute_metrics(&read_mesh(p)?, area)?)).collect()
            };
            let predicted = metrics(&mesh)?;
            if truth.is_empty() {
                emit_json(&predicted, out.as_deref())?;
            } else {
                let report = score(&predicted, &metrics(&truth)?)?;
                say(&report.to_string());
                emit_json(&serde_json::json!({"predicted": predicted, "report": report}), out.as_deref())?;
            }
        }
        Command::Export { mesh, depth, mask, camera, points, ground, seed, out } => {
            let cloud = match (mesh, depth) {
                (Some(m), None) => {
                    let mesh = read_mesh(&m)?;
                    let quad = ground.then(|| {
                        let hx = 0.5 * cfg.layout.plants_per_row as f64 * cfg.layout.plant_spacing;
                        let hy = 0.5 * cfg.layout.num_rows as f64 * cfg.layout.row_spacing;
                        GroundQuad { min: [-hx, -hy], max: [hx, hy], z: 0.0 }
                    });
                    sample_surface_points(&mesh, points, RandomSeed(seed), &OrganColors::default(), quad.as_ref())?
                }
                (None, Some(d)) => {
                    let depth = decode_cdm(&read_file(&d)?)?;
                    let mask = mask.map(|p| read_file(&p).and_then(|b| decode_pgm(&b))).transpose()?;
                    let camera: PinholeCamera = read_json(camera.as_ref().expect("clap requires camera"))?;
                    unproject(&depth, mask.as_ref(), &camera)
                }
                _ => return Err(usage("export needs exactly one of --mesh or --depth")),
            };
            write_file(&out, &encode_ply(&cloud))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (argv, overrides) = split_overrides(std::env::args().collect());
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match worker_threads() {
        Ok(n) => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(args, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
