use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bayesopt::{average_solutions, optimize_runs, OptRunResult, SearchSpace};
use crate::error::{Error, Result};
use crate::io::{encode_cdm, encode_pgm, write_file, write_json};
use crate::loss::{compute_stats, total_loss, HistogramSet, LossBreakdown, LossWeights, StatsConfig};
use crate::mesh::LabeledMesh;
use crate::metrics::{compute_metrics, CanopyMetrics};
use crate::morphology::{build_canopy, CanopyLayout, MorphologyProfile, ParamsRecord, PlantParams, Species};
use crate::render::{render_depth, DepthMap, ForegroundMask, PinholeCamera};
use crate::rng::RandomSeed;

use super::config::SceneConfig;
use super::observe::{load_observation, Observation};

/// Environment variable bounding the number of worker threads.
pub const THREADS_ENV: &str = "CANOPYFIT_THREADS";

/// Worker count: `CANOPYFIT_THREADS` when set to a positive integer, else the available parallelism.
pub fn worker_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Everything needed to score a parameter vector against fixed observation statistics.
#[derive(Debug, Clone)]
pub struct Scene {
    pub species: Species,
    pub layout: CanopyLayout,
    pub profile: MorphologyProfile,
    pub camera: PinholeCamera,
    pub stats: StatsConfig,
    pub weights: LossWeights,
    pub observed: HistogramSet,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub mesh: LabeledMesh,
    pub depth: DepthMap,
    pub mask: ForegroundMask,
    pub stats: HistogramSet,
    pub loss: LossBreakdown,
}

impl Scene {
    /// Prediction camera: canonical pose at the configured height, observation intrinsics.
    pub fn new(cfg: &SceneConfig, profile: MorphologyProfile, obs: &Observation) -> Self {
        let camera = PinholeCamera::looking_down(cfg.render.render_height)
            .with_resolution(obs.camera.width, obs.camera.height)
            .with_vfov(obs.camera.vfov_deg);
        Scene {
            species: cfg.species,
            layout: cfg.layout,
            profile,
            camera,
            stats: cfg.stats_config(),
            weights: cfg.weights,
            observed: obs.stats.clone(),
        }
    }

    pub fn evaluate_params(&self, params: &PlantParams, seed: RandomSeed) -> Result<Evaluation> {
        let mesh = build_canopy(params, &self.layout, &self.profile, seed)?;
        let (depth, mask) = render_depth(&mesh, &self.camera);
        let stats = compute_stats(&depth, &mask, &self.camera, &self.stats)?;
        let loss = total_loss(&self.observed, &stats, &self.weights)?;
        Ok(Evaluation { mesh, depth, mask, stats, loss })
    }

    /// Total loss of a raw parameter vector.
    pub fn loss(&self, x: &[f64], seed: RandomSeed) -> Result<f64> {
        let params = PlantParams::from_slice(self.species, x)?;
        Ok(self.evaluate_params(&params, seed)?.loss.total)
    }

    pub fn metrics_at(&self, params: &PlantParams, seed: RandomSeed) -> Result<CanopyMetrics> {
        let mesh = build_canopy(params, &self.layout, &self.profile, seed)?;
        compute_metrics(&mesh, self.layout.ground_area())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub best_x: Vec<f64>,
    pub best_loss: f64,
    pub best_iter: usize,
    pub evaluations: usize,
    /// Canopy metrics at this run's best point, generated with the reporting seed.
    pub metrics: CanopyMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSummary {
    pub params: Vec<f64>,
    pub metrics: CanopyMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub species: Species,
    pub averaged: ParamsRecord,
    pub runs: Vec<RunSummary>,
    pub failed_runs: Vec<RunFailure>,
    pub observation: HistogramSet,
    pub predicted: HistogramSet,
    pub loss: LossBreakdown,
    pub metrics: CanopyMetrics,
    #[serde(default)]
    pub truth: Option<TruthSummary>,
}

/// Fit output plus the artifacts rendered at the averaged solution.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub result: FitResult,
    pub solution: Evaluation,
    pub run_results: Vec<OptRunResult>,
}

/// Loads the observation once, then fits.
pub fn fit(cfg: &SceneConfig, threads: usize) -> Result<FitOutcome> {
    cfg.validate()?;
    let profile = cfg.load_profile()?;
    let obs = load_observation(cfg, &profile)?;
    fit_observation(cfg, profile, &obs, threads)
}

/// Runs the configured optimizations against a prepared observation, averages the solutions,
/// and evaluates the averaged parameters with the reporting seed.
pub fn fit_observation(cfg: &SceneConfig, profile: MorphologyProfile, obs: &Observation, threads: usize) -> Result<FitOutcome> {
    let scene = Scene::new(cfg, profile, obs);
    let space = SearchSpace::for_species(cfg.species);
    let trace_dir = cfg.output_dir.as_ref().map(|d| d.join("traces"));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;

    pool.install(|| {
        let outcomes = optimize_runs(|x, s| scene.loss(x, s), &space, &cfg.opt, trace_dir.as_deref());
        let mut ok = Vec::new();
        let mut failed = Vec::new();
        let mut first_err = None;
        for (run, r) in outcomes.into_iter().enumerate() {
            match r {
                Ok(res) => ok.push((run, res)),
                Err(e) => {
                    log::warn!("optimization run {run} failed: {e}");
                    failed.push(RunFailure { run, error: e.to_string() });
                    first_err.get_or_insert(e);
                }
            }
        }
        if ok.is_empty() {
            return Err(first_err.unwrap_or_else(|| Error::config("no optimization runs configured")));
        }
        let results: Vec<OptRunResult> = ok.iter().map(|(_, r)| r.clone()).collect();
        let averaged = PlantParams::from_slice(cfg.species, &average_solutions(&results, &space)?)?;
        let solution = scene.evaluate_params(&averaged, cfg.reporting_seed)?;
        let metrics = compute_metrics(&solution.mesh, cfg.layout.ground_area())?;

        let runs = ok
            .iter()
            .map(|(run, r)| {
                let p = PlantParams::from_slice(cfg.species, &r.best_x)?;
                Ok(RunSummary {
                    run: *run,
                    best_x: r.best_x.clone(),
                    best_loss: r.best_loss,
                    best_iter: r.best_iter,
                    evaluations: r.trace.len(),
                    metrics: scene.metrics_at(&p, cfg.reporting_seed)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let truth = match &obs.hidden {
            Some(h) => Some(TruthSummary {
                params: h.params.to_vec(),
                metrics: compute_metrics(&h.mesh, h.layout.ground_area())?,
            }),
            None => None,
        };

        Ok(FitOutcome {
            result: FitResult {
                species: cfg.species,
                averaged: ParamsRecord::new(&averaged, cfg.reporting_seed),
                runs,
                failed_runs: failed,
                observation: obs.stats.clone(),
                predicted: solution.stats.clone(),
                loss: solution.loss,
                metrics,
                truth,
            },
            solution,
            run_results: results,
        })
    })
}

/// Writes the fit result and the artifacts at the averaged solution into `dir`.
pub fn write_fit_outputs(outcome: &FitOutcome, dir: &Path) -> Result<()> {
    let r = &outcome.result;
    write_json(&dir.join("fit_result.json"), r)?;
    write_json(&dir.join("params.json"), &r.averaged)?;
    write_json(&dir.join("observation_stats.json"), &r.observation)?;
    write_json(&dir.join("predicted_stats.json"), &r.predicted)?;
    write_file(&dir.join("canopy.obj"), outcome.solution.mesh.to_obj().as_bytes())?;
    write_json(&dir.join("canopy_labels.json"), &outcome.solution.mesh.sidecar())?;
    write_file(&dir.join("predicted_depth.cdm"), &encode_cdm(&outcome.solution.depth))?;
    write_file(&dir.join("predicted_mask.pgm"), &encode_pgm(&outcome.solution.mask))?;
    Ok(())
}
