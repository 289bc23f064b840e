//! Scene configuration, observation ingestion and end-to-end fitting.

mod config;
mod fit;
mod observe;

pub use config::{
    apply_override, merge, nominal_params, MaskThresholds, ObservationSource, Preset, RenderConfig, SceneConfig,
};
pub use fit::{
    fit, fit_observation, worker_threads, write_fit_outputs, Evaluation, FitOutcome, FitResult, RunFailure,
    RunSummary, Scene, TruthSummary, THREADS_ENV,
};
pub use observe::{load_observation, oracle_seed, synthetic_observation, threshold_mask, HiddenScene, Observation};
