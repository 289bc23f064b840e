//! Gaussian-process Bayesian optimization with a Matérn kernel and expected improvement.

mod acquisition;
mod gp;
mod kernel;
mod optimize;
mod space;

pub use acquisition::{expected_improvement, normal_cdf, normal_pdf, propose_from, propose_next};
pub use gp::{gp_fit, search_hyper, GaussianProcess, GpHyper, LENGTH_SCALE_BOUNDS, MAX_JITTER, NOISE_BOUNDS, SIGNAL_VARIANCE_BOUNDS};
pub use kernel::{matern_cov, MaternNu};
pub use optimize::{
    average_solutions, evaluation_seed, optimize, optimize_runs, read_trace, OptConfig, OptRunResult, TargetTransform,
    TraceRecord,
};
pub use space::SearchSpace;
