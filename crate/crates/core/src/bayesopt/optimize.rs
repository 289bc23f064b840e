use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::acquisition::propose_next;
use super::gp::{search_hyper, GaussianProcess, GpHyper};
use super::kernel::MaternNu;
use super::space::SearchSpace;
use crate::error::{Error, Result};
use crate::rng::RandomSeed;

/// Map applied to objective values before the surrogate sees them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetTransform {
    #[default]
    Identity,
    /// `ln(y + 1e-6)`; compresses heavy upper tails of nonnegative losses.
    Log,
}

impl TargetTransform {
    const LOG_OFFSET: f64 = 1e-6;

    pub fn apply(self, y: f64) -> Result<f64> {
        match self {
            TargetTransform::Identity => Ok(y),
            TargetTransform::Log if y + Self::LOG_OFFSET > 0.0 => Ok((y + Self::LOG_OFFSET).ln()),
            TargetTransform::Log => Err(Error::numeric(format!("log target transform needs y > -1e-6, got {y}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptConfig {
    pub n_initial: usize,
    pub n_total: usize,
    pub n_runs: usize,
    pub candidate_count: usize,
    pub refine_passes: usize,
    /// Guided iterations between hyperparameter searches (1 = every iteration).
    pub hyper_refit_every: usize,
    pub nu: MaternNu,
    pub target_transform: TargetTransform,
    pub seed: RandomSeed,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            n_initial: 200,
            n_total: 500,
            n_runs: 10,
            candidate_count: 1000,
            refine_passes: 3,
            hyper_refit_every: 10,
            nu: MaternNu::FiveHalves,
            target_transform: TargetTransform::Identity,
            seed: RandomSeed(0),
        }
    }
}

impl OptConfig {
    pub fn desk() -> Self {
        OptConfig { n_initial: 100, n_total: 300, n_runs: 5, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_initial == 0 || self.n_runs == 0 || self.candidate_count == 0 || self.hyper_refit_every == 0 {
            return Err(Error::config("optimizer counts must be >= 1"));
        }
        if self.n_initial > self.n_total {
            return Err(Error::config(format!(
                "n_initial ({}) exceeds n_total ({})",
                self.n_initial, self.n_total
            )));
        }
        if self.n_initial < 2 && self.n_total > self.n_initial {
            return Err(Error::config("GP-guided search needs n_initial >= 2"));
        }
        Ok(())
    }

    pub fn run_seed(&self, run: usize) -> RandomSeed {
        self.seed.derive_named("run").derive(run as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub x: Vec<f64>,
    pub loss: f64,
    pub wallclock_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptRunResult {
    pub best_x: Vec<f64>,
    pub best_loss: f64,
    pub best_iter: usize,
    pub trace: Vec<TraceRecord>,
}

impl OptRunResult {
    fn from_trace(trace: Vec<TraceRecord>) -> Result<Self> {
        let best = trace
            .iter()
            .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.iter.cmp(&b.iter)))
            .ok_or_else(|| Error::domain("empty optimization trace"))?;
        Ok(OptRunResult { best_x: best.x.clone(), best_loss: best.loss, best_iter: best.iter, trace: trace.clone() })
    }

    /// Best loss seen up to and including each iteration.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.trace
            .iter()
            .scan(f64::INFINITY, |b, r| {
                *b = b.min(r.loss);
                Some(*b)
            })
            .collect()
    }
}

/// Seed handed to the objective for evaluation `iter` of a run.
pub fn evaluation_seed(run_seed: RandomSeed, iter: usize) -> RandomSeed {
    run_seed.derive_named("eval").derive(iter as u64)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        if rec.iter != out.len() {
            return Err(Error::Data(format!(
                "{}: line {} has iter {}, expected {}",
                path.display(),
                i + 1,
                rec.iter,
                out.len()
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Minimizes `objective` over `space`. The objective receives the point and an
/// evaluation seed. When `trace_path` is given, records are appended as JSON lines
/// and an existing file is resumed from.
pub fn optimize<F>(
    mut objective: F,
    space: &SearchSpace,
    cfg: &OptConfig,
    run_seed: RandomSeed,
    trace_path: Option<&Path>,
) -> Result<OptRunResult>
where
    F: FnMut(&[f64], RandomSeed) -> Result<f64>,
{
    cfg.validate()?;
    space.validate()?;
    let d = space.dim();

    let mut trace = match trace_path {
        Some(p) if p.exists() => read_trace(p)?,
        _ => Vec::new(),
    };
    if let Some(bad) = trace.iter().find(|r| r.x.len() != d || !space.contains(&r.x) || !r.loss.is_finite()) {
        return Err(Error::Data(format!("trace record {} does not fit the search space", bad.iter)));
    }
    trace.truncate(cfg.n_total);
    let mut sink = match trace_path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            Some(OpenOptions::new().create(true).append(true).open(p).map_err(|e| Error::io(p, e))?)
        }
        None => None,
    };

    let mut hyper: Option<(usize, GpHyper)> = None;
    for iter in trace.len()..cfg.n_total {
        let start = Instant::now();
        let mut rng = run_seed.derive_named("propose").derive(iter as u64).rng();
        let unit = if iter < cfg.n_initial {
            (0..d).map(|_| rand::Rng::random::<f64>(&mut rng)).collect()
        } else {
            let xs: Vec<Vec<f64>> = trace.iter().map(|r| space.to_unit(&r.x).iter().map(|v| v.clamp(0.0, 1.0)).collect()).collect();
            let ys = trace.iter().map(|r| cfg.target_transform.apply(r.loss)).collect::<Result<Vec<f64>>>()?;
            // hyperparameters depend only on the data prefix at the last refit point
            let refit_at = cfg.n_initial + (iter - cfg.n_initial) / cfg.hyper_refit_every * cfg.hyper_refit_every;
            let h = match &hyper {
                Some((at, h)) if *at == refit_at => h.clone(),
                _ => {
                    let h = search_hyper(&xs[..refit_at], &ys[..refit_at], cfg.nu)?;
                    hyper = Some((refit_at, h.clone()));
                    h
                }
            };
            let gp = GaussianProcess::with_hyper(xs, ys, cfg.nu, h)?;
            propose_next(&gp, cfg.candidate_count, cfg.refine_passes, &mut rng).0
        };
        let x = space.from_unit(&unit);
        let loss = objective(&x, evaluation_seed(run_seed, iter))?;
        if !loss.is_finite() {
            return Err(Error::numeric(format!("objective returned {loss} at iteration {iter}")));
        }
        let rec = TraceRecord { iter, x, loss, wallclock_ms: start.elapsed().as_secs_f64() * 1e3 };
        if let (Some(f), Some(p)) = (sink.as_mut(), trace_path) {
            let line = serde_json::to_string(&rec)?;
            writeln!(f, "{line}").and_then(|_| f.flush()).map_err(|e| Error::io(p, e))?;
        }
        log::debug!("iter {iter}: loss {loss:.6}");
        trace.push(rec);
    }
    OptRunResult::from_trace(trace)
}

/// Runs `cfg.n_runs` independent optimizations concurrently; results are ordered by run index
/// and a failing run does not stop the others. With `trace_dir`, run `r` keeps its trace in
/// `run_{r}.jsonl`.
pub fn optimize_runs<F>(
    objective: F,
    space: &SearchSpace,
    cfg: &OptConfig,
    trace_dir: Option<&Path>,
) -> Vec<Result<OptRunResult>>
where
    F: Fn(&[f64], RandomSeed) -> Result<f64> + Sync,
{
    (0..cfg.n_runs)
        .into_par_iter()
        .map(|r| {
            let path = trace_dir.map(|d| d.join(format!("run_{r}.jsonl")));
            optimize(&objective, space, cfg, cfg.run_seed(r), path.as_deref())
        })
        .collect()
}

/// Per-dimension mean of each run's best point, clamped to the box.
pub fn average_solutions(results: &[OptRunResult], space: &SearchSpace) -> Result<Vec<f64>> {
    if results.is_empty() {
        return Err(Error::domain("cannot average zero optimization runs"));
    }
    let d = space.dim();
    if results.iter().any(|r| r.best_x.len() != d) {
        return Err(Error::domain("run results do not match the search space dimension"));
    }
    let n = results.len() as f64;
    let mean: Vec<f64> = (0..d).map(|k| results.iter().map(|r| r.best_x[k]).sum::<f64>() / n).collect();
    Ok(space.clamp(&mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(x: &[f64], _: RandomSeed) -> Result<f64> {
        Ok((x[0] - 0.3).powi(2) + (x[1] - 0.7).powi(2))
    }

    fn small() -> OptConfig {
        OptConfig { n_initial: 10, n_total: 25, n_runs: 2, candidate_count: 200, ..OptConfig::default() }
    }

    #[test]
    fn trace_length_and_monotone_best() {
        let space = SearchSpace::unit(2);
        let r = optimize(quad, &space, &small(), RandomSeed(1), None).unwrap();
        assert_eq!(r.trace.len(), 25);
        let b = r.best_so_far();
        assert!(b.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*b.last().unwrap(), r.best_loss);
        assert!(r.trace.iter().all(|t| space.contains(&t.x)));
    }

    #[test]
    fn pure_random_search() {
        let space = SearchSpace::unit(2);
        let cfg = OptConfig { n_initial: 15, n_total: 15, ..small() };
        let r = optimize(quad, &space, &cfg, RandomSeed(2), None).unwrap();
        let m = r.trace.iter().map(|t| t.loss).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_loss, m);
    }

    #[test]
    fn deterministic_and_resumable() {
        let space = SearchSpace::unit(2);
        let cfg = small();
        let a = optimize(quad, &space, &cfg, RandomSeed(3), None).unwrap();
        let b = optimize(quad, &space, &cfg, RandomSeed(3), None).unwrap();
        let strip = |r: &OptRunResult| r.trace.iter().map(|t| (t.x.clone(), t.loss)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut calls = 0;
        let failing = |x: &[f64], s: RandomSeed| {
            calls += 1;
            if calls == 18 { Err(Error::numeric("boom")) } else { quad(x, s) }
        };
        assert!(optimize(failing, &space, &cfg, RandomSeed(3), Some(&path)).is_err());
        assert_eq!(read_trace(&path).unwrap().len(), 17);
        let c = optimize(quad, &space, &cfg, RandomSeed(3), Some(&path)).unwrap();
        assert_eq!(strip(&a), strip(&c));
        assert_eq!(read_trace(&path).unwrap().len(), 25);
    }

    #[test]
    fn averaging() {
        let space = SearchSpace::new(vec!["a".into(), "b".into()], vec![0.0, 0.0], vec![10.0, 10.0]).unwrap();
        let mk = |x: Vec<f64>| OptRunResult { best_x: x, best_loss: 0.0, best_iter: 0, trace: vec![] };
        assert_eq!(average_solutions(&[mk(vec![1.0, 3.0])], &space).unwrap(), vec![1.0, 3.0]);
        assert_eq!(average_solutions(&[mk(vec![1.0, 3.0]), mk(vec![3.0, 5.0])], &space).unwrap(), vec![2.0, 4.0]);
        assert!(average_solutions(&[], &space).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OptConfig { n_initial: 10, n_total: 5, ..OptConfig::default() }.validate().is_err());
        assert!(OptConfig::default().validate().is_ok());
        let c: OptConfig = serde_json::from_str(r#"{"n_runs": 3, "nu": "3/2"}"#).unwrap();
        assert_eq!(c.n_runs, 3);
        assert_eq!(c.nu, MaternNu::ThreeHalves);
    }
}
