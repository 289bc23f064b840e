use rand::Rng;
use statrs::function::erf::erfc;

use super::gp::GaussianProcess;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Expected improvement below `best` for a minimization problem.
pub fn expected_improvement(mu: f64, sigma: f64, best: f64) -> f64 {
    let gain = best - mu;
    if !(sigma > 0.0) {
        return gain.max(0.0);
    }
    let z = gain / sigma;
    (gain * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
}

/// Maximizes EI over `candidate_count` uniform unit-box samples, then refines the
/// winner coordinate-wise for `passes` passes with a halving step.
/// Returns the proposal and its EI.
pub fn propose_next<R: Rng>(gp: &GaussianProcess, candidate_count: usize, passes: usize, rng: &mut R) -> (Vec<f64>, f64) {
    let d = gp.dim();
    let candidates: Vec<Vec<f64>> = (0..candidate_count.max(1))
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    propose_from(gp, candidates, passes)
}

pub fn propose_from(gp: &GaussianProcess, candidates: Vec<Vec<f64>>, passes: usize) -> (Vec<f64>, f64) {
    let best_y = gp.y.iter().copied().fold(f64::INFINITY, f64::min);
    let ei = |q: &[f64]| {
        let (m, s) = gp.posterior(q);
        expected_improvement(m, s, best_y)
    };
    let scores: Vec<f64> = gp
        .posterior_many(&candidates)
        .into_iter()
        .map(|(m, s)| expected_improvement(m, s, best_y))
        .collect();
    let mut idx = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[idx] {
            idx = i;
        }
    }
    let mut x = candidates[idx].clone();
    let mut fx = scores[idx];
    let mut step = 0.05;
    for _ in 0..passes {
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut t = x.clone();
                t[k] = (t[k] + dir * step).clamp(0.0, 1.0);
                let ft = ei(&t);
                if ft > fx {
                    x = t;
                    fx = ft;
                    break;
                }
            }
        }
        step *= 0.5;
    }
    (x, fx)
}
