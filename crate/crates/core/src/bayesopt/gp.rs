//! Gaussian-process regression on unit-box inputs with standardized targets.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::kernel::MaternNu;
use crate::error::{Error, Result};

pub const LENGTH_SCALE_BOUNDS: (f64, f64) = (1e-2, 10.0);
pub const NOISE_BOUNDS: (f64, f64) = (1e-8, 1e-1);
pub const SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (1e-2, 1e2);
pub const MAX_JITTER: f64 = 1e-4;

/// Kernel hyperparameters, in standardized target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub length_scales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl GpHyper {
    pub fn isotropic(dim: usize, length_scale: f64, signal_variance: f64, noise_variance: f64) -> Self {
        GpHyper { length_scales: vec![length_scale; dim], signal_variance, noise_variance }
    }

    fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.length_scales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_variance.ln());
        v.push(self.noise_variance.ln());
        v
    }

    fn from_log(v: &[f64]) -> Self {
        let d = v.len() - 2;
        GpHyper {
            length_scales: v[..d].iter().map(|x| x.exp()).collect(),
            signal_variance: v[d].exp(),
            noise_variance: v[d + 1].exp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaussianProcess {
    pub nu: MaternNu,
    pub hyper: GpHyper,
    pub x: Vec<Vec<f64>>,
    /// Raw targets.
    pub y: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
    /// Jitter added on the diagonal beyond the noise variance.
    pub jitter: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    ys: DVector<f64>,
}

/// Per-dimension squared differences of all input pairs, reused across hyperparameter trials.
struct PairDistances {
    n: usize,
    d: usize,
    sq: Vec<f64>,
}

impl PairDistances {
    fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let d = x[0].len();
        let mut sq = vec![0.0; d * n * n];
        for k in 0..d {
            for i in 0..n {
                for j in 0..n {
                    let t = x[i][k] - x[j][k];
                    sq[(k * n + i) * n + j] = t * t;
                }
            }
        }
        PairDistances { n, d, sq }
    }

    fn kernel(&self, nu: MaternNu, h: &GpHyper) -> DMatrix<f64> {
        let n = self.n;
        let inv: Vec<f64> = h.length_scales.iter().map(|l| 1.0 / (l * l)).collect();
        DMatrix::from_fn(n, n, |i, j| {
            let r2: f64 = (0..self.d).map(|k| self.sq[(k * n + i) * n + j] * inv[k]).sum();
            h.signal_variance * nu.correlation(r2.sqrt())
        })
    }
}

fn standardize(y: &[f64]) -> (f64, f64, DVector<f64>) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    (mean, std, DVector::from_iterator(y.len(), y.iter().map(|v| (v - mean) / std)))
}

/// Cholesky of `k + noise I`, escalating extra diagonal jitter up to `MAX_JITTER`.
fn factor(mut k: DMatrix<f64>, noise: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    for i in 0..n {
        k[(i, i)] += noise;
    }
    let mut jitter = 0.0;
    let mut next = 1e-10;
    loop {
        if let Some(c) = Cholesky::new(k.clone()) {
            return Ok((c, jitter));
        }
        if next > MAX_JITTER * 1.0001 {
            return Err(Error::numeric(format!(
                "kernel matrix not positive definite after jitter {MAX_JITTER:e}"
            )));
        }
        for i in 0..n {
            k[(i, i)] += next - jitter;
        }
        jitter = next;
        next *= 10.0;
    }
}

fn lml_from(chol: &Cholesky<f64, Dyn>, ys: &DVector<f64>) -> (f64, DVector<f64>) {
    let alpha = chol.solve(ys);
    let n = ys.len() as f64;
    let logdet: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    (-0.5 * ys.dot(&alpha) - logdet - 0.5 * n * (2.0 * std::f64::consts::PI).ln(), alpha)
}

fn check_inputs(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(Error::domain(format!("GP needs >= 2 matching points, got {} inputs and {} targets", x.len(), y.len())));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|p| p.len() != d) {
        return Err(Error::domain("GP inputs must share a non-zero dimension"));
    }
    if x.iter().flatten().any(|v| !(-1e-9..=1.0 + 1e-9).contains(v)) {
        return Err(Error::domain("GP inputs must lie in the unit box"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("GP targets must be finite"));
    }
    Ok(())
}

impl GaussianProcess {
    /// Fits with fixed hyperparameters.
    pub fn with_hyper(x: Vec<Vec<f64>>, y: Vec<f64>, nu: MaternNu, hyper: GpHyper) -> Result<Self> {
        check_inputs(&x, &y)?;
        if hyper.length_scales.len() != x[0].len() {
            return Err(Error::domain("length scale count differs from input dimension"));
        }
        let pd = PairDistances::new(&x);
        let (y_mean, y_std, ys) = standardize(&y);
        let (chol, jitter) = factor(pd.kernel(nu, &hyper), hyper.noise_variance)?;
        let alpha = chol.solve(&ys);
        Ok(GaussianProcess { nu, hyper, x, y, y_mean, y_std, jitter, chol, alpha, ys })
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        lml_from(&self.chol, &self.ys).0
    }

    fn cross_cov(&self, q: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.x.iter().map(|p| {
                self.hyper.signal_variance
                    * self.nu.correlation(super::kernel::scaled_distance(p, q, &self.hyper.length_scales))
            }),
        )
    }

    /// Predictive mean and standard deviation of the latent function, in target units.
    pub fn posterior(&self, q: &[f64]) -> (f64, f64) {
        let ks = self.cross_cov(q);
        let mu = ks.dot(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&ks).expect("non-singular factor");
        let var = (self.hyper.signal_variance - v.norm_squared()).max(0.0);
        (self.y_mean + self.y_std * mu, self.y_std * var.sqrt())
    }

    /// Batched `posterior` over many query points.
    pub fn posterior_many(&self, qs: &[Vec<f64>]) -> Vec<(f64, f64)> {
        if qs.is_empty() {
            return Vec::new();
        }
        let n = self.len();
        let mut ks = DMatrix::zeros(n, qs.len());
        for (c, q) in qs.iter().enumerate() {
            ks.set_column(c, &self.cross_cov(q));
        }
        let mu = ks.tr_mul(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&ks).expect("non-singular factor");
        (0..qs.len())
            .map(|c| {
                let var = (self.hyper.signal_variance - v.column(c).norm_squared()).max(0.0);
                (self.y_mean + self.y_std * mu[c], self.y_std * var.sqrt())
            })
            .collect()
    }

    pub fn prior_std(&self) -> f64 {
        self.y_std * self.hyper.signal_variance.sqrt()
    }
}

/// Fits a GP, choosing hyperparameters by maximizing the log marginal likelihood:
/// a coarse isotropic log grid followed by per-coordinate log-space refinement.
pub fn gp_fit(x: Vec<Vec<f64>>, y: Vec<f64>, nu: MaternNu) -> Result<GaussianProcess> {
    let hyper = search_hyper(&x, &y, nu)?;
    GaussianProcess::with_hyper(x, y, nu, hyper)
}

pub fn search_hyper(x: &[Vec<f64>], y: &[f64], nu: MaternNu) -> Result<GpHyper> {
    check_inputs(x, y)?;
    let d = x[0].len();
    let pd = PairDistances::new(x);
    let (_, _, ys) = standardize(y);
    let score = |h: &GpHyper| -> f64 {
        match factor(pd.kernel(nu, h), h.noise_variance) {
            Ok((c, _)) => lml_from(&c, &ys).0,
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mut best = GpHyper::isotropic(d, 0.3, 1.0, 1e-4);
    let mut best_score = f64::NEG_INFINITY;
    for &l in &[0.03, 0.1, 0.3, 1.0, 3.0] {
        for &noise in &[1e-6, 1e-4, 1e-2, 1e-1] {
            let h = GpHyper::isotropic(d, l, 1.0, noise);
            let s = score(&h);
            if s > best_score {
                best_score = s;
                best = h;
            }
        }
    }

    let bounds: Vec<(f64, f64)> = (0..d)
        .map(|_| LENGTH_SCALE_BOUNDS)
        .chain([SIGNAL_VARIANCE_BOUNDS, NOISE_BOUNDS])
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let mut theta = best.to_log();
    let mut step = 3f64.ln();
    for _ in 0..4 {
        for k in 0..theta.len() {
            for dir in [1.0, -1.0] {
                let mut t = theta.clone();
                t[k] = (t[k] + dir * step).clamp(bounds[k].0, bounds[k].1);
                if t[k] == theta[k] {
                    continue;
                }
                let s = score(&GpHyper::from_log(&t));
                if s > best_score {
                    best_score = s;
                    theta = t;
                    break;
                }
            }
        }
        step *= 0.5;
    }
    if !best_score.is_finite() {
        return Err(Error::numeric("no hyperparameter setting gave a positive-definite kernel"));
    }
    Ok(GpHyper::from_log(&theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        let y = x.iter().map(|p| p.iter().map(|v| (3.0 * v).sin()).sum::<f64>() + 0.05 * rng.random::<f64>()).collect();
        (x, y)
    }

    // dense-algebra oracle with an explicit inverse and determinant
    fn dense(x: &[Vec<f64>], y: &[f64], nu: MaternNu, h: &GpHyper, q: &[f64]) -> (f64, f64, f64) {
        let n = x.len();
        let k = |a: &[f64], b: &[f64]| {
            let r: f64 = a.iter().zip(b).zip(&h.length_scales).map(|((p, q), l)| ((p - q) / l).powi(2)).sum::<f64>().sqrt();
            h.signal_variance * nu.correlation(r)
        };
        let mut km = DMatrix::from_fn(n, n, |i, j| k(&x[i], &x[j]));
        for i in 0..n {
            km[(i, i)] += h.noise_variance;
        }
        let mean = y.iter().sum::<f64>() / n as f64;
        let std = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let ys = DVector::from_iterator(n, y.iter().map(|v| (v - mean) / std));
        let inv = km.clone().try_inverse().unwrap();
        let ks = DVector::from_iterator(n, x.iter().map(|p| k(p, q)));
        let mu = mean + std * (ks.transpose() * &inv * &ys)[0];
        let var = h.signal_variance - (ks.transpose() * &inv * &ks)[0];
        let lml = -0.5 * (ys.transpose() * &inv * &ys)[0] - 0.5 * km.determinant().ln()
            - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        (mu, std * var.max(0.0).sqrt(), lml)
    }

    #[test]
    fn matches_dense_oracle() {
        for seed in 0..5 {
            let (x, y) = random_problem(seed, 20, 3);
            let h = GpHyper { length_scales: vec![0.4, 0.7, 1.1], signal_variance: 1.3, noise_variance: 1e-3 };
            for nu in [MaternNu::Half, MaternNu::ThreeHalves, MaternNu::FiveHalves] {
                let gp = GaussianProcess::with_hyper(x.clone(), y.clone(), nu, h.clone()).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
                for _ in 0..25 {
                    let q: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                    let (mu, sd) = gp.posterior(&q);
                    let (mu_o, sd_o, lml_o) = dense(&x, &y, nu, &h, &q);
                    assert!((mu - mu_o).abs() < 1e-8, "{mu} {mu_o}");
                    assert!((sd - sd_o).abs() < 1e-8);
                    assert!((gp.log_marginal_likelihood() - lml_o).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn batched_equals_single() {
        let (x, y) = random_problem(7, 15, 2);
        let gp = gp_fit(x, y, MaternNu::FiveHalves).unwrap();
        let qs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 29.0, 1.0 - i as f64 / 29.0]).collect();
        for (q, (m, s)) in qs.iter().zip(gp.posterior_many(&qs)) {
            let (m1, s1) = gp.posterior(q);
            assert!((m - m1).abs() < 1e-12 && (s - s1).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_function() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let gp = gp_fit(x, vec![4.2; 8], MaternNu::FiveHalves).unwrap();
        for q in [0.0, 0.13, 0.5, 0.99] {
            assert!((gp.posterior(&[q]).0 - 4.2).abs() < 1e-6);
        }
    }

    #[test]
    fn interpolates_and_reverts_to_prior() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0 * 0.2]).collect();
        let y: Vec<f64> = x.iter().map(|p| (p[0] - 0.3).powi(2)).collect();
        let gp = gp_fit(x.clone(), y.clone(), MaternNu::FiveHalves).unwrap();
        for (p, t) in x.iter().zip(&y) {
            assert!((gp.posterior(p).0 - t).abs() < 1e-4);
            let (_, sd) = gp.posterior(p);
            let var_std = (sd / gp.y_std).powi(2);
            assert!(var_std <= gp.hyper.noise_variance + gp.jitter + 1e-6);
        }
        let h = GpHyper::isotropic(1, 0.05, 1.0, 1e-6);
        let gp = GaussianProcess::with_hyper(x, y, MaternNu::FiveHalves, h).unwrap();
        let (mu, sd) = gp.posterior(&[0.2 + 10.0 * 0.05]);
        assert!((mu - gp.y_mean).abs() < 0.01 * gp.y_std);
        assert!((sd - gp.prior_std()).abs() < 0.01 * gp.prior_std());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(gp_fit(vec![vec![0.5]], vec![1.0], MaternNu::FiveHalves).is_err());
        assert!(gp_fit(vec![vec![0.5], vec![1.5]], vec![1.0, 2.0], MaternNu::FiveHalves).is_err());
        assert!(gp_fit(vec![vec![0.5], vec![0.6]], vec![1.0, f64::NAN], MaternNu::FiveHalves).is_err());
    }

    #[test]
    fn duplicate_points_need_jitter() {
        let x = vec![vec![0.5]; 4];
        let h = GpHyper::isotropic(1, 0.3, 1.0, 1e-8);
        let gp = GaussianProcess::with_hyper(x, vec![1.0, 1.0, 1.0, 1.0], MaternNu::FiveHalves, h).unwrap();
        assert!(gp.jitter <= MAX_JITTER);
    }
}
