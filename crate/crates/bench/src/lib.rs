//! Shared fixtures for the criterion benchmarks in `benches/`.

use canopyfit::morphology::Species;
use canopyfit::pipeline::{load_observation, Preset, Scene, SceneConfig};
use canopyfit::rng::RandomSeed;
use rand::Rng;

/// Desk-preset synthetic scene for `species` at the nominal parameters.
pub fn nominal_scene(species: Species) -> Scene {
    let cfg = SceneConfig::preset(species, Preset::Desk);
    let profile = cfg.load_profile().expect("built-in profile");
    let obs = load_observation(&cfg, &profile).expect("synthetic observation");
    Scene::new(&cfg, profile, &obs)
}

/// `n` random points in the `d`-dimensional unit box with a smooth noisy response.
pub fn gp_data(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = RandomSeed(seed).rng();
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let y = x
        .iter()
        .map(|p| p.iter().enumerate().map(|(k, v)| (v - 0.1 * k as f64).powi(2)).sum::<f64>() + 0.01 * rng.random::<f64>())
        .collect();
    (x, y)
}
