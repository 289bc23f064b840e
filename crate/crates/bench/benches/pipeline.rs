use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use canopyfit::bayesopt::{propose_next, search_hyper, GaussianProcess, MaternNu};
use canopyfit::loss::compute_stats;
use canopyfit::morphology::{build_canopy, Species};
use canopyfit::pipeline::{nominal_params, Preset, SceneConfig};
use canopyfit::render::render_depth;
use canopyfit::rng::RandomSeed;
use canopyfit_bench::{gp_data, nominal_scene};

fn generation_and_render(c: &mut Criterion) {
    for species in [Species::Soybean, Species::Maize] {
        let cfg = SceneConfig::preset(species, Preset::Desk);
        let profile = cfg.load_profile().unwrap();
        let params = nominal_params(species);
        let camera = cfg.render.camera();
        c.bench_function(&format!("{species}/build_canopy"), |b| {
            b.iter(|| build_canopy(black_box(&params), &cfg.layout, &profile, RandomSeed(3)).unwrap())
        });
        let mesh = build_canopy(&params, &cfg.layout, &profile, RandomSeed(3)).unwrap();
        c.bench_function(&format!("{species}/render_depth"), |b| b.iter(|| render_depth(black_box(&mesh), &camera)));
        let (depth, mask) = render_depth(&mesh, &camera);
        let stats = cfg.stats_config();
        c.bench_function(&format!("{species}/compute_stats"), |b| {
            b.iter(|| compute_stats(black_box(&depth), &mask, &camera, &stats).unwrap())
        });
    }
}

fn loss_evaluation(c: &mut Criterion) {
    let scene = nominal_scene(Species::Soybean);
    let x = nominal_params(Species::Soybean).to_vec();
    let mut group = c.benchmark_group("soybean");
    group.sample_size(20);
    group.bench_function("loss_evaluation", |b| b.iter(|| scene.loss(black_box(&x), RandomSeed(9)).unwrap()));
    group.finish();
}

fn surrogate(c: &mut Criterion) {
    let nu = MaternNu::FiveHalves;
    let mut group = c.benchmark_group("gp");
    group.sample_size(10);
    for n in [100, 300] {
        let (x, y) = gp_data(n, 5, 1);
        group.bench_function(format!("search_hyper_n{n}"), |b| b.iter(|| search_hyper(black_box(&x), &y, nu).unwrap()));
        let hyper = search_hyper(&x, &y, nu).unwrap();
        let gp = GaussianProcess::with_hyper(x.clone(), y.clone(), nu, hyper.clone()).unwrap();
        group.bench_function(format!("fit_and_propose_n{n}"), |b| {
            b.iter(|| {
                let gp = GaussianProcess::with_hyper(x.clone(), y.clone(), nu, hyper.clone()).unwrap();
                propose_next(&gp, 1000, 3, &mut RandomSeed(5).rng())
            })
        });
        group.bench_function(format!("posterior_n{n}"), |b| b.iter(|| gp.posterior(black_box(&[0.5; 5]))));
    }
    group.finish();
}

criterion_group!(benches, generation_and_render, loss_evaluation, surrogate);
criterion_main!(benches);
