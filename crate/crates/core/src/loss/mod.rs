//! Histogram statistics of depth maps and the weighted histogram loss.

mod filter;
mod histogram;

pub use filter::{gaussian_blur, gaussian_kernel, sigma_for_kernel, sobel_magnitude};
pub use histogram::{normalized_histogram, HistogramSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::Species;
use crate::render::{DepthMap, ForegroundMask, PinholeCamera};

/// Binning and filtering used to summarize one depth map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsConfig {
    pub depth: HistogramSpec,
    pub lateral: HistogramSpec,
    pub sobel: HistogramSpec,
    pub blur_kernel: usize,
    /// Defaults to the size-derived sigma when absent.
    #[serde(default)]
    pub blur_sigma: Option<f64>,
    pub render_height: f64,
}

impl StatsConfig {
    pub fn soybean(render_height: f64) -> Self {
        StatsConfig {
            depth: HistogramSpec { bins: 20, lower: 0.1, upper: render_height },
            lateral: HistogramSpec { bins: 10, lower: 0.0, upper: 0.5 * render_height },
            sobel: HistogramSpec { bins: 10, lower: 0.0, upper: 0.004 },
            blur_kernel: 25,
            blur_sigma: None,
            render_height,
        }
    }

    pub fn maize(render_height: f64) -> Self {
        StatsConfig {
            depth: HistogramSpec { bins: 10, lower: 2.0, upper: render_height },
            lateral: HistogramSpec { bins: 10, lower: 0.0, upper: 0.5 * render_height },
            sobel: HistogramSpec { bins: 10, lower: 0.0, upper: 0.004 },
            blur_kernel: 55,
            blur_sigma: None,
            render_height,
        }
    }

    pub fn preset(species: Species, render_height: f64) -> Self {
        match species {
            Species::Soybean => Self::soybean(render_height),
            Species::Maize => Self::maize(render_height),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.blur_sigma.unwrap_or_else(|| sigma_for_kernel(self.blur_kernel))
    }

    pub fn validate(&self) -> Result<()> {
        self.depth.validate()?;
        self.lateral.validate()?;
        self.sobel.validate()?;
        if self.blur_kernel % 2 == 0 {
            return Err(Error::domain(format!("blur kernel size {} must be odd", self.blur_kernel)));
        }
        if !(self.render_height > 0.0) {
            return Err(Error::domain("render height must be positive"));
        }
        Ok(())
    }
}

fn foreground<'a>(depth: &'a DepthMap, mask: &'a ForegroundMask) -> impl Iterator<Item = (usize, f64)> + 'a {
    let data = &depth.data;
    mask.data
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(move |(i, _)| (i, data[i] as f64))
}

pub fn depth_histogram(depth: &DepthMap, mask: &ForegroundMask, spec: &HistogramSpec) -> Vec<f64> {
    normalized_histogram(foreground(depth, mask).map(|(_, d)| d), spec)
}

/// Histogram of the absolute across-row offset of each foreground pixel.
pub fn lateral_histogram(
    depth: &DepthMap,
    mask: &ForegroundMask,
    camera: &PinholeCamera,
    spec: &HistogramSpec,
) -> Vec<f64> {
    let w = depth.width;
    let f = camera.focal();
    let (_, cy) = camera.principal_point();
    // camera-frame y of the pixel-center ray at z-depth d
    normalized_histogram(
        foreground(depth, mask).map(|(i, d)| ((((i / w) as f64 + 0.5 - cy) * d) / f).abs()),
        spec,
    )
}

/// Histogram of `|gx| + |gy|` of the blurred depth, background filled with `fill_depth`.
pub fn sobel_histogram(
    depth: &DepthMap,
    mask: &ForegroundMask,
    spec: &HistogramSpec,
    blur_kernel: usize,
    blur_sigma: f64,
    fill_depth: f64,
) -> Result<Vec<f64>> {
    if blur_kernel % 2 == 0 {
        return Err(Error::domain(format!("blur kernel size {blur_kernel} must be odd")));
    }
    if mask.area() == 0 {
        return Ok(vec![0.0; spec.bins]);
    }
    let (w, h) = (depth.width, depth.height);
    let filled: Vec<f64> = depth
        .data
        .iter()
        .zip(&mask.data)
        .map(|(&d, &m)| if m { d as f64 } else { fill_depth })
        .collect();
    let blurred = gaussian_blur(&filled, w, h, blur_kernel, blur_sigma)?;
    let grad = sobel_magnitude(&blurred, w, h);
    Ok(normalized_histogram(
        mask.data.iter().zip(&grad).filter(|(&m, _)| m).map(|(_, &g)| g),
        spec,
    ))
}

/// Summary statistics of one depth map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSet {
    pub depth_hist: Vec<f64>,
    pub lateral_hist: Vec<f64>,
    pub sobel_hist: Vec<f64>,
    pub mask_area: usize,
    pub pixel_count: usize,
    pub render_height: f64,
    pub config: StatsConfig,
}

impl HistogramSet {
    pub fn mask_fraction(&self) -> f64 {
        if self.pixel_count == 0 {
            0.0
        } else {
            self.mask_area as f64 / self.pixel_count as f64
        }
    }
}

pub fn compute_stats(
    depth: &DepthMap,
    mask: &ForegroundMask,
    camera: &PinholeCamera,
    cfg: &StatsConfig,
) -> Result<HistogramSet> {
    cfg.validate()?;
    mask.check_consistent(depth)?;
    if camera.width != depth.width || camera.height != depth.height {
        return Err(Error::domain(format!(
            "camera is {}x{}, depth is {}x{}",
            camera.width, camera.height, depth.width, depth.height
        )));
    }
    Ok(HistogramSet {
        depth_hist: depth_histogram(depth, mask, &cfg.depth),
        lateral_hist: lateral_histogram(depth, mask, camera, &cfg.lateral),
        sobel_hist: sobel_histogram(depth, mask, &cfg.sobel, cfg.blur_kernel, cfg.sigma(), cfg.render_height)?,
        mask_area: mask.area(),
        pixel_count: depth.len(),
        render_height: cfg.render_height,
        config: cfg.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lateral: f64,
    pub sobel: f64,
    pub mask: f64,
}

impl LossWeights {
    pub const SOYBEAN: LossWeights = LossWeights { lateral: 2.0, sobel: 4.0, mask: 1.0 };
    pub const MAIZE: LossWeights = LossWeights { lateral: 1.0, sobel: 0.0, mask: 1.0 };
    pub const DEPTH_ONLY: LossWeights = LossWeights { lateral: 0.0, sobel: 0.0, mask: 0.0 };

    pub fn preset(species: Species) -> Self {
        match species {
            Species::Soybean => Self::SOYBEAN,
            Species::Maize => Self::MAIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lateral", self.lateral), ("sobel", self.sobel), ("mask", self.mask)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("loss weight {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub depth: f64,
    pub lateral: f64,
    pub sobel: f64,
    pub mask: f64,
    pub total: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn total_loss(obs: &HistogramSet, pred: &HistogramSet, w: &LossWeights) -> Result<LossBreakdown> {
    w.validate()?;
    if obs.config != pred.config {
        return Err(Error::domain("observed and predicted statistics use different histogram specs"));
    }
    if obs.pixel_count != pred.pixel_count {
        return Err(Error::domain(format!(
            "observed and predicted images differ in size ({} vs {} pixels)",
            obs.pixel_count, pred.pixel_count
        )));
    }
    for (name, a, b) in [
        ("depth", &obs.depth_hist, &pred.depth_hist),
        ("lateral", &obs.lateral_hist, &pred.lateral_hist),
        ("sobel", &obs.sobel_hist, &pred.sobel_hist),
    ] {
        if a.len() != b.len() {
            return Err(Error::domain(format!("{name} histograms differ in length ({} vs {})", a.len(), b.len())));
        }
    }
    let depth = squared_distance(&obs.depth_hist, &pred.depth_hist);
    let lateral = squared_distance(&obs.lateral_hist, &pred.lateral_hist);
    let sobel = squared_distance(&obs.sobel_hist, &pred.sobel_hist);
    let dm = obs.mask_fraction() - pred.mask_fraction();
    let mask = dm * dm;
    Ok(LossBreakdown {
        depth,
        lateral,
        sobel,
        mask,
        total: depth + w.lateral * lateral + w.sobel * sobel + w.mask * mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map(w: usize, h: usize, f: impl Fn(usize, usize) -> Option<f32>) -> (DepthMap, ForegroundMask) {
        let mut d = DepthMap::empty(w, h);
        let mut m = ForegroundMask::empty(w, h);
        for y in 0..h {
            for x in 0..w {
                if let Some(v) = f(x, y) {
                    d.data[y * w + x] = v;
                    m.data[y * w + x] = true;
                }
            }
        }
        (d, m)
    }

    fn set(d: Vec<f64>, l: Vec<f64>, s: Vec<f64>, area: usize) -> HistogramSet {
        HistogramSet {
            depth_hist: d,
            lateral_hist: l,
            sobel_hist: s,
            mask_area: area,
            pixel_count: 100,
            render_height: 1.0,
            config: StatsConfig::soybean(1.0),
        }
    }

    #[test]
    fn one_hot_and_empty_depth() {
        let spec = StatsConfig::soybean(1.0).depth;
        let (d, m) = map(8, 6, |_, _| Some(spec.bin_center(7) as f32));
        let h = depth_histogram(&d, &m, &spec);
        assert_eq!(h[7], 1.0);
        assert_eq!(h.iter().sum::<f64>(), 1.0);
        let (d, m) = map(8, 6, |_, _| None);
        assert_eq!(depth_histogram(&d, &m, &spec), vec![0.0; 20]);
    }

    #[test]
    fn two_layer_scene() {
        let spec = StatsConfig::soybean(1.0).depth;
        let (d, m) = map(10, 10, |x, _| Some(if x < 5 { 0.3 } else { 0.8 }));
        let h = depth_histogram(&d, &m, &spec);
        let mut expect = vec![0.0; 20];
        expect[spec.bin(0.3)] += 0.5;
        expect[spec.bin(0.8)] += 0.5;
        assert_eq!(h, expect);
        assert_eq!(h.iter().filter(|&&v| v == 0.5).count(), 2);
    }

    #[test]
    fn lateral_folds_sign() {
        let cam = PinholeCamera::looking_down(1.0).with_resolution(64, 64);
        let f = cam.focal();
        let spec = HistogramSpec { bins: 10, lower: 0.0, upper: 0.5 };
        let rows: Vec<usize> = [-0.22f64, 0.22]
            .iter()
            .map(|&y| (y * f + 32.0 - 0.5).round() as usize)
            .collect();
        let (d, m) = map(64, 64, |_, r| rows.contains(&r).then_some(1.0));
        let h = lateral_histogram(&d, &m, &cam, &spec);
        let peak = spec.bin(0.22);
        assert!((h[peak] - 1.0).abs() < 1e-12, "{h:?}");
        let (d, m) = map(64, 64, |_, r| (r == 31 || r == 32).then_some(1.0));
        assert_eq!(lateral_histogram(&d, &m, &cam, &spec)[0], 1.0);
    }

    #[test]
    fn lateral_matches_world_oracle() {
        let cam = PinholeCamera::looking_down(1.0).with_resolution(40, 30);
        let spec = HistogramSpec { bins: 10, lower: 0.0, upper: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut d = DepthMap::empty(40, 30);
        let mut m = ForegroundMask::empty(40, 30);
        for i in 0..d.len() {
            if rng.random_bool(0.4) {
                m.data[i] = true;
                d.data[i] = rng.random_range(0.2f32..1.0);
            }
        }
        let got = lateral_histogram(&d, &m, &cam, &spec);
        let mut counts = vec![0usize; 10];
        let mut n = 0;
        for row in 0..30 {
            for col in 0..40 {
                let i = row * 40 + col;
                if !m.data[i] {
                    continue;
                }
                let p = cam.unproject_pixel(col, row, d.data[i] as f64);
                let y = (p - cam.center).dot(&cam.y_axis()).abs();
                let k = ((y / 0.05).floor() as usize).min(9);
                counts[k] += 1;
                n += 1;
            }
        }
        for (g, c) in got.iter().zip(counts) {
            assert!((g - c as f64 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn sobel_constant_plane_and_ramp() {
        let spec = StatsConfig::soybean(1.0).sobel;
        let (d, m) = map(40, 40, |_, _| Some(0.7));
        let h = sobel_histogram(&d, &m, &spec, 25, sigma_for_kernel(25), 0.7).unwrap();
        assert_eq!(h[0], 1.0);
        assert!(sobel_histogram(&d, &m, &spec, 24, 1.0, 0.7).is_err());

        // full-frame ramp, identity blur: interior columns see 8a, replicated border columns 4a
        let (w, a) = (80usize, 0.00032);
        let (d, m) = map(w, 60, |x, _| Some((0.5 + a * x as f64) as f32));
        let h = sobel_histogram(&d, &m, &spec, 1, sigma_for_kernel(1), 0.5).unwrap();
        assert_eq!(h[spec.bin(8.0 * a)], (w - 2) as f64 / w as f64);
        assert_eq!(h[spec.bin(4.0 * a)], 2.0 / w as f64);
    }

    #[test]
    fn loss_identities() {
        let a = set(vec![1.0, 0.0, 0.0], vec![0.5, 0.5], vec![1.0], 10);
        let zero = total_loss(&a, &a, &LossWeights::SOYBEAN).unwrap();
        assert_eq!(zero.total, 0.0);
        let mut b = a.clone();
        b.depth_hist = vec![0.0, 1.0, 0.0];
        assert_eq!(total_loss(&a, &b, &LossWeights::DEPTH_ONLY).unwrap().total, 2.0);
        let mut c = a.clone();
        c.config = StatsConfig::maize(5.0);
        assert!(total_loss(&a, &c, &LossWeights::SOYBEAN).is_err());
        let mut c = a.clone();
        c.mask_area = 30;
        let l = total_loss(&a, &c, &LossWeights::SOYBEAN).unwrap();
        assert!((l.mask - 0.04).abs() < 1e-15);
    }

    #[test]
    fn stats_roundtrip_json() {
        let cam = PinholeCamera::looking_down(1.0).with_resolution(32, 24);
        let (d, m) = map(32, 24, |x, y| (x > 8 && y > 5).then_some(0.6 + 0.01 * x as f32));
        let s = compute_stats(&d, &m, &cam, &StatsConfig::soybean(1.0)).unwrap();
        let back: HistogramSet = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    fn hist(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            if s > 0.0 { v.iter().map(|x| x / s).collect() } else { v }
        })
    }

    proptest! {
        #[test]
        fn loss_matches_naive_sum_and_is_symmetric(
            d1 in hist(20), d2 in hist(20), l1 in hist(10), l2 in hist(10), s1 in hist(10), s2 in hist(10),
            m1 in 0usize..100, m2 in 0usize..100, wl in 0.0f64..5.0, ws in 0.0f64..5.0, wm in 0.0f64..5.0,
        ) {
            let a = set(d1.clone(), l1.clone(), s1.clone(), m1);
            let b = set(d2.clone(), l2.clone(), s2.clone(), m2);
            let w = LossWeights { lateral: wl, sobel: ws, mask: wm };
            let ab = total_loss(&a, &b, &w).unwrap();
            let ba = total_loss(&b, &a, &w).unwrap();
            prop_assert_eq!(ab.total, ba.total);
            let mut naive = 0.0;
            for i in 0..20 { naive += (d1[i] - d2[i]).powi(2); }
            for i in 0..10 { naive += wl * (l1[i] - l2[i]).powi(2); }
            for i in 0..10 { naive += ws * (s1[i] - s2[i]).powi(2); }
            naive += wm * ((m1 as f64 - m2 as f64) / 100.0).powi(2);
            prop_assert!((ab.total - naive).abs() < 1e-12);
            prop_assert!(ab.depth <= 2.0 && ab.lateral <= 2.0 && ab.sobel <= 2.0);
            prop_assert!(ab.total >= 0.0);
        }

        #[test]
        fn histograms_permutation_invariant(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (w, h) = (24, 18);
            let cam = PinholeCamera::looking_down(1.0).with_resolution(w, h);
            let cfg = StatsConfig::soybean(1.0);
            let mut d = DepthMap::empty(w, h);
            let mut m = ForegroundMask::empty(w, h);
            for i in 0..w * h {
                if rng.random_bool(0.5) {
                    m.data[i] = true;
                    d.data[i] = rng.random_range(-0.2f32..1.4);
                }
            }
            let dh = depth_histogram(&d, &m, &cfg.depth);
            prop_assert!(dh.iter().all(|&x| x >= 0.0));
            prop_assert!((dh.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            // permute pixels
            let mut idx: Vec<usize> = (0..w * h).collect();
            for i in (1..idx.len()).rev() {
                idx.swap(i, rng.random_range(0..=i));
            }
            let mut d2 = DepthMap::empty(w, h);
            let mut m2 = ForegroundMask::empty(w, h);
            for (j, &i) in idx.iter().enumerate() {
                d2.data[j] = d.data[i];
                m2.data[j] = m.data[i];
            }
            prop_assert_eq!(dh, depth_histogram(&d2, &m2, &cfg.depth));

            // lateral offset depends only on image row and depth
            let lh = lateral_histogram(&d, &m, &cam, &cfg.lateral);
            let mut d3 = d.clone();
            let mut m3 = m.clone();
            for r in 0..h {
                let mut cols: Vec<usize> = (0..w).collect();
                for i in (1..w).rev() {
                    cols.swap(i, rng.random_range(0..=i));
                }
                for (c, &src) in cols.iter().enumerate() {
                    d3.data[r * w + c] = d.data[r * w + src];
                    m3.data[r * w + c] = m.data[r * w + src];
                }
            }
            prop_assert_eq!(lh, lateral_histogram(&d3, &m3, &cam, &cfg.lateral));
        }

        #[test]
        fn sobel_invariant_to_translation(seed in 0u64..200, dx in 0usize..6, dy in 0usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (w, h, pad) = (48, 40, 12);
            let spec = HistogramSpec { bins: 10, lower: 0.0, upper: 0.004 };
            let patch: Vec<Option<f32>> = (0..100)
                .map(|_| rng.random_bool(0.6).then(|| rng.random_range(0.8f32..0.99)))
                .collect();
            let place = |ox: usize, oy: usize| {
                map(w, h, |x, y| {
                    let (px, py) = (x.wrapping_sub(ox), y.wrapping_sub(oy));
                    if px < 10 && py < 10 { patch[py * 10 + px] } else { None }
                })
            };
            let (d1, m1) = place(pad, pad);
            let (d2, m2) = place(pad + dx, pad + dy);
            let s = sigma_for_kernel(5);
            let h1 = sobel_histogram(&d1, &m1, &spec, 5, s, 1.0).unwrap();
            let h2 = sobel_histogram(&d2, &m2, &spec, 5, s, 1.0).unwrap();
            prop_assert_eq!(h1, h2);
        }
    }
}
