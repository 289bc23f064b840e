use crate::error::{Error, Result};
use crate::io::{decode_cdm, decode_pgm, decode_ppm, read_file, read_json, RgbImage};
use crate::loss::{compute_stats, HistogramSet, StatsConfig};
use crate::mesh::LabeledMesh;
use crate::morphology::{build_canopy, CanopyLayout, MorphologyProfile, PlantParams};
use crate::render::{render_depth, DepthMap, ForegroundMask, PinholeCamera};
use crate::rng::RandomSeed;

use super::config::{MaskThresholds, ObservationSource, SceneConfig};

/// Observed depth, its mask and camera, and the statistics computed from them.
#[derive(Debug, Clone)]
pub struct Observation {
    pub depth: DepthMap,
    pub mask: ForegroundMask,
    pub camera: PinholeCamera,
    pub stats: HistogramSet,
    /// Hidden canopy, for synthetic observations.
    pub hidden: Option<HiddenScene>,
}

#[derive(Debug, Clone)]
pub struct HiddenScene {
    pub params: PlantParams,
    pub layout: CanopyLayout,
    pub mesh: LabeledMesh,
}

/// Seed lineage of the synthetic observation, kept apart from the optimizer's.
pub fn oracle_seed(seed: RandomSeed) -> RandomSeed {
    seed.derive_named("oracle")
}

/// Foreground mask of an observed depth map from its color render and coordinate rules.
pub fn threshold_mask(
    depth: &DepthMap,
    rgb: &RgbImage,
    camera: &PinholeCamera,
    thr: &MaskThresholds,
    render_height: f64,
) -> Result<ForegroundMask> {
    if rgb.width != depth.width || rgb.height != depth.height {
        return Err(Error::Data(format!(
            "color render is {}x{}, depth is {}x{}",
            rgb.width, rgb.height, depth.width, depth.height
        )));
    }
    let w = depth.width;
    let data = depth
        .data
        .iter()
        .zip(&rgb.data)
        .enumerate()
        .map(|(i, (&d, &c))| {
            let d = d as f64;
            if !(d.is_finite() && d > 0.0) {
                return false;
            }
            let lab = thr.normalization.convert(c);
            let colored_ground =
                lab[1] < thr.a_below && thr.l_above.is_none_or(|l| lab[0] > l) && d > render_height - thr.ground_margin;
            let y = camera.pixel_point_camera(i % w, i / w, d).y;
            !(colored_ground || d < thr.min_depth || y.abs() >= thr.max_abs_y)
        })
        .collect();
    Ok(ForegroundMask { width: depth.width, height: depth.height, data })
}

pub fn synthetic_observation(
    params: &PlantParams,
    layout: &CanopyLayout,
    profile: &MorphologyProfile,
    seed: RandomSeed,
    camera: &PinholeCamera,
    stats: &StatsConfig,
) -> Result<Observation> {
    let mesh = build_canopy(params, layout, profile, oracle_seed(seed))?;
    let (depth, mask) = render_depth(&mesh, camera);
    let stats = compute_stats(&depth, &mask, camera, stats)?;
    Ok(Observation {
        depth,
        mask,
        camera: camera.clone(),
        stats,
        hidden: Some(HiddenScene { params: params.clone(), layout: *layout, mesh }),
    })
}

/// Loads or synthesizes the observation described by `cfg` and computes its statistics.
pub fn load_observation(cfg: &SceneConfig, profile: &MorphologyProfile) -> Result<Observation> {
    let stats_cfg = cfg.stats_config();
    match &cfg.observation {
        ObservationSource::Synthetic { values, layout, seed } => {
            let params = PlantParams::from_slice(cfg.species, values)?;
            synthetic_observation(&params, &layout.unwrap_or(cfg.layout), profile, *seed, &cfg.render.camera(), &stats_cfg)
        }
        ObservationSource::Files { depth, camera, mask, rgb } => {
            let depth_map = decode_cdm(&read_file(depth)?)?;
            let camera: PinholeCamera = read_json(camera)?;
            if camera.width != depth_map.width || camera.height != depth_map.height {
                return Err(Error::Data(format!(
                    "camera is {}x{}, depth is {}x{}",
                    camera.width, camera.height, depth_map.width, depth_map.height
                )));
            }
            let mut m = match (mask, rgb) {
                (Some(p), _) => decode_pgm(&read_file(p)?)?,
                (None, Some(p)) => threshold_mask(
                    &depth_map,
                    &decode_ppm(&read_file(p)?)?,
                    &camera,
                    &cfg.mask_thresholds,
                    cfg.render.render_height,
                )?,
                (None, None) => depth_map.finite_mask(),
            };
            if !m.same_shape(&depth_map) {
                return Err(Error::Data(format!(
                    "mask is {}x{}, depth is {}x{}",
                    m.width, m.height, depth_map.width, depth_map.height
                )));
            }
            // a mask never claims pixels without a usable depth
            for (f, d) in m.data.iter_mut().zip(&depth_map.data) {
                *f &= d.is_finite() && *d > 0.0;
            }
            let stats = compute_stats(&depth_map, &m, &camera, &stats_cfg)?;
            Ok(Observation { depth: depth_map, mask: m, camera, stats, hidden: None })
        }
    }
}
