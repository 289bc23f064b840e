//! Ground/plant segmentation, ground-plane and row fitting, and the
//! standardized row-aligned render camera.

mod color;
mod config;
mod ransac;

pub use color::{rgb_to_lab, LabNormalization};
pub use config::{DenseCanopyOverride, LabThresholds, RowFitConfig, SampleBox};
pub use ransac::{
    fit_rows, fit_rows_on, percentile, ransac_plane, upper_slice, LineModel, PlaneFit, PlaneModel,
    RowSearch,
};

use nalgebra::Vector3;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::{voxel_downsample, PinholeCamera, PointCloud};
use crate::rng::RandomSeed;

/// Split a colored cloud into (ground, plant) by normalized-Lab thresholds.
pub fn segment_cloud(cloud: &PointCloud, cfg: &RowFitConfig) -> Result<(PointCloud, PointCloud)> {
    let colors = cloud
        .colors
        .as_ref()
        .ok_or_else(|| Error::Data("point cloud has no red/green/blue color properties".into()))?;
    let t = &cfg.lab_thresholds;
    let mut ground = Vec::new();
    let mut plant = Vec::new();
    for (i, &rgb) in colors.iter().enumerate() {
        let [l, a, b] = cfg.lab.convert(rgb);
        if l < t.drop_l && b < t.drop_b {
            continue;
        }
        if a < t.ground_a {
            ground.push(i);
        } else {
            plant.push(i);
        }
    }
    Ok((cloud.select(&ground), cloud.select(&plant)))
}

/// Downward camera `height` above the ground projection of the row's inlier
/// mean, with image x along the row (sign chosen toward world +x).
pub fn standardized_camera(
    plane: &PlaneModel,
    row: &LineModel,
    height: f64,
    width: usize,
    image_height: usize,
    vfov_deg: f64,
) -> Result<PinholeCamera> {
    let mut dir = row.direction;
    if dir.x < 0.0 || (dir.x == 0.0 && dir.y < 0.0) {
        dir = -dir;
    }
    let center = plane.project(&row.inlier_mean) + plane.normal * height;
    Ok(PinholeCamera::from_axes(center, dir, -plane.normal)?
        .with_resolution(width, image_height)
        .with_vfov(vfov_deg))
}

/// Outcome of a full row-fitting pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowFitReport {
    pub camera: PinholeCamera,
    pub plane: PlaneModel,
    pub plane_rms_residual: f64,
    pub ground_points: usize,
    pub plant_points: usize,
    pub dense_canopy: bool,
    pub render_height: f64,
    pub rows: Vec<RowSummary>,
    pub best_row: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowSummary {
    pub point: [f64; 3],
    pub direction: [f64; 3],
    pub inliers: usize,
}

/// Crop, subsample, voxelize, segment, fit plane and rows, emit camera.
pub fn run_rowfit(cloud: &PointCloud, cfg: &RowFitConfig, seed: RandomSeed) -> Result<RowFitReport> {
    cfg.validate()?;
    if cloud.colors.is_none() {
        return Err(Error::Data("point cloud has no red/green/blue color properties".into()));
    }
    let in_box: Vec<usize> = (0..cloud.len())
        .filter(|&i| cfg.sample_box.contains(&cloud.points[i]))
        .collect();
    let mut chosen = if in_box.len() > cfg.sample_count {
        let mut rng = seed.derive_named("subsample").rng();
        let mut pick: Vec<usize> = sample(&mut rng, in_box.len(), cfg.sample_count)
            .into_iter()
            .map(|k| in_box[k])
            .collect();
        pick.sort_unstable();
        pick
    } else {
        in_box
    };
    chosen.dedup();
    let sampled = voxel_downsample(&cloud.select(&chosen), cfg.voxel_size)?;
    let (ground, plant) = segment_cloud(&sampled, cfg)?;
    if ground.len() < 3 {
        return Err(Error::Data(format!(
            "segmentation left {} ground points; need at least 3 for the ground plane",
            ground.len()
        )));
    }
    if plant.is_empty() {
        return Err(Error::Data("segmentation left no plant points".into()));
    }
    let fit = ransac_plane(&ground.points, cfg.plane_inlier, cfg.plane_max_iters, seed.derive_named("plane"))?;
    let total = ground.len() + plant.len();
    let dense = plant.len() as f64 > cfg.dense_fraction_trigger * total as f64;
    let (pct, row_inlier, height) = if dense {
        (cfg.dense.slice_percentile, cfg.dense.row_inlier, cfg.dense.render_height)
    } else {
        (cfg.slice_percentile, cfg.row_inlier, cfg.render_height)
    };
    let search = RowSearch {
        slice_percentile: pct,
        inlier: row_inlier,
        max_iters: cfg.row_max_iters,
        stop_min_points: cfg.row_stop_min_points,
        stop_fraction: cfg.row_stop_fraction,
    };
    let mut subset = upper_slice(&plant.points, &fit.plane, pct);
    if let Some(r) = cfg.roi_radius {
        let n: Vector3<f64> = fit.plane.normal;
        subset.retain(|&i| cfg.roi_distance(&plant.points[i], &n) <= r);
    }
    let rows = fit_rows_on(&plant.points, &subset, &fit.plane, &search, seed.derive_named("rows"));
    let best_row = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.inliers.len().cmp(&b.1.inliers.len()).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Data(format!(
            "no planting rows found among {} sliced plant points",
            subset.len()
        )))?;
    let camera = standardized_camera(&fit.plane, &rows[best_row], height, cfg.width, cfg.height, cfg.vfov_deg)?;
    Ok(RowFitReport {
        camera,
        plane: fit.plane,
        plane_rms_residual: fit.rms_residual,
        ground_points: ground.len(),
        plant_points: plant.len(),
        dense_canopy: dense,
        render_height: height,
        rows: rows
            .iter()
            .map(|r| RowSummary {
                point: r.point.coords.into(),
                direction: r.direction.into(),
                inliers: r.inliers.len(),
            })
            .collect(),
        best_row,
    })
}
