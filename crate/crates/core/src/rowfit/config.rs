use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::color::LabNormalization;
use crate::error::{Error, Result};
use crate::morphology::Species;
use crate::render::{DEFAULT_HEIGHT, DEFAULT_VFOV_DEG, DEFAULT_WIDTH};

/// Axis-aligned sampling box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub center: [f64; 3],
    pub size: [f64; 3],
}

impl SampleBox {
    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|k| (p[k] - self.center[k]).abs() <= 0.5 * self.size[k])
    }

    pub fn center_point(&self) -> Point3<f64> {
        Point3::from(self.center)
    }
}

/// Color thresholds in normalized Lab. Points with `L' < drop_l` and
/// `b' < drop_b` are discarded; the rest are ground when `a' < ground_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabThresholds {
    pub drop_l: f64,
    pub drop_b: f64,
    pub ground_a: f64,
}

/// Settings swapped in when the plant fraction of the segmented cloud is high.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseCanopyOverride {
    pub slice_percentile: f64,
    pub row_inlier: f64,
    pub render_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFitConfig {
    pub sample_box: SampleBox,
    pub sample_count: usize,
    pub voxel_size: f64,
    pub lab: LabNormalization,
    pub lab_thresholds: LabThresholds,
    pub plane_inlier: f64,
    pub plane_max_iters: usize,
    pub slice_percentile: f64,
    pub row_inlier: f64,
    pub row_max_iters: usize,
    pub row_stop_min_points: usize,
    pub row_stop_fraction: f64,
    pub render_height: f64,
    pub dense_fraction_trigger: f64,
    pub dense: DenseCanopyOverride,
    /// Radius of a cylindrical region of interest (axis along the plane
    /// normal through the sample-box center) applied before row fitting.
    #[serde(default)]
    pub roi_radius: Option<f64>,
    pub width: usize,
    pub height: usize,
    pub vfov_deg: f64,
}

impl RowFitConfig {
    pub fn soybean() -> Self {
        RowFitConfig {
            sample_box: SampleBox {
                center: [0.0, 0.0, -1.5],
                size: [2.0, 2.0, 3.0],
            },
            sample_count: 100_000,
            voxel_size: 0.01,
            lab: LabNormalization::SOYBEAN,
            lab_thresholds: LabThresholds {
                drop_l: 0.0,
                drop_b: 1.0,
                ground_a: 2.0,
            },
            plane_inlier: 0.05,
            plane_max_iters: 1000,
            slice_percentile: 50.0,
            row_inlier: 0.20,
            row_max_iters: 1000,
            row_stop_min_points: 1000,
            row_stop_fraction: 0.20,
            render_height: 1.0,
            dense_fraction_trigger: 0.75,
            dense: DenseCanopyOverride {
                slice_percentile: 70.0,
                row_inlier: 0.25,
                render_height: 1.25,
            },
            roi_radius: None,
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            vfov_deg: DEFAULT_VFOV_DEG,
        }
    }

    pub fn maize() -> Self {
        RowFitConfig {
            sample_box: SampleBox {
                center: [0.0, 0.0, 0.0],
                size: [2.0, 2.0, 2.0],
            },
            sample_count: 5_000_000,
            lab: LabNormalization::MAIZE,
            lab_thresholds: LabThresholds {
                drop_l: 32.0,
                drop_b: 0.0,
                ground_a: 0.0,
            },
            plane_inlier: 0.10,
            render_height: 5.0,
            roi_radius: Some(2.0),
            ..Self::soybean()
        }
    }

    pub fn preset(species: Species) -> Self {
        match species {
            Species::Soybean => Self::soybean(),
            Species::Maize => Self::maize(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("voxel_size", self.voxel_size),
            ("plane_inlier", self.plane_inlier),
            ("row_inlier", self.row_inlier),
            ("render_height", self.render_height),
            ("dense.row_inlier", self.dense.row_inlier),
            ("dense.render_height", self.dense.render_height),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::config(format!("`{name}` must be positive")));
            }
        }
        for (name, p) in [
            ("slice_percentile", self.slice_percentile),
            ("dense.slice_percentile", self.dense.slice_percentile),
        ] {
            if !(p > 0.0 && p < 100.0) {
                return Err(Error::config(format!("`{name}` must lie in (0, 100)")));
            }
        }
        if self.sample_box.size.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::config("sample box size must be positive"));
        }
        if self.plane_max_iters == 0 || self.row_max_iters == 0 || self.sample_count == 0 {
            return Err(Error::config("iteration and sample counts must be positive"));
        }
        if !(0.0..=1.0).contains(&self.row_stop_fraction) {
            return Err(Error::config("`row_stop_fraction` must lie in [0, 1]"));
        }
        if let Some(r) = self.roi_radius {
            if !(r > 0.0) {
                return Err(Error::config("`roi_radius` must be positive"));
            }
        }
        Ok(())
    }

    /// In-plane distance from the ROI axis.
    pub(crate) fn roi_distance(&self, p: &Point3<f64>, normal: &Vector3<f64>) -> f64 {
        let d = p - self.sample_box.center_point();
        (d - normal * normal.dot(&d)).norm()
    }
}

impl Default for RowFitConfig {
    fn default() -> Self {
        Self::soybean()
    }
}
