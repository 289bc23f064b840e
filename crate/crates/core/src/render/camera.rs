use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WIDTH: usize = 994;
pub const DEFAULT_HEIGHT: usize = 738;
pub const DEFAULT_VFOV_DEG: f64 = 50.0;

/// Pinhole camera. `rotation` maps world directions into the camera frame
/// (rows are the camera x, y and optical axes in world coordinates); image
/// x grows with camera x, image rows grow with camera y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraRecord", into = "CameraRecord")]
pub struct PinholeCamera {
    pub center: Point3<f64>,
    pub rotation: Matrix3<f64>,
    pub width: usize,
    pub height: usize,
    pub vfov_deg: f64,
}

/// JSON form: rotation is 3x3 row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CameraRecord {
    center: [f64; 3],
    rotation: [[f64; 3]; 3],
    width: usize,
    height: usize,
    vfov_deg: f64,
}

impl From<PinholeCamera> for CameraRecord {
    fn from(c: PinholeCamera) -> Self {
        let r = &c.rotation;
        CameraRecord {
            center: [c.center.x, c.center.y, c.center.z],
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            width: c.width,
            height: c.height,
            vfov_deg: c.vfov_deg,
        }
    }
}

impl TryFrom<CameraRecord> for PinholeCamera {
    type Error = Error;

    fn try_from(r: CameraRecord) -> Result<Self> {
        let rot = Matrix3::from_fn(|i, j| r.rotation[i][j]);
        let cam = PinholeCamera {
            center: Point3::from(r.center),
            rotation: rot,
            width: r.width,
            height: r.height,
            vfov_deg: r.vfov_deg,
        };
        cam.validate()?;
        Ok(cam)
    }
}

impl PinholeCamera {
    /// Camera at `height` above the origin looking straight down, image x along world +x.
    pub fn looking_down(height: f64) -> Self {
        Self::looking_down_at(Point3::new(0.0, 0.0, height))
    }

    pub fn looking_down_at(center: Point3<f64>) -> Self {
        Self::from_axes(center, Vector3::x(), -Vector3::z())
            .expect("axis-aligned frame is valid")
    }

    /// Build from a camera x-axis and optical axis (both in world coordinates).
    /// `x_axis` is orthogonalized against the optical axis.
    pub fn from_axes(center: Point3<f64>, x_axis: Vector3<f64>, optical: Vector3<f64>) -> Result<Self> {
        let z = optical
            .try_normalize(1e-12)
            .ok_or_else(|| Error::domain("optical axis is zero"))?;
        let x = (x_axis - z * z.dot(&x_axis))
            .try_normalize(1e-12)
            .ok_or_else(|| Error::domain("camera x-axis is parallel to the optical axis"))?;
        let y = z.cross(&x);
        Ok(PinholeCamera {
            center,
            rotation: Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]),
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            vfov_deg: DEFAULT_VFOV_DEG,
        })
    }

    pub fn with_resolution(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn with_vfov(mut self, vfov_deg: f64) -> Self {
        self.vfov_deg = vfov_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::domain("camera resolution must be positive"));
        }
        if !(self.vfov_deg > 0.0 && self.vfov_deg < 180.0) {
            return Err(Error::domain(format!("vertical fov {} outside (0, 180)", self.vfov_deg)));
        }
        let orth = self.rotation * self.rotation.transpose() - Matrix3::identity();
        if orth.abs().max() > 1e-6 || (self.rotation.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::domain("camera rotation is not a proper rotation"));
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        0.5 * self.height as f64 / (0.5 * self.vfov_deg.to_radians()).tan()
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (0.5 * self.width as f64, 0.5 * self.height as f64)
    }

    pub fn x_axis(&self) -> Vector3<f64> {
        self.rotation.row(0).transpose()
    }

    pub fn y_axis(&self) -> Vector3<f64> {
        self.rotation.row(1).transpose()
    }

    pub fn optical_axis(&self) -> Vector3<f64> {
        self.rotation.row(2).transpose()
    }

    pub fn world_to_camera(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.rotation * (p - self.center)
    }

    pub fn camera_to_world(&self, v: &Vector3<f64>) -> Point3<f64> {
        self.center + self.rotation.transpose() * v
    }

    /// Continuous image coordinates (pixel centers at +0.5) and z-depth.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64, f64)> {
        let c = self.world_to_camera(p);
        if c.z <= 0.0 {
            return None;
        }
        let f = self.focal();
        let (cx, cy) = self.principal_point();
        Some((f * c.x / c.z + cx, f * c.y / c.z + cy, c.z))
    }

    /// Camera-frame point at z-depth `depth` behind the center of pixel (col, row).
    pub fn pixel_point_camera(&self, col: usize, row: usize, depth: f64) -> Vector3<f64> {
        let f = self.focal();
        let (cx, cy) = self.principal_point();
        Vector3::new(
            (col as f64 + 0.5 - cx) * depth / f,
            (row as f64 + 0.5 - cy) * depth / f,
            depth,
        )
    }

    pub fn unproject_pixel(&self, col: usize, row: usize, depth: f64) -> Point3<f64> {
        self.camera_to_world(&self.pixel_point_camera(col, row, depth))
    }
}

impl Default for PinholeCamera {
    fn default() -> Self {
        Self::looking_down(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PinholeCamera::default();
        assert_eq!((c.width, c.height, c.vfov_deg), (994, 738, 50.0));
        assert_eq!(c.optical_axis(), -Vector3::z());
        c.validate().unwrap();
    }

    #[test]
    fn project_unproject_round_trip() {
        let c = PinholeCamera::looking_down(1.0);
        let p = c.unproject_pixel(100, 200, 0.7);
        let (u, v, d) = c.project(&p).unwrap();
        assert!((u - 100.5).abs() < 1e-9 && (v - 200.5).abs() < 1e-9 && (d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let c = PinholeCamera::from_axes(Point3::new(1.0, 2.0, 3.0), Vector3::new(1.0, 1.0, 0.0), -Vector3::z())
            .unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: PinholeCamera = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let bad = json.replace("\"vfov_deg\":50.0", "\"vfov_deg\":190.0");
        assert!(serde_json::from_str::<PinholeCamera>(&bad).is_err());
    }
}
