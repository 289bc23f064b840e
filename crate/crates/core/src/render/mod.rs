//! Depth rendering from a pinhole camera and point-cloud conversion.

mod camera;
mod depth;
mod points;
mod raster;

pub use camera::{PinholeCamera, DEFAULT_HEIGHT, DEFAULT_VFOV_DEG, DEFAULT_WIDTH};
pub use depth::{DepthMap, ForegroundMask};
pub use points::{sample_surface_points, voxel_downsample, GroundQuad, OrganColors, PointCloud};
pub use raster::{render_depth, splat_points, unproject, NEAR_PLANE};
