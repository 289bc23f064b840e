//! Z-buffer rasterization of labeled meshes.
//!
//! Pixels are sampled at their centers without antialiasing. Faces are
//! visible from both sides; at equal depth the lower face index wins.
//! The z-buffer stores inverse depth, which is affine in screen space.
//! The image is split into horizontal bands rendered in parallel; each band
//! walks its triangles in face order, so the result does not depend on
//! scheduling.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::camera::PinholeCamera;
use super::depth::{DepthMap, ForegroundMask};
use super::PointCloud;
use crate::mesh::LabeledMesh;

/// Near clipping distance in meters.
pub const NEAR_PLANE: f64 = 1e-3;
const BAND_ROWS: usize = 16;

#[derive(Clone, Copy)]
struct ScreenVertex {
    x: f64,
    y: f64,
    inv_z: f64,
}

struct ScreenTriangle {
    v: [ScreenVertex; 3],
    row_min: usize,
    row_max: usize,
    col_min: usize,
    col_max: usize,
}

/// Render z-depth and foreground mask of `mesh` through `camera`.
pub fn render_depth(mesh: &LabeledMesh, camera: &PinholeCamera) -> (DepthMap, ForegroundMask) {
    let (w, h) = (camera.width, camera.height);
    let cam_verts: Vec<Vector3<f64>> = mesh
        .vertices
        .par_iter()
        .map(|v| camera.world_to_camera(v))
        .collect();
    let f = camera.focal();
    let (cx, cy) = camera.principal_point();
    let project = |c: &Vector3<f64>| ScreenVertex {
        x: f * c.x / c.z + cx,
        y: f * c.y / c.z + cy,
        inv_z: 1.0 / c.z,
    };

    let tris: Vec<ScreenTriangle> = mesh
        .triangles
        .par_iter()
        .flat_map_iter(|t| {
            let poly = clip_near([
                cam_verts[t[0] as usize],
                cam_verts[t[1] as usize],
                cam_verts[t[2] as usize],
            ]);
            let mut out = Vec::new();
            for k in 1..poly.len().saturating_sub(1) {
                let v = [project(&poly[0]), project(&poly[k]), project(&poly[k + 1])];
                if let Some(st) = screen_bounds(v, w, h) {
                    out.push(st);
                }
            }
            out
        })
        .collect();

    let n_bands = h.div_ceil(BAND_ROWS);
    let mut band_lists: Vec<Vec<u32>> = vec![Vec::new(); n_bands];
    for (i, t) in tris.iter().enumerate() {
        for list in &mut band_lists[t.row_min / BAND_ROWS..=t.row_max / BAND_ROWS] {
            list.push(i as u32);
        }
    }

    // buffer holds 1/z; 0 means nothing hit
    let mut depth = vec![0.0f64; w * h];
    depth
        .par_chunks_mut(BAND_ROWS * w)
        .zip(band_lists.par_iter())
        .enumerate()
        .for_each(|(band, (buf, list))| {
            let row0 = band * BAND_ROWS;
            let row1 = (row0 + BAND_ROWS).min(h) - 1;
            for &ti in list {
                rasterize(&tris[ti as usize], row0, row1, w, buf);
            }
        });

    let data: Vec<f32> = depth
        .iter()
        .map(|&iz| if iz > 0.0 { (1.0 / iz) as f32 } else { f32::NAN })
        .collect();
    let mask = ForegroundMask {
        width: w,
        height: h,
        data: data.iter().map(|d| d.is_finite()).collect(),
    };
    (DepthMap { width: w, height: h, data }, mask)
}

/// Clip a camera-space triangle against z >= NEAR_PLANE.
fn clip_near(tri: [Vector3<f64>; 3]) -> Vec<Vector3<f64>> {
    if tri.iter().all(|v| v.z >= NEAR_PLANE) {
        return tri.to_vec();
    }
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let a_in = a.z >= NEAR_PLANE;
        let b_in = b.z >= NEAR_PLANE;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (NEAR_PLANE - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * t;
            p.z = NEAR_PLANE;
            out.push(p);
        }
    }
    out
}

fn screen_bounds(v: [ScreenVertex; 3], w: usize, h: usize) -> Option<ScreenTriangle> {
    let area = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
    if area == 0.0 || !area.is_finite() {
        return None;
    }
    let min_x = v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let max_x = v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let max_y = v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    // Pixel i is sampled at i + 0.5.
    let col_min = (min_x - 0.5).ceil().max(0.0);
    let col_max = (max_x - 0.5).floor().min(w as f64 - 1.0);
    let row_min = (min_y - 0.5).ceil().max(0.0);
    let row_max = (max_y - 0.5).floor().min(h as f64 - 1.0);
    if col_min > col_max || row_min > row_max {
        return None;
    }
    Some(ScreenTriangle {
        v,
        row_min: row_min as usize,
        row_max: row_max as usize,
        col_min: col_min as usize,
        col_max: col_max as usize,
    })
}

fn rasterize(t: &ScreenTriangle, band_row0: usize, band_row1: usize, w: usize, buf: &mut [f64]) {
    let [a, b, c] = t.v;
    let area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    let inv_area = 1.0 / area;
    let r0 = t.row_min.max(band_row0);
    let r1 = t.row_max.min(band_row1);
    for row in r0..=r1 {
        let py = row as f64 + 0.5;
        let line = &mut buf[(row - band_row0) * w..(row - band_row0 + 1) * w];
        let Some((lo, hi)) = row_span(&t.v, py, inv_area, t.col_min, t.col_max) else {
            continue;
        };
        // barycentrics are affine in px: w = a * px + b
        let (a0, b0) = edge(b, c, py, inv_area);
        let (a1, b1) = edge(c, a, py, inv_area);
        for col in lo..=hi {
            let px = col as f64 + 0.5;
            let w0 = a0 * px + b0;
            let w1 = a1 * px + b1;
            let w2 = 1.0 - w0 - w1;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            let inv_z = w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z;
            if inv_z > line[col] {
                line[col] = inv_z;
            }
        }
    }
}

/// Project points to their nearest pixel, keeping the smallest depth per pixel.
pub fn splat_points(cloud: &PointCloud, camera: &PinholeCamera) -> (DepthMap, ForegroundMask) {
    let mut depth = DepthMap::empty(camera.width, camera.height);
    for p in &cloud.points {
        if let Some((u, v, z)) = camera.project(p) {
            if z < NEAR_PLANE || u < 0.0 || v < 0.0 {
                continue;
            }
            let (col, row) = (u.floor() as usize, v.floor() as usize);
            if col >= camera.width || row >= camera.height {
                continue;
            }
            let cur = depth.get(col, row);
            if !(cur <= z as f32) {
                depth.set(col, row, z as f32);
            }
        }
    }
    let mask = depth.finite_mask();
    (depth, mask)
}

/// One world-space point per foreground pixel.
pub fn unproject(depth: &DepthMap, mask: Option<&ForegroundMask>, camera: &PinholeCamera) -> PointCloud {
    let mut points = Vec::new();
    for row in 0..depth.height {
        for col in 0..depth.width {
            let d = depth.get(col, row);
            let fg = mask.map_or(true, |m| m.get(col, row));
            if fg && d.is_finite() && d > 0.0 {
                points.push(camera.unproject_pixel(col, row, f64::from(d)));
            }
        }
    }
    PointCloud { points, colors: None }
}


/// Column range that may contain covered pixel centers on a row, widened by one pixel
/// so the exact per-pixel test remains the only coverage decision.
fn row_span(v: &[ScreenVertex; 3], py: f64, inv_area: f64, col_min: usize, col_max: usize) -> Option<(usize, usize)> {
    let mut lo = col_min as f64;
    let mut hi = col_max as f64;
    for (p, q) in [(v[1], v[2]), (v[2], v[0]), (v[0], v[1])] {
        let (a, b) = edge(p, q, py, inv_area);
        if a > 0.0 {
            lo = lo.max((-b / a - 0.5).floor() - 1.0);
        } else if a < 0.0 {
            hi = hi.min((-b / a - 0.5).ceil() + 1.0);
        } else if b < -1e-12 {
            return None;
        }
    }
    if !(lo <= hi) {
        return None;
    }
    Some((lo.max(col_min as f64) as usize, hi.min(col_max as f64) as usize))
}

/// Normalized edge function of (p, q) on row `py` as `a * px + b`.
#[inline]
fn edge(p: ScreenVertex, q: ScreenVertex, py: f64, inv_area: f64) -> (f64, f64) {
    ((p.y - q.y) * inv_area, (p.x * (q.y - py) - q.x * (p.y - py)) * inv_area)
}
