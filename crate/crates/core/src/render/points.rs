use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{LabeledMesh, OrganClass};
use crate::rng::RandomSeed;

/// 3D points in meters with optional per-point RGB.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    pub colors: Option<Vec<[u8; 3]>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>, colors: Option<Vec<[u8; 3]>>) -> Result<Self> {
        if let Some(c) = &colors {
            if c.len() != points.len() {
                return Err(Error::domain(format!(
                    "{} colors for {} points",
                    c.len(),
                    points.len()
                )));
            }
        }
        Ok(PointCloud { points, colors })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Subset by index, keeping colors aligned.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }

    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> PointCloud {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        self.select(&idx)
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.is_empty() {
            return None;
        }
        let sum = self.points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.len() as f64))
    }

    pub fn extend(&mut self, other: &PointCloud) {
        let had_colors = self.colors.is_some() || self.is_empty();
        self.points.extend_from_slice(&other.points);
        match (&mut self.colors, &other.colors) {
            (Some(a), Some(b)) => a.extend_from_slice(b),
            (None, Some(b)) if had_colors => self.colors = Some(b.clone()),
            _ => self.colors = None,
        }
    }
}

/// Display color per organ class, plus ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrganColors {
    pub leaf: [u8; 3],
    pub stem: [u8; 3],
    pub petiole: [u8; 3],
    pub ground: [u8; 3],
}

impl Default for OrganColors {
    fn default() -> Self {
        OrganColors {
            leaf: [58, 125, 44],
            stem: [96, 140, 60],
            petiole: [88, 150, 52],
            ground: [120, 85, 60],
        }
    }
}

impl OrganColors {
    pub fn for_class(&self, c: OrganClass) -> [u8; 3] {
        match c {
            OrganClass::Leaf => self.leaf,
            OrganClass::Stem => self.stem,
            OrganClass::Petiole => self.petiole,
        }
    }
}

/// Axis-aligned rectangle on z = `z`, sampled as two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundQuad {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub z: f64,
}

impl GroundQuad {
    fn triangles(&self) -> [[Point3<f64>; 3]; 2] {
        let [x0, y0] = self.min;
        let [x1, y1] = self.max;
        let p = |x, y| Point3::new(x, y, self.z);
        [
            [p(x0, y0), p(x1, y0), p(x1, y1)],
            [p(x0, y0), p(x1, y1), p(x0, y1)],
        ]
    }
}

/// Draw `n` points uniformly by area over the mesh faces (and the ground
/// quad, if given), colored by organ class.
pub fn sample_surface_points(
    mesh: &LabeledMesh,
    n: usize,
    seed: RandomSeed,
    colors: &OrganColors,
    ground: Option<&GroundQuad>,
) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::domain("sample count must be positive"));
    }
    if mesh.is_empty() && ground.is_none() {
        return Err(Error::domain("cannot sample an empty mesh"));
    }
    let mut tris: Vec<([Point3<f64>; 3], [u8; 3])> = (0..mesh.num_faces())
        .map(|f| (mesh.triangle(f), colors.for_class(mesh.face_labels[f].class)))
        .collect();
    if let Some(g) = ground {
        tris.extend(g.triangles().into_iter().map(|t| (t, colors.ground)));
    }
    let mut cumulative = Vec::with_capacity(tris.len());
    let mut total = 0.0;
    for (t, _) in &tris {
        total += crate::mesh::triangle_area(&t[0], &t[1], &t[2]);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::domain("mesh has zero surface area"));
    }
    let mut rng = seed.rng();
    let mut points = Vec::with_capacity(n);
    let mut cols = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        let k = cumulative.partition_point(|&c| c <= target).min(tris.len() - 1);
        let ([a, b, c], color) = tris[k];
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        let p = a.coords * (1.0 - s) + b.coords * (s * (1.0 - r2)) + c.coords * (s * r2);
        points.push(Point3::from(p));
        cols.push(color);
    }
    Ok(PointCloud {
        points,
        colors: Some(cols),
    })
}

/// Replace the points of every occupied voxel by their centroid (colors averaged).
/// Output is ordered by voxel index.
pub fn voxel_downsample(cloud: &PointCloud, voxel_size: f64) -> Result<PointCloud> {
    if !(voxel_size > 0.0) {
        return Err(Error::domain("voxel size must be positive"));
    }
    let mut voxels: BTreeMap<[i64; 3], (Vector3<f64>, [u64; 3], usize)> = BTreeMap::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let key = [
            (p.x / voxel_size).floor() as i64,
            (p.y / voxel_size).floor() as i64,
            (p.z / voxel_size).floor() as i64,
        ];
        let e = voxels.entry(key).or_insert((Vector3::zeros(), [0; 3], 0));
        e.0 += p.coords;
        if let Some(c) = &cloud.colors {
            for k in 0..3 {
                e.1[k] += u64::from(c[i][k]);
            }
        }
        e.2 += 1;
    }
    let mut points = Vec::with_capacity(voxels.len());
    let mut colors = Vec::with_capacity(voxels.len());
    for (sum, csum, count) in voxels.into_values() {
        points.push(Point3::from(sum / count as f64));
        let n = count as u64;
        colors.push([
            ((csum[0] + n / 2) / n) as u8,
            ((csum[1] + n / 2) / n) as u8,
            ((csum[2] + n / 2) / n) as u8,
        ]);
    }
    Ok(PointCloud {
        points,
        colors: cloud.colors.as_ref().map(|_| colors),
    })
}
