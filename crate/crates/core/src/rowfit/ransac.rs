//! RANSAC ground-plane fitting and sequential in-plane row-line fitting.
//!
//! Hypotheses are drawn sequentially from the seeded generator, scored in
//! parallel, and reduced by (inlier count, hypothesis index) so results do
//! not depend on thread scheduling.

use nalgebra::{Matrix2, Matrix3, Point3, SymmetricEigen, Vector2, Vector3};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSeed;

/// Plane `normal . p + offset = 0` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneModel {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl PlaneModel {
    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) + self.offset
    }

    pub fn project(&self, p: &Point3<f64>) -> Point3<f64> {
        p - self.normal * self.signed_distance(p)
    }

    /// Orthonormal in-plane basis (e1, e2) with e1 x e2 = normal.
    pub fn basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.normal;
        let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e1 = (helper - n * n.dot(&helper)).normalize();
        let e2 = n.cross(&e1);
        (e1, e2)
    }

    /// Point of the plane closest to the origin.
    pub fn origin(&self) -> Point3<f64> {
        Point3::from(-self.normal * self.offset)
    }

    fn through(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Option<Self> {
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        let scale = (b - a).norm().max((c - a).norm());
        if !(len > 1e-12 * scale * scale) {
            return None;
        }
        let normal = n / len;
        Some(PlaneModel {
            normal,
            offset: -normal.dot(&a.coords),
        })
    }

    fn oriented_up(mut self) -> Self {
        if self.normal.z < 0.0 {
            self.normal = -self.normal;
            self.offset = -self.offset;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub plane: PlaneModel,
    pub inliers: Vec<usize>,
    /// RMS distance of the inliers to the refit plane.
    pub rms_residual: f64,
}

/// Fit a plane with RANSAC over 3-point hypotheses, then refit by least
/// squares on the winning inliers. The normal points toward +z.
pub fn ransac_plane(
    points: &[Point3<f64>],
    inlier_thresh: f64,
    max_iters: usize,
    seed: RandomSeed,
) -> Result<PlaneFit> {
    if points.len() < 3 {
        return Err(Error::domain(format!(
            "plane fitting needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut rng = seed.rng();
    let hypotheses: Vec<PlaneModel> = (0..max_iters)
        .filter_map(|_| {
            let idx = sample(&mut rng, points.len(), 3);
            PlaneModel::through(&points[idx.index(0)], &points[idx.index(1)], &points[idx.index(2)])
        })
        .collect();
    if hypotheses.is_empty() {
        return Err(Error::domain("all plane hypotheses were degenerate (colinear points)"));
    }
    let best = best_hypothesis(&hypotheses, |h| {
        points
            .iter()
            .filter(|p| h.signed_distance(p).abs() < inlier_thresh)
            .count()
    });
    let hyp = hypotheses[best];
    let inliers: Vec<usize> = (0..points.len())
        .filter(|&i| hyp.signed_distance(&points[i]).abs() < inlier_thresh)
        .collect();
    let plane = least_squares_plane(points, &inliers).unwrap_or(hyp).oriented_up();
    let rms_residual = (inliers
        .iter()
        .map(|&i| plane.signed_distance(&points[i]).powi(2))
        .sum::<f64>()
        / inliers.len() as f64)
        .sqrt();
    Ok(PlaneFit {
        plane,
        inliers,
        rms_residual,
    })
}

/// Index of the hypothesis with the most inliers; lowest index on ties.
fn best_hypothesis<H: Sync>(hyps: &[H], score: impl Fn(&H) -> usize + Sync) -> usize {
    hyps.par_iter()
        .enumerate()
        .map(|(i, h)| (score(h), i))
        .reduce(|| (0, usize::MAX), |a, b| {
            if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                a
            } else {
                b
            }
        })
        .1
}

fn least_squares_plane(points: &[Point3<f64>], idx: &[usize]) -> Option<PlaneModel> {
    if idx.len() < 3 {
        return None;
    }
    let n = idx.len() as f64;
    let mean = idx.iter().fold(Vector3::zeros(), |a, &i| a + points[i].coords) / n;
    let cov = idx.iter().fold(Matrix3::zeros(), |a, &i| {
        let d = points[i].coords - mean;
        a + d * d.transpose()
    });
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    let normal = eig.eigenvectors.column(k).normalize();
    if !normal.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(PlaneModel {
        normal,
        offset: -normal.dot(&mean),
    })
}

/// A row line lying in the ground plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineModel {
    /// Point on the line, in the ground plane.
    pub point: Point3<f64>,
    pub direction: Vector3<f64>,
    /// Indices into the plant point array given to [`fit_rows`].
    pub inliers: Vec<usize>,
    /// Mean of the inlier points (3D, above the plane).
    pub inlier_mean: Point3<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Line2 {
    point: Vector2<f64>,
    dir: Vector2<f64>,
}

impl Line2 {
    fn distance(&self, p: &Vector2<f64>) -> f64 {
        let d = p - self.point;
        (d.x * self.dir.y - d.y * self.dir.x).abs()
    }
}

/// Parameters for the sequential line search.
#[derive(Debug, Clone, Copy)]
pub struct RowSearch {
    pub slice_percentile: f64,
    pub inlier: f64,
    pub max_iters: usize,
    pub stop_min_points: usize,
    pub stop_fraction: f64,
}

/// Keep points at or above the given percentile of height over the plane.
pub fn upper_slice(points: &[Point3<f64>], plane: &PlaneModel, pct: f64) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let heights: Vec<f64> = points.iter().map(|p| plane.signed_distance(p)).collect();
    let cut = percentile(&heights, pct);
    (0..points.len()).filter(|&i| heights[i] >= cut).collect()
}

/// Linear-interpolated percentile (0..=100).
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = (pct / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Sequentially fit row lines in the ground plane to the upper slice of the
/// plant points, removing each line's inliers, until fewer than
/// `stop_min_points` or `stop_fraction` of the starting points remain.
pub fn fit_rows(
    plant_points: &[Point3<f64>],
    plane: &PlaneModel,
    search: &RowSearch,
    seed: RandomSeed,
) -> Vec<LineModel> {
    let candidates = upper_slice(plant_points, plane, search.slice_percentile);
    fit_rows_on(plant_points, &candidates, plane, search, seed)
}

/// Row fitting on a pre-selected subset (indices into `plant_points`).
pub fn fit_rows_on(
    plant_points: &[Point3<f64>],
    subset: &[usize],
    plane: &PlaneModel,
    search: &RowSearch,
    seed: RandomSeed,
) -> Vec<LineModel> {
    let (e1, e2) = plane.basis();
    let origin = plane.origin();
    let flat: Vec<Vector2<f64>> = subset
        .iter()
        .map(|&i| {
            let d = plant_points[i] - origin;
            Vector2::new(d.dot(&e1), d.dot(&e2))
        })
        .collect();

    let start = flat.len();
    let mut remaining: Vec<usize> = (0..start).collect();
    let mut lines = Vec::new();
    let mut round = 0u64;
    loop {
        let n = remaining.len();
        if n < 2 || n < search.stop_min_points || (n as f64) < search.stop_fraction * start as f64 {
            break;
        }
        let mut rng = seed.derive(round).rng();
        round += 1;
        let hyps: Vec<Line2> = (0..search.max_iters)
            .filter_map(|_| {
                let i = remaining[rng.random_range(0..n)];
                let j = remaining[rng.random_range(0..n)];
                let d = flat[j] - flat[i];
                let len = d.norm();
                (len > 1e-9).then(|| Line2 { point: flat[i], dir: d / len })
            })
            .collect();
        if hyps.is_empty() {
            break;
        }
        let best = best_hypothesis(&hyps, |h| {
            remaining
                .iter()
                .filter(|&&k| h.distance(&flat[k]) < search.inlier)
                .count()
        });
        let hyp = hyps[best];
        let (inl, rest): (Vec<usize>, Vec<usize>) = remaining
            .iter()
            .partition(|&&k| hyp.distance(&flat[k]) < search.inlier);
        remaining = rest;
        let fitted = least_squares_line(&flat, &inl).unwrap_or(hyp);
        let inliers: Vec<usize> = inl.iter().map(|&k| subset[k]).collect();
        let mean = inliers
            .iter()
            .fold(Vector3::zeros(), |a, &i| a + plant_points[i].coords)
            / inliers.len() as f64;
        lines.push(LineModel {
            point: origin + e1 * fitted.point.x + e2 * fitted.point.y,
            direction: (e1 * fitted.dir.x + e2 * fitted.dir.y).normalize(),
            inliers,
            inlier_mean: Point3::from(mean),
        });
    }
    lines
}

fn least_squares_line(pts: &[Vector2<f64>], idx: &[usize]) -> Option<Line2> {
    if idx.len() < 2 {
        return None;
    }
    let mean = idx.iter().fold(Vector2::zeros(), |a, &i| a + pts[i]) / idx.len() as f64;
    let cov = idx.iter().fold(Matrix2::zeros(), |a, &i| {
        let d = pts[i] - mean;
        a + d * d.transpose()
    });
    let eig = SymmetricEigen::new(cov);
    let dir = eig.eigenvectors.column(eig.eigenvalues.imax()).normalize();
    dir.iter().all(|v| v.is_finite()).then_some(Line2 { point: mean, dir })
}
