//! Mesh primitives for leaves, stems and petioles.

use std::f64::consts::TAU;

use nalgebra::{Point3, Unit, Vector3};

use crate::mesh::{FaceLabel, LabeledMesh};

/// Outline points of a flat elliptic leaf blade.
pub const BLADE_OUTLINE_POINTS: usize = 12;

/// Flat elliptic blade whose base sits at `base`, extending `length` along
/// `axis` with full width `width` along `lateral`. Fan-triangulated from the
/// blade center.
pub fn elliptic_blade(
    mesh: &mut LabeledMesh,
    label: FaceLabel,
    base: Point3<f64>,
    axis: &Unit<Vector3<f64>>,
    lateral: &Unit<Vector3<f64>>,
    length: f64,
    width: f64,
) {
    let center = base + axis.as_ref() * (0.5 * length);
    let c = mesh.push_vertex(center);
    let first = mesh.vertices.len() as u32;
    for i in 0..BLADE_OUTLINE_POINTS {
        let t = TAU * i as f64 / BLADE_OUTLINE_POINTS as f64;
        let along = 0.5 * length * (1.0 - t.cos());
        let across = 0.5 * width * t.sin();
        mesh.push_vertex(base + axis.as_ref() * along + lateral.as_ref() * across);
    }
    let n = BLADE_OUTLINE_POINTS as u32;
    for i in 0..n {
        mesh.push_triangle([c, first + i, first + (i + 1) % n], label);
    }
}

/// Triangular prism approximating a thin cylinder from `a` to `b`.
pub fn prism(mesh: &mut LabeledMesh, label: FaceLabel, a: Point3<f64>, b: Point3<f64>, radius: f64) {
    let d = b - a;
    let len = d.norm();
    if radius <= 0.0 || len < 1e-12 {
        return;
    }
    let dir = d / len;
    let helper = if dir.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
    let e1 = dir.cross(&helper).normalize();
    let e2 = dir.cross(&e1);
    let ring = |p: Point3<f64>, mesh: &mut LabeledMesh| -> [u32; 3] {
        let mut idx = [0u32; 3];
        for (k, slot) in idx.iter_mut().enumerate() {
            let t = TAU * k as f64 / 3.0;
            *slot = mesh.push_vertex(p + (e1 * t.cos() + e2 * t.sin()) * radius);
        }
        idx
    };
    let ra = ring(a, mesh);
    let rb = ring(b, mesh);
    for k in 0..3 {
        let k2 = (k + 1) % 3;
        mesh.push_triangle([ra[k], ra[k2], rb[k2]], label);
        mesh.push_triangle([ra[k], rb[k2], rb[k]], label);
    }
}

/// Prisms along every segment of a polyline.
pub fn polyline_prism(mesh: &mut LabeledMesh, label: FaceLabel, points: &[Point3<f64>], radius: f64) {
    for w in points.windows(2) {
        prism(mesh, label, w[0], w[1], radius);
    }
}

/// Strip leaf: quads between consecutive spine points, each row spanning
/// `widths[i]` along `lateral`. Two triangles per segment.
pub fn strip_blade(
    mesh: &mut LabeledMesh,
    label: FaceLabel,
    spine: &[Point3<f64>],
    widths: &[f64],
    lateral: &Unit<Vector3<f64>>,
) {
    debug_assert_eq!(spine.len(), widths.len());
    let mut rows = Vec::with_capacity(spine.len());
    for (p, w) in spine.iter().zip(widths) {
        let half = lateral.as_ref() * (0.5 * w);
        rows.push((mesh.push_vertex(p - half), mesh.push_vertex(p + half)));
    }
    for w in rows.windows(2) {
        let ((l0, r0), (l1, r1)) = (w[0], w[1]);
        mesh.push_triangle([l0, r0, r1], label);
        mesh.push_triangle([l0, r1, l1], label);
    }
}

/// Unit vector at `inclination` radians from +z toward azimuth `azimuth`.
pub fn spherical_dir(inclination: f64, azimuth: f64) -> Unit<Vector3<f64>> {
    Unit::new_normalize(Vector3::new(
        inclination.sin() * azimuth.cos(),
        inclination.sin() * azimuth.sin(),
        inclination.cos(),
    ))
}

/// Horizontal unit vector perpendicular to the azimuth direction.
pub fn horizontal_normal(azimuth: f64) -> Unit<Vector3<f64>> {
    Unit::new_unchecked(Vector3::new(-azimuth.sin(), azimuth.cos(), 0.0))
}
