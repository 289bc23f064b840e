//! Canopy-structure variables from labeled meshes and their error scores.

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{LabeledMesh, OrganClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanopyMetrics {
    pub lai: f64,
    /// Area-weighted mean leaf inclination in degrees; `None` without leaf area.
    pub angle_mean: Option<f64>,
    pub angle_std: Option<f64>,
    pub total_leaf_area: f64,
    pub ground_area: f64,
}

/// Inclination of a face from horizontal in degrees, in [0, 90]; `None` for degenerate faces.
pub fn face_inclination(mesh: &LabeledMesh, f: usize) -> Option<f64> {
    let [a, b, c] = mesh.triangle(f);
    let n: Vector3<f64> = (b - a).cross(&(c - a));
    let len = n.norm();
    if len == 0.0 {
        return None;
    }
    Some((n.z.abs() / len).min(1.0).acos().to_degrees())
}

pub fn compute_metrics(mesh: &LabeledMesh, ground_area: f64) -> Result<CanopyMetrics> {
    if !(ground_area > 0.0 && ground_area.is_finite()) {
        return Err(Error::domain(format!("ground area must be positive, got {ground_area}")));
    }
    let mut area = 0.0;
    let mut weighted = 0.0;
    let mut faces = Vec::new();
    for (f, label) in mesh.face_labels.iter().enumerate() {
        if label.class != OrganClass::Leaf {
            continue;
        }
        let a = mesh.face_area(f);
        if let Some(theta) = face_inclination(mesh, f) {
            area += a;
            weighted += a * theta;
            faces.push((a, theta));
        }
    }
    let (angle_mean, angle_std) = if area > 0.0 {
        let mean = weighted / area;
        let var = faces.iter().map(|(a, t)| a * (t - mean) * (t - mean)).sum::<f64>() / area;
        (Some(mean), Some(var.max(0.0).sqrt()))
    } else {
        (None, None)
    };
    Ok(CanopyMetrics { lai: area / ground_area, angle_mean, angle_std, total_leaf_area: area, ground_area })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub scenes: usize,
    pub laie: f64,
    pub laipe: f64,
    pub ame: f64,
    pub asde: f64,
}

fn rmse(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for (p, t) in pairs {
        s += (p - t) * (p - t);
        n += 1;
    }
    (s / n as f64).sqrt()
}

pub fn score(predicted: &[CanopyMetrics], truth: &[CanopyMetrics]) -> Result<EvaluationReport> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(Error::domain(format!(
            "score needs equal, non-empty lists (got {} predicted, {} true)",
            predicted.len(),
            truth.len()
        )));
    }
    let angles = |m: &CanopyMetrics, i: usize| -> Result<(f64, f64)> {
        match (m.angle_mean, m.angle_std) {
            (Some(a), Some(s)) => Ok((a, s)),
            _ => Err(Error::domain(format!("scene {i} has no leaf area, so its angles are undefined"))),
        }
    };
    let mut laipe = 0.0;
    let mut pa = Vec::with_capacity(truth.len());
    for (i, (p, t)) in predicted.iter().zip(truth).enumerate() {
        if t.lai == 0.0 {
            return Err(Error::domain(format!("scene {i} has zero true LAI; percent error undefined")));
        }
        laipe += (p.lai - t.lai).abs() / t.lai;
        pa.push((angles(p, i)?, angles(t, i)?));
    }
    Ok(EvaluationReport {
        scenes: truth.len(),
        laie: rmse(predicted.iter().zip(truth).map(|(p, t)| (p.lai, t.lai))),
        laipe: laipe / truth.len() as f64,
        ame: rmse(pa.iter().map(|(p, t)| (p.0, t.0))),
        asde: rmse(pa.iter().map(|(p, t)| (p.1, t.1))),
    })
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6}  {:>8}  {:>8}  {:>8}  {:>8}", "scenes", "LAIE", "LAIPE", "AME", "ASDE")?;
        write!(
            f,
            "{:>6}  {:>8.3}  {:>8.3}  {:>8.2}  {:>8.2}",
            self.scenes, self.laie, self.laipe, self.ame, self.asde
        )
    }
}
