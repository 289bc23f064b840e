//! Triangle meshes with per-face organ labels, plus Wavefront-OBJ export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Organ class carried by every face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrganClass {
    Leaf,
    Stem,
    Petiole,
}

impl OrganClass {
    pub fn as_str(self) -> &'static str {
        match self {
            OrganClass::Leaf => "leaf",
            OrganClass::Stem => "stem",
            OrganClass::Petiole => "petiole",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "leaf" => Some(OrganClass::Leaf),
            "stem" => Some(OrganClass::Stem),
            "petiole" => Some(OrganClass::Petiole),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceLabel {
    pub class: OrganClass,
    pub plant: u32,
    /// Index of the organ among organs of the same class on the same plant.
    pub index: u32,
}

impl FaceLabel {
    pub fn group_name(&self) -> String {
        format!("p{}_{}{}", self.plant, self.class.as_str(), self.index)
    }

    pub fn parse_group_name(name: &str) -> Option<Self> {
        let rest = name.strip_prefix('p')?;
        let (plant, organ) = rest.split_once('_')?;
        let plant = plant.parse().ok()?;
        let split = organ.find(|c: char| c.is_ascii_digit())?;
        let class = OrganClass::parse(&organ[..split])?;
        let index = organ[split..].parse().ok()?;
        Some(FaceLabel { class, plant, index })
    }
}

/// A triangle mesh in meters whose faces carry organ labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    pub face_labels: Vec<FaceLabel>,
}

impl LabeledMesh {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn num_faces(&self) -> usize {
        self.triangles.len()
    }

    pub fn push_vertex(&mut self, p: Point3<f64>) -> u32 {
        self.vertices.push(p);
        (self.vertices.len() - 1) as u32
    }

    pub fn push_triangle(&mut self, tri: [u32; 3], label: FaceLabel) {
        self.triangles.push(tri);
        self.face_labels.push(label);
    }

    /// Append another mesh, re-indexing its vertices.
    pub fn append(&mut self, other: &LabeledMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(
            other
                .triangles
                .iter()
                .map(|t| [t[0] + base, t[1] + base, t[2] + base]),
        );
        self.face_labels.extend_from_slice(&other.face_labels);
    }

    pub fn translate(&mut self, offset: Vector3<f64>) {
        for v in &mut self.vertices {
            *v += offset;
        }
    }

    pub fn set_plant_index(&mut self, plant: u32) {
        for l in &mut self.face_labels {
            l.plant = plant;
        }
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        let t = self.triangles[face];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        triangle_area(&a, &b, &c)
    }

    /// Sum of triangle areas over faces of the given class.
    pub fn class_area(&self, class: OrganClass) -> f64 {
        (0..self.num_faces())
            .filter(|&f| self.face_labels[f].class == class)
            .map(|f| self.face_area(f))
            .sum()
    }

    /// Check index validity and label completeness.
    pub fn validate(&self) -> Result<()> {
        if self.face_labels.len() != self.triangles.len() {
            return Err(Error::domain(format!(
                "{} face labels for {} triangles",
                self.face_labels.len(),
                self.triangles.len()
            )));
        }
        let n = self.vertices.len() as u32;
        if let Some((i, _)) = self
            .triangles
            .iter()
            .enumerate()
            .find(|(_, t)| t.iter().any(|&v| v >= n))
        {
            return Err(Error::domain(format!("triangle {i} references a missing vertex")));
        }
        Ok(())
    }

    /// Distinct organ labels in order of first appearance.
    pub fn organs(&self) -> Vec<FaceLabel> {
        let mut seen = std::collections::HashSet::new();
        self.face_labels
            .iter()
            .filter(|l| seen.insert(**l))
            .copied()
            .collect()
    }

    /// Serialize to Wavefront OBJ, one `g` group per organ run.
    pub fn to_obj(&self) -> String {
        let mut out = String::with_capacity(self.vertices.len() * 40 + self.triangles.len() * 24);
        out.push_str("# canopyfit labeled mesh\n");
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        let mut current: Option<FaceLabel> = None;
        for (t, l) in self.triangles.iter().zip(&self.face_labels) {
            if current != Some(*l) {
                let _ = writeln!(out, "g {}", l.group_name());
                current = Some(*l);
            }
            let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }

    /// Parse the OBJ dialect written by [`LabeledMesh::to_obj`].
    pub fn from_obj(text: &str) -> Result<Self> {
        let mut mesh = LabeledMesh::new();
        let mut current: Option<FaceLabel> = None;
        let mut offset = 0usize;
        for line in text.split_inclusive('\n') {
            let line_offset = offset;
            offset += line.len();
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let mut c = [0.0; 3];
                    for x in &mut c {
                        *x = parts
                            .next()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| Error::format(line_offset, "bad vertex line"))?;
                    }
                    mesh.vertices.push(Point3::new(c[0], c[1], c[2]));
                }
                Some("g") => {
                    let name = parts
                        .next()
                        .ok_or_else(|| Error::format(line_offset, "empty group name"))?;
                    current = Some(FaceLabel::parse_group_name(name).ok_or_else(|| {
                        Error::format(line_offset, format!("unrecognized group name `{name}`"))
                    })?);
                }
                Some("f") => {
                    let label = current
                        .ok_or_else(|| Error::format(line_offset, "face outside of a group"))?;
                    let mut t = [0u32; 3];
                    for x in &mut t {
                        let tok = parts
                            .next()
                            .ok_or_else(|| Error::format(line_offset, "face needs 3 indices"))?;
                        let idx: u32 = tok
                            .split('/')
                            .next()
                            .and_then(|s| s.parse().ok())
                            .filter(|&i| i >= 1)
                            .ok_or_else(|| Error::format(line_offset, "bad face index"))?;
                        *x = idx - 1;
                    }
                    mesh.push_triangle(t, label);
                }
                _ => {}
            }
        }
        mesh.validate()?;
        Ok(mesh)
    }

    /// Sidecar mapping each OBJ group name to its label.
    pub fn sidecar(&self) -> BTreeMap<String, FaceLabel> {
        self.organs()
            .into_iter()
            .map(|l| (l.group_name(), l))
            .collect()
    }
}

pub fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> LabeledMesh {
        let mut m = LabeledMesh::new();
        let leaf = FaceLabel { class: OrganClass::Leaf, plant: 3, index: 12 };
        let stem = FaceLabel { class: OrganClass::Stem, plant: 3, index: 0 };
        let a = m.push_vertex(Point3::new(0.0, 0.0, 0.0));
        let b = m.push_vertex(Point3::new(0.1, 0.0, 0.0));
        let c = m.push_vertex(Point3::new(0.1, 0.2, 0.0));
        let d = m.push_vertex(Point3::new(0.0, 0.2, 1.0 / 3.0));
        m.push_triangle([a, b, c], leaf);
        m.push_triangle([a, c, d], leaf);
        m.push_triangle([a, b, d], stem);
        m
    }

    #[test]
    fn group_names_round_trip() {
        let l = FaceLabel { class: OrganClass::Petiole, plant: 17, index: 5 };
        assert_eq!(l.group_name(), "p17_petiole5");
        assert_eq!(FaceLabel::parse_group_name("p17_petiole5"), Some(l));
        assert_eq!(FaceLabel::parse_group_name("p1_bark2"), None);
    }

    #[test]
    fn obj_round_trip_is_lossless() {
        let m = quad();
        let back = LabeledMesh::from_obj(&m.to_obj()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn obj_errors_carry_offsets() {
        let err = LabeledMesh::from_obj("v 0 0 0\nf 1 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Format { offset: 8, .. }), "{err}");
        assert!(LabeledMesh::from_obj("g p0_leaf0\nf 1 2 3\n").is_err());
    }

    #[test]
    fn class_area_filters_labels() {
        let m = quad();
        let leaf = m.class_area(OrganClass::Leaf);
        let expected = m.face_area(0) + m.face_area(1);
        assert!((leaf - expected).abs() < 1e-15);
        assert_eq!(m.sidecar().len(), 2);
    }
}
