//! Single-stem maize model with strap leaves built from trapezoidal
//! segments that bend toward the ground as a function of leaf order.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::organ::{horizontal_normal, prism, strip_blade};
use super::params::{MaizeParams, Species};
use super::profile::{BendingProfile, MorphologyProfile};
use super::{fractional_nodes, Stream};
use crate::error::{Error, Result};
use crate::mesh::{FaceLabel, LabeledMesh, OrganClass};
use crate::rng::RandomSeed;

#[derive(Debug, Clone, PartialEq)]
pub struct MaizeNode {
    pub rank: usize,
    pub position: Point3<f64>,
    pub azimuth: f64,
    /// Leaf order after the additive shift.
    pub order: f64,
    pub leaf_length: f64,
    pub leaf_width: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaizePlan {
    pub nodes: Vec<MaizeNode>,
    pub stem_height: f64,
}

fn check_profile(profile: &MorphologyProfile) -> Result<&BendingProfile> {
    if profile.species != Species::Maize {
        return Err(Error::config("maize generation needs a maize profile"));
    }
    profile.validate()?;
    Ok(profile.bending.as_ref().expect("validated"))
}

pub fn plan(
    params: &MaizeParams,
    profile: &MorphologyProfile,
    seed: RandomSeed,
    plant: u32,
) -> Result<MaizePlan> {
    params.validate()?;
    check_profile(profile)?;
    let (count, top_scale) = fractional_nodes(params.num_nodes);
    let stream = Stream::new(seed, plant);
    let azimuth_noise = Normal::new(0.0, profile.azimuth_noise_std_deg.to_radians())
        .map_err(|e| Error::config(e.to_string()))?;
    let base_azimuth = stream.rng(0, 0).random::<f64>() * std::f64::consts::TAU;

    let mut height = 0.0;
    let mut nodes = Vec::with_capacity(count);
    for rank in 1..=count {
        let i = rank - 1;
        let scale = if rank == count { top_scale } else { 1.0 };
        height += profile.internode_length[i] * params.internode_length_mult * scale;
        let mut rng = stream.rng(0, rank);
        nodes.push(MaizeNode {
            rank,
            position: Point3::new(0.0, 0.0, height),
            azimuth: base_azimuth + rank as f64 * std::f64::consts::PI + azimuth_noise.sample(&mut rng),
            order: rank as f64 + params.leaf_order_shift,
            leaf_length: profile.leaf_length[i] * params.leaf_length_mult * scale,
            leaf_width: profile.leaf_width_at(i) * params.leaf_length_mult * scale,
            scale,
        });
    }
    Ok(MaizePlan {
        nodes,
        stem_height: height,
    })
}

/// Spine points (segments + 1) of a leaf in the vertical plane of its azimuth.
pub fn leaf_spine(node: &MaizeNode, bending: &BendingProfile) -> Vec<Point3<f64>> {
    let total = bending.total_bend_deg(node.order).to_radians();
    let elevation0 = bending.initial_elevation_deg.to_radians();
    let seg_len = node.leaf_length / bending.segments as f64;
    let (sa, ca) = node.azimuth.sin_cos();
    let mut p = node.position;
    let mut spine = Vec::with_capacity(bending.segments + 1);
    spine.push(p);
    for k in 0..bending.segments {
        let s = (k as f64 + 0.5) / bending.segments as f64;
        let elevation = elevation0 - total * bending.bend_fraction(s);
        let (se, ce) = elevation.sin_cos();
        p += Vector3::new(ce * ca, ce * sa, se) * seg_len;
        spine.push(p);
    }
    spine
}

pub fn mesh_plan(plan: &MaizePlan, profile: &MorphologyProfile, plant: u32) -> LabeledMesh {
    let bending = profile.bending.as_ref().expect("validated");
    let mut mesh = LabeledMesh::new();
    let stem = FaceLabel { class: OrganClass::Stem, plant, index: 0 };
    prism(&mut mesh, stem, Point3::origin(), Point3::new(0.0, 0.0, plan.stem_height), profile.stem_radius);
    let n = bending.segments;
    for (i, node) in plan.nodes.iter().enumerate() {
        let spine = leaf_spine(node, bending);
        let widths: Vec<f64> = (0..=n)
            .map(|k| node.leaf_width * (1.0 - (1.0 - bending.tip_width_fraction) * k as f64 / n as f64))
            .collect();
        let label = FaceLabel { class: OrganClass::Leaf, plant, index: i as u32 };
        strip_blade(&mut mesh, label, &spine, &widths, &horizontal_normal(node.azimuth));
    }
    mesh
}

pub fn generate_maize_plant(
    params: &MaizeParams,
    profile: &MorphologyProfile,
    seed: RandomSeed,
) -> Result<LabeledMesh> {
    generate_indexed(params, profile, seed, 0)
}

pub(crate) fn generate_indexed(
    params: &MaizeParams,
    profile: &MorphologyProfile,
    seed: RandomSeed,
    plant: u32,
) -> Result<LabeledMesh> {
    let plan = plan(params, profile, seed, plant)?;
    Ok(mesh_plan(&plan, profile, plant))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> MorphologyProfile {
        MorphologyProfile::default_for(Species::Maize)
    }

    #[test]
    fn eighteen_leaves_of_twenty_triangles() {
        let m = generate_maize_plant(&MaizeParams::unit(18.0), &profile(), RandomSeed(2)).unwrap();
        let leaves: Vec<_> = m.organs().into_iter().filter(|l| l.class == OrganClass::Leaf).collect();
        assert_eq!(leaves.len(), 18);
        for l in leaves {
            assert_eq!(m.face_labels.iter().filter(|x| **x == l).count(), 20);
        }
        assert!((0..m.num_faces())
            .filter(|&f| m.face_labels[f].class == OrganClass::Leaf)
            .all(|f| m.face_area(f) > 0.0));
    }

    #[test]
    fn single_node_stem_height() {
        let prof = profile();
        let mut params = MaizeParams::unit(1.0);
        params.internode_length_mult = 1.1;
        let p = plan(&params, &prof, RandomSeed(0), 0).unwrap();
        assert_eq!(p.nodes.len(), 1);
        assert!((p.stem_height - prof.internode_length[0] * 1.1).abs() < 1e-15);
    }

    #[test]
    fn spine_length_matches_leaf_length() {
        let prof = profile();
        let p = plan(&MaizeParams::unit(12.0), &prof, RandomSeed(4), 0).unwrap();
        let node = &p.nodes[5];
        let spine = leaf_spine(node, prof.bending.as_ref().unwrap());
        let len: f64 = spine.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        assert!((len - node.leaf_length).abs() < 1e-12);
    }
}
