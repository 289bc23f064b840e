//! Trifoliate soybean model: a main stem of up to 14 nodes and up to six
//! short branches, each node carrying three coplanar leaflets on a petiole.

use nalgebra::{Point3, Unit, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::organ::{elliptic_blade, horizontal_normal, polyline_prism, prism, spherical_dir};
use super::params::{SoybeanParams, Species};
use super::profile::MorphologyProfile;
use super::{fractional_nodes, Stream};
use crate::error::{Error, Result};
use crate::mesh::{FaceLabel, LabeledMesh, OrganClass};
use crate::rng::RandomSeed;

/// Main-stem node count at which branching starts.
pub const BRANCH_START_NODE: usize = 8;
pub const MAX_BRANCHES: usize = 6;
/// Petiolule length of the terminal leaflet, as a fraction of leaf length.
const PETIOLULE_FRACTION: f64 = 0.15;
/// Angle between the terminal and lateral leaflet axes.
const LATERAL_LEAFLET_ANGLE: f64 = std::f64::consts::FRAC_PI_3;

/// One trifoliate node, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct TrifoliateNode {
    /// 0 for the main stem, `b + 1` for branch `b`.
    pub stem: usize,
    /// 1-based rank along its stem, counted from the bottom.
    pub rank: usize,
    pub position: Point3<f64>,
    pub azimuth: f64,
    /// Petiole inclination from vertical, degrees, after noise.
    pub petiole_angle_deg: f64,
    pub petiole_length: f64,
    pub leaf_length: f64,
    pub leaf_width: f64,
    /// Linear size factor (< 1 only for a fractional top node).
    pub scale: f64,
}

/// Resolved plant layout prior to meshing.
#[derive(Debug, Clone, PartialEq)]
pub struct SoybeanPlan {
    pub main_nodes: usize,
    pub branch_node_counts: Vec<usize>,
    pub nodes: Vec<TrifoliateNode>,
    /// Main stem first, then one polyline per branch.
    pub stems: Vec<Vec<Point3<f64>>>,
}

impl SoybeanPlan {
    pub fn num_branches(&self) -> usize {
        self.branch_node_counts.len()
    }

    pub fn main_stem_nodes(&self) -> impl Iterator<Item = &TrifoliateNode> {
        self.nodes.iter().filter(|n| n.stem == 0)
    }
}

/// Number of branches for a plant with `main_nodes` main-stem nodes.
pub fn branch_count(main_nodes: usize) -> usize {
    (main_nodes + 1).saturating_sub(BRANCH_START_NODE).min(MAX_BRANCHES)
}

fn check_profile(profile: &MorphologyProfile) -> Result<()> {
    if profile.species != Species::Soybean {
        return Err(Error::config("soybean generation needs a soybean profile"));
    }
    profile.validate()
}

/// Resolve node positions, dimensions, and random draws for one plant.
pub fn plan(
    params: &SoybeanParams,
    profile: &MorphologyProfile,
    seed: RandomSeed,
    plant: u32,
) -> Result<SoybeanPlan> {
    params.validate()?;
    check_profile(profile)?;
    let branch = profile.branch.as_ref().expect("validated");
    let (main_nodes, top_scale) = fractional_nodes(params.num_nodes);
    let stream = Stream::new(seed, plant);
    let angle_noise = Normal::new(0.0, profile.angle_noise_std_deg.to_radians())
        .map_err(|e| Error::config(e.to_string()))?;
    let azimuth_noise = Normal::new(0.0, profile.azimuth_noise_std_deg.to_radians())
        .map_err(|e| Error::config(e.to_string()))?;

    let base_azimuth = stream.rng(0, 0).random::<f64>() * std::f64::consts::TAU;
    let mut nodes = Vec::new();
    let mut stems = vec![vec![Point3::origin()]];
    let mut height = 0.0;
    for rank in 1..=main_nodes {
        let i = rank - 1;
        let scale = if rank == main_nodes { top_scale } else { 1.0 };
        height += profile.internode_length[i] * params.internode_length_mult * scale;
        let mut rng = stream.rng(0, rank);
        let azimuth = base_azimuth + rank as f64 * std::f64::consts::PI + azimuth_noise.sample(&mut rng);
        let angle = profile.petiole_angle_deg[i] * params.petiole_angle_mult
            + angle_noise.sample(&mut rng).to_degrees();
        let position = Point3::new(0.0, 0.0, height);
        stems[0].push(position);
        nodes.push(TrifoliateNode {
            stem: 0,
            rank,
            position,
            azimuth,
            petiole_angle_deg: angle.clamp(0.0, 180.0),
            petiole_length: profile.petiole_length[i] * params.petiole_length_mult * scale,
            leaf_length: profile.leaf_length[i] * params.leaf_length_mult * scale,
            leaf_width: profile.leaf_width_at(i) * params.leaf_length_mult * scale,
            scale,
        });
    }

    let n_branches = branch_count(main_nodes);
    let mut branch_node_counts = Vec::with_capacity(n_branches);
    for b in 0..n_branches {
        // The branch triggered by the newest (fractional) main node grows with it.
        let scale = if b + BRANCH_START_NODE == main_nodes { top_scale } else { 1.0 };
        let count = draw_branch_nodes(profile, &mut stream.rng(b + 1, 0));
        branch_node_counts.push(count);
        let (anchor_azimuth, origin) = (nodes[b].azimuth, nodes[b].position);
        let axis = spherical_dir(branch.branch_angle_deg.to_radians(), anchor_azimuth);
        let mut polyline = vec![origin];
        let width = branch.leaf_width.unwrap_or(profile.leaf_aspect * branch.leaf_length);
        for rank in 1..=count {
            let mut rng = stream.rng(b + 1, rank);
            let dist = rank as f64 * branch.internode_length * params.internode_length_mult * scale;
            let position = origin + axis.as_ref() * dist;
            polyline.push(position);
            let azimuth = anchor_azimuth + rank as f64 * std::f64::consts::PI + azimuth_noise.sample(&mut rng);
            let angle = branch.petiole_angle_deg * params.petiole_angle_mult
                + angle_noise.sample(&mut rng).to_degrees();
            nodes.push(TrifoliateNode {
                stem: b + 1,
                rank,
                position,
                azimuth,
                petiole_angle_deg: angle.clamp(0.0, 180.0),
                petiole_length: branch.petiole_length * params.petiole_length_mult * scale,
                leaf_length: branch.leaf_length * params.leaf_length_mult * scale,
                leaf_width: width * params.leaf_length_mult * scale,
                scale,
            });
        }
        stems.push(polyline);
    }

    Ok(SoybeanPlan {
        main_nodes,
        branch_node_counts,
        nodes,
        stems,
    })
}

fn draw_branch_nodes(profile: &MorphologyProfile, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for w in &profile.branch_node_distribution {
        acc += w.probability;
        if u < acc {
            return w.nodes as usize;
        }
    }
    profile.branch_node_distribution.last().map_or(1, |w| w.nodes as usize)
}

/// Mesh a resolved plan.
pub fn mesh_plan(plan: &SoybeanPlan, profile: &MorphologyProfile, plant: u32) -> LabeledMesh {
    let mut mesh = LabeledMesh::new();
    for (s, line) in plan.stems.iter().enumerate() {
        let label = FaceLabel { class: OrganClass::Stem, plant, index: s as u32 };
        polyline_prism(&mut mesh, label, line, profile.stem_radius);
    }
    let mut leaf_index = 0u32;
    let mut petiole_index = 0u32;
    for node in &plan.nodes {
        let dir = spherical_dir(node.petiole_angle_deg.to_radians(), node.azimuth);
        let lateral = horizontal_normal(node.azimuth);
        let tip = node.position + dir.as_ref() * node.petiole_length;
        let petiole = |i: u32| FaceLabel { class: OrganClass::Petiole, plant, index: i };
        prism(&mut mesh, petiole(petiole_index), node.position, tip, profile.petiole_radius);
        petiole_index += 1;

        // Terminal leaflet on a short petiolule, laterals at the petiole tip.
        let petiolule_end = tip + dir.as_ref() * (PETIOLULE_FRACTION * node.leaf_length);
        prism(&mut mesh, petiole(petiole_index), tip, petiolule_end, profile.petiole_radius);
        petiole_index += 1;
        for (k, (base, axis)) in leaflet_axes(&dir, &lateral, tip, petiolule_end).into_iter().enumerate() {
            let blade_lateral = Unit::new_normalize(plane_normal(&dir, &lateral).cross(axis.as_ref()));
            let label = FaceLabel { class: OrganClass::Leaf, plant, index: leaf_index + k as u32 };
            elliptic_blade(&mut mesh, label, base, &axis, &blade_lateral, node.leaf_length, node.leaf_width);
        }
        leaf_index += 3;
    }
    mesh
}

fn plane_normal(dir: &Unit<Vector3<f64>>, lateral: &Unit<Vector3<f64>>) -> Vector3<f64> {
    dir.cross(lateral.as_ref()).normalize()
}

/// Bases and axes of the terminal and two lateral leaflets, all in the
/// plane spanned by the petiole direction and its horizontal normal.
fn leaflet_axes(
    dir: &Unit<Vector3<f64>>,
    lateral: &Unit<Vector3<f64>>,
    tip: Point3<f64>,
    petiolule_end: Point3<f64>,
) -> [(Point3<f64>, Unit<Vector3<f64>>); 3] {
    let (s, c) = LATERAL_LEAFLET_ANGLE.sin_cos();
    let left = Unit::new_normalize(dir.as_ref() * c + lateral.as_ref() * s);
    let right = Unit::new_normalize(dir.as_ref() * c - lateral.as_ref() * s);
    [(petiolule_end, *dir), (tip, left), (tip, right)]
}

/// Generate a single soybean plant at the origin.
pub fn generate_soybean_plant(
    params: &SoybeanParams,
    profile: &MorphologyProfile,
    seed: RandomSeed,
) -> Result<LabeledMesh> {
    generate_indexed(params, profile, seed, 0)
}

pub(crate) fn generate_indexed(
    params: &SoybeanParams,
    profile: &MorphologyProfile,
    seed: RandomSeed,
    plant: u32,
) -> Result<LabeledMesh> {
    let plan = plan(params, profile, seed, plant)?;
    Ok(mesh_plan(&plan, profile, plant))
}
