use nalgebra::Vector3;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{PlantParams, Species};
use super::profile::MorphologyProfile;
use super::{maize, soybean};
use crate::error::{Error, Result};
use crate::mesh::LabeledMesh;
use crate::rng::RandomSeed;

/// Row-planted grid of plants. Rows run parallel to the x-axis and are
/// centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanopyLayout {
    pub row_spacing: f64,
    pub plant_spacing: f64,
    pub num_rows: usize,
    pub plants_per_row: usize,
    pub position_jitter_std: f64,
}

impl CanopyLayout {
    pub fn default_for(species: Species) -> Self {
        match species {
            Species::Soybean => CanopyLayout {
                row_spacing: 0.76,
                plant_spacing: 0.1,
                num_rows: 3,
                plants_per_row: 25,
                position_jitter_std: 0.01,
            },
            Species::Maize => CanopyLayout {
                row_spacing: 0.76,
                plant_spacing: 0.2,
                num_rows: 7,
                plants_per_row: 36,
                position_jitter_std: 0.02,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.row_spacing > 0.0 && self.plant_spacing > 0.0) {
            return Err(Error::domain("row and plant spacing must be positive"));
        }
        if self.num_rows == 0 || self.plants_per_row == 0 {
            return Err(Error::domain("layout needs at least one row and one plant per row"));
        }
        if !(self.position_jitter_std >= 0.0) {
            return Err(Error::domain("position jitter must be non-negative"));
        }
        Ok(())
    }

    pub fn num_plants(&self) -> usize {
        self.num_rows * self.plants_per_row
    }

    /// Nominal (unjittered) base of plant `slot` in row `row`.
    pub fn grid_position(&self, row: usize, slot: usize) -> (f64, f64) {
        let x = (slot as f64 - (self.plants_per_row as f64 - 1.0) / 2.0) * self.plant_spacing;
        let y = (row as f64 - (self.num_rows as f64 - 1.0) / 2.0) * self.row_spacing;
        (x, y)
    }

    /// Ground footprint, one spacing per row and per plant slot.
    pub fn ground_area(&self) -> f64 {
        self.num_rows as f64 * self.row_spacing * self.plants_per_row as f64 * self.plant_spacing
    }
}

/// Generate one plant with the given plant index (used for label and seed derivation).
pub fn generate_plant(
    params: &PlantParams,
    profile: &MorphologyProfile,
    seed: RandomSeed,
    plant: u32,
) -> Result<LabeledMesh> {
    match params {
        PlantParams::Soybean(p) => soybean::generate_indexed(p, profile, seed, plant),
        PlantParams::Maize(p) => maize::generate_indexed(p, profile, seed, plant),
    }
}

/// Instantiate a plant at every layout slot, each with its own derived randomness.
pub fn build_canopy(
    params: &PlantParams,
    layout: &CanopyLayout,
    profile: &MorphologyProfile,
    seed: RandomSeed,
) -> Result<LabeledMesh> {
    layout.validate()?;
    params.validate()?;
    if profile.species != params.species() {
        return Err(Error::config(format!(
            "profile is for {}, parameters are for {}",
            profile.species,
            params.species()
        )));
    }
    profile.validate()?;
    let jitter = Normal::new(0.0, layout.position_jitter_std).map_err(|e| Error::domain(e.to_string()))?;
    let plants: Vec<LabeledMesh> = (0..layout.num_plants())
        .into_par_iter()
        .map(|k| {
            let (row, slot) = (k / layout.plants_per_row, k % layout.plants_per_row);
            let plant = k as u32;
            let mut mesh = generate_plant(params, profile, seed, plant)?;
            let (x, y) = layout.grid_position(row, slot);
            let (dx, dy) = if layout.position_jitter_std > 0.0 {
                let mut rng = seed.derive_named("jitter").derive(k as u64).rng();
                (jitter.sample(&mut rng), jitter.sample(&mut rng))
            } else {
                (0.0, 0.0)
            };
            mesh.translate(Vector3::new(x + dx, y + dy, 0.0));
            Ok(mesh)
        })
        .collect::<Result<_>>()?;
    let mut canopy = LabeledMesh::new();
    for m in &plants {
        canopy.append(m);
    }
    Ok(canopy)
}
