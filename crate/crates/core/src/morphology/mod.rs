//! Procedural soybean and maize morphology and row-planted canopies.

mod canopy;
pub mod maize;
mod organ;
mod params;
mod profile;
pub mod soybean;

pub use canopy::{build_canopy, generate_plant, CanopyLayout};
pub use maize::generate_maize_plant;
pub use params::{
    clamp_params, MaizeParams, ParamBound, ParamsRecord, PlantParams, SoybeanParams, Species,
};
pub use profile::{BendingProfile, BranchNodeWeight, BranchProfile, MorphologyProfile};
pub use soybean::generate_soybean_plant;

use rand_chacha::ChaCha8Rng;

use crate::rng::RandomSeed;

/// Integer node count and linear scale of the topmost node for a
/// real-valued node count: 8.5 becomes 9 nodes with the ninth at half size.
pub(crate) fn fractional_nodes(num_nodes: f64) -> (usize, f64) {
    let count = num_nodes.ceil().max(1.0);
    let scale = num_nodes - (count - 1.0);
    (count as usize, scale.clamp(f64::MIN_POSITIVE, 1.0))
}

/// Per-plant random streams keyed by (stem, node).
pub(crate) struct Stream {
    root: RandomSeed,
}

impl Stream {
    fn new(seed: RandomSeed, plant: u32) -> Self {
        Stream {
            root: seed.derive_named("plant").derive(u64::from(plant)),
        }
    }

    fn rng(&self, stem: usize, node: usize) -> ChaCha8Rng {
        self.root.derive_path(&[stem as u64, node as u64]).rng()
    }
}
