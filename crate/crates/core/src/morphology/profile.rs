use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::Species;
use crate::error::{Error, Result};

const SOYBEAN_DEFAULT: &str = include_str!("../../data/soybean_profile.json");
const MAIZE_DEFAULT: &str = include_str!("../../data/maize_profile.json");

/// Per-node-rank morphology tables plus stochastic settings.
///
/// Tables are indexed by node rank counted from the bottom of the stem
/// (index 0 = rank 1). The shipped defaults are illustrative, not measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphologyProfile {
    pub species: Species,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Declared length of every per-rank table.
    pub table_length: usize,
    pub leaf_length: Vec<f64>,
    /// Leaf widths; when absent, `leaf_aspect * leaf_length`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_width: Option<Vec<f64>>,
    #[serde(default = "default_aspect")]
    pub leaf_aspect: f64,
    #[serde(default)]
    pub petiole_length: Vec<f64>,
    #[serde(default)]
    pub petiole_angle_deg: Vec<f64>,
    pub internode_length: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchProfile>,
    #[serde(default)]
    pub branch_node_distribution: Vec<BranchNodeWeight>,
    #[serde(default = "default_angle_noise")]
    pub angle_noise_std_deg: f64,
    #[serde(default = "default_azimuth_noise")]
    pub azimuth_noise_std_deg: f64,
    pub stem_radius: f64,
    #[serde(default)]
    pub petiole_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bending: Option<BendingProfile>,
}

/// Shared variables of every soybean branch node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchProfile {
    pub leaf_length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_width: Option<f64>,
    pub petiole_length: f64,
    pub petiole_angle_deg: f64,
    pub internode_length: f64,
    /// Inclination of the branch axis from vertical.
    pub branch_angle_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchNodeWeight {
    pub nodes: u32,
    pub probability: f64,
}

/// Maize leaf bending model.
///
/// Total bend (degrees) of a leaf with shifted order `o` is
/// `c0 + c1 o + c2 o^2`, clamped to [0, 180]. The bend accumulated at
/// normalized position `s` along the leaf is the total bend times
/// `(p1 s + p2 s^2) / (p1 + p2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendingProfile {
    pub order_coefficients: [f64; 3],
    pub position_coefficients: [f64; 2],
    /// Elevation of the leaf base above horizontal.
    pub initial_elevation_deg: f64,
    pub segments: usize,
    pub tip_width_fraction: f64,
}

impl BendingProfile {
    pub fn total_bend_deg(&self, order: f64) -> f64 {
        let [c0, c1, c2] = self.order_coefficients;
        (c0 + c1 * order + c2 * order * order).clamp(0.0, 180.0)
    }

    pub fn bend_fraction(&self, s: f64) -> f64 {
        let [p1, p2] = self.position_coefficients;
        (p1 * s + p2 * s * s) / (p1 + p2)
    }
}

fn default_aspect() -> f64 {
    0.7
}
fn default_angle_noise() -> f64 {
    5.0
}
fn default_azimuth_noise() -> f64 {
    60.0
}

impl MorphologyProfile {
    pub fn default_for(species: Species) -> Self {
        let text = match species {
            Species::Soybean => SOYBEAN_DEFAULT,
            Species::Maize => MAIZE_DEFAULT,
        };
        let p: MorphologyProfile =
            serde_json::from_str(text).expect("bundled profile is valid JSON");
        debug_assert!(p.validate().is_ok());
        p
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: MorphologyProfile = serde_json::from_str(&text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn leaf_width_at(&self, rank_index: usize) -> f64 {
        match &self.leaf_width {
            Some(w) => w[rank_index],
            None => self.leaf_aspect * self.leaf_length[rank_index],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let need = self.species.bounds().last().map(|b| b.upper).unwrap_or(0.0) as usize;
        if self.table_length == 0 || self.leaf_length.is_empty() {
            return Err(Error::config("profile tables are empty"));
        }
        if self.table_length < need {
            return Err(Error::config(format!(
                "{} profile needs at least {need} ranks, declares {}",
                self.species, self.table_length
            )));
        }
        let mut tables: Vec<(&str, &[f64])> = vec![
            ("leaf_length", &self.leaf_length),
            ("internode_length", &self.internode_length),
        ];
        if let Some(w) = &self.leaf_width {
            tables.push(("leaf_width", w));
        }
        if self.species == Species::Soybean {
            tables.push(("petiole_length", &self.petiole_length));
            tables.push(("petiole_angle_deg", &self.petiole_angle_deg));
        }
        for (name, t) in tables {
            if t.len() != self.table_length {
                return Err(Error::config(format!(
                    "table `{name}` has {} entries, expected {}",
                    t.len(),
                    self.table_length
                )));
            }
            if name != "petiole_angle_deg" && t.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::config(format!("table `{name}` has non-positive entries")));
            }
        }
        if !(self.leaf_aspect > 0.0) || !(self.stem_radius > 0.0) || self.petiole_radius < 0.0 {
            return Err(Error::config("aspect and radii must be positive"));
        }
        if self.angle_noise_std_deg < 0.0 || self.azimuth_noise_std_deg < 0.0 {
            return Err(Error::config("noise standard deviations must be non-negative"));
        }
        match self.species {
            Species::Soybean => {
                let b = self
                    .branch
                    .as_ref()
                    .ok_or_else(|| Error::config("soybean profile needs a `branch` block"))?;
                if [b.leaf_length, b.petiole_length, b.internode_length]
                    .iter()
                    .any(|&v| !(v > 0.0))
                {
                    return Err(Error::config("branch lengths must be positive"));
                }
                if self.branch_node_distribution.is_empty() {
                    return Err(Error::config("branch node distribution is empty"));
                }
                let total: f64 = self.branch_node_distribution.iter().map(|w| w.probability).sum();
                if (total - 1.0).abs() > 1e-9
                    || self
                        .branch_node_distribution
                        .iter()
                        .any(|w| w.probability < 0.0 || w.nodes == 0 || w.nodes > 2)
                {
                    return Err(Error::config(
                        "branch node distribution must sum to 1 over node counts in {1, 2}",
                    ));
                }
            }
            Species::Maize => {
                let b = self
                    .bending
                    .as_ref()
                    .ok_or_else(|| Error::config("maize profile needs a `bending` block"))?;
                let [p1, p2] = b.position_coefficients;
                if b.segments == 0 || !(b.tip_width_fraction > 0.0) || (p1 + p2).abs() < 1e-12 {
                    return Err(Error::config("invalid maize bending block"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_profiles_validate() {
        for s in [Species::Soybean, Species::Maize] {
            let p = MorphologyProfile::default_for(s);
            p.validate().unwrap();
            assert_eq!(p.species, s);
        }
    }

    #[test]
    fn short_table_rejected() {
        let mut p = MorphologyProfile::default_for(Species::Soybean);
        p.leaf_length.pop();
        assert!(matches!(p.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn empty_profile_rejected() {
        let mut p = MorphologyProfile::default_for(Species::Maize);
        p.leaf_length.clear();
        assert!(matches!(p.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn distribution_must_sum_to_one() {
        let mut p = MorphologyProfile::default_for(Species::Soybean);
        p.branch_node_distribution[0].probability = 0.7;
        assert!(p.validate().is_err());
    }

    #[test]
    fn default_widths_follow_aspect() {
        let p = MorphologyProfile::default_for(Species::Soybean);
        assert!((p.leaf_width_at(3) - 0.7 * p.leaf_length[3]).abs() < 1e-15);
    }

    #[test]
    fn bending_is_monotone_in_order() {
        let p = MorphologyProfile::default_for(Species::Maize);
        let b = p.bending.unwrap();
        let mut prev = f64::INFINITY;
        for k in -3..=22 {
            let v = b.total_bend_deg(k as f64);
            assert!(v < prev);
            prev = v;
        }
        assert_eq!(b.bend_fraction(1.0), 1.0);
    }
}
