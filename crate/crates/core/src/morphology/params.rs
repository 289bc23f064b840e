use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Soybean,
    Maize,
}

impl Species {
    /// Names and box bounds of the optimized parameters, in vector order.
    pub fn bounds(self) -> &'static [ParamBound] {
        match self {
            Species::Soybean => &SOYBEAN_BOUNDS,
            Species::Maize => &MAIZE_BOUNDS,
        }
    }

    pub fn dim(self) -> usize {
        self.bounds().len()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Species::Soybean => "soybean",
            Species::Maize => "maize",
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Species {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "soybean" => Ok(Species::Soybean),
            "maize" | "corn" => Ok(Species::Maize),
            other => Err(Error::domain(format!(
                "unknown species `{other}` (expected soybean or maize)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBound {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
}

impl ParamBound {
    const fn new(name: &'static str, lower: f64, upper: f64) -> Self {
        ParamBound { name, lower, upper }
    }

    fn check(&self, value: f64) -> Result<()> {
        if value.is_finite() && value >= self.lower && value <= self.upper {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                field: self.name,
                value,
                lower: self.lower,
                upper: self.upper,
            })
        }
    }
}

const SOYBEAN_BOUNDS: [ParamBound; 5] = [
    ParamBound::new("leaf_length_mult", 0.5, 1.5),
    ParamBound::new("petiole_length_mult", 0.5, 2.0),
    ParamBound::new("petiole_angle_mult", 0.5, 4.0),
    ParamBound::new("internode_length_mult", 0.5, 2.0),
    ParamBound::new("num_nodes", 1.0, 14.0),
];

const MAIZE_BOUNDS: [ParamBound; 4] = [
    ParamBound::new("leaf_length_mult", 0.8, 1.2),
    ParamBound::new("leaf_order_shift", -4.0, 4.0),
    ParamBound::new("internode_length_mult", 0.8, 1.2),
    ParamBound::new("num_nodes", 1.0, 18.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoybeanParams {
    pub leaf_length_mult: f64,
    pub petiole_length_mult: f64,
    pub petiole_angle_mult: f64,
    pub internode_length_mult: f64,
    pub num_nodes: f64,
}

impl SoybeanParams {
    /// All multipliers at 1 with the given node count.
    pub fn unit(num_nodes: f64) -> Self {
        SoybeanParams {
            leaf_length_mult: 1.0,
            petiole_length_mult: 1.0,
            petiole_angle_mult: 1.0,
            internode_length_mult: 1.0,
            num_nodes,
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.leaf_length_mult,
            self.petiole_length_mult,
            self.petiole_angle_mult,
            self.internode_length_mult,
            self.num_nodes,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        check_dim(Species::Soybean, v)?;
        let p = SoybeanParams {
            leaf_length_mult: v[0],
            petiole_length_mult: v[1],
            petiole_angle_mult: v[2],
            internode_length_mult: v[3],
            num_nodes: v[4],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (b, v) in SOYBEAN_BOUNDS.iter().zip(self.to_array()) {
            b.check(v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaizeParams {
    pub leaf_length_mult: f64,
    pub leaf_order_shift: f64,
    pub internode_length_mult: f64,
    pub num_nodes: f64,
}

impl MaizeParams {
    pub fn unit(num_nodes: f64) -> Self {
        MaizeParams {
            leaf_length_mult: 1.0,
            leaf_order_shift: 0.0,
            internode_length_mult: 1.0,
            num_nodes,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [
            self.leaf_length_mult,
            self.leaf_order_shift,
            self.internode_length_mult,
            self.num_nodes,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        check_dim(Species::Maize, v)?;
        let p = MaizeParams {
            leaf_length_mult: v[0],
            leaf_order_shift: v[1],
            internode_length_mult: v[2],
            num_nodes: v[3],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (b, v) in MAIZE_BOUNDS.iter().zip(self.to_array()) {
            b.check(v)?;
        }
        Ok(())
    }
}

/// Species-tagged parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlantParams {
    Soybean(SoybeanParams),
    Maize(MaizeParams),
}

impl PlantParams {
    pub fn species(&self) -> Species {
        match self {
            PlantParams::Soybean(_) => Species::Soybean,
            PlantParams::Maize(_) => Species::Maize,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            PlantParams::Soybean(p) => p.to_array().to_vec(),
            PlantParams::Maize(p) => p.to_array().to_vec(),
        }
    }

    /// Build from a raw vector, rejecting out-of-bounds components.
    pub fn from_slice(species: Species, v: &[f64]) -> Result<Self> {
        Ok(match species {
            Species::Soybean => PlantParams::Soybean(SoybeanParams::from_slice(v)?),
            Species::Maize => PlantParams::Maize(MaizeParams::from_slice(v)?),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PlantParams::Soybean(p) => p.validate(),
            PlantParams::Maize(p) => p.validate(),
        }
    }

    pub fn num_nodes(&self) -> f64 {
        match self {
            PlantParams::Soybean(p) => p.num_nodes,
            PlantParams::Maize(p) => p.num_nodes,
        }
    }
}

fn check_dim(species: Species, v: &[f64]) -> Result<()> {
    if v.len() == species.dim() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{species} parameter vector needs {} components, got {}",
            species.dim(),
            v.len()
        )))
    }
}

/// Clamp each component of `raw` into the species' parameter box.
pub fn clamp_params(raw: &[f64], species: Species) -> Result<PlantParams> {
    check_dim(species, raw)?;
    if let Some(i) = raw.iter().position(|v| v.is_nan()) {
        return Err(Error::domain(format!(
            "parameter `{}` is NaN",
            species.bounds()[i].name
        )));
    }
    let clamped: Vec<f64> = raw
        .iter()
        .zip(species.bounds())
        .map(|(&v, b)| v.clamp(b.lower, b.upper))
        .collect();
    PlantParams::from_slice(species, &clamped)
}

/// On-disk parameter record `{species, values[], seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub species: Species,
    pub values: Vec<f64>,
    pub seed: RandomSeed,
}

impl ParamsRecord {
    pub fn new(params: &PlantParams, seed: RandomSeed) -> Self {
        ParamsRecord {
            species: params.species(),
            values: params.to_vec(),
            seed,
        }
    }

    pub fn params(&self) -> Result<PlantParams> {
        PlantParams::from_slice(self.species, &self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_soybean_low_leaf_length() {
        let p = clamp_params(&[0.0, 1.0, 1.0, 1.0, 7.0], Species::Soybean).unwrap();
        assert_eq!(p.to_vec(), vec![0.5, 1.0, 1.0, 1.0, 7.0]);
    }

    #[test]
    fn clamp_in_range_is_identity() {
        let v = [1.2, 1.7, 3.9, 0.6, 13.5];
        assert_eq!(clamp_params(&v, Species::Soybean).unwrap().to_vec(), v.to_vec());
    }

    #[test]
    fn clamp_maize_order_shift() {
        let p = clamp_params(&[1.0, 9.0, 1.0, 18.0], Species::Maize).unwrap();
        assert_eq!(p.to_vec(), vec![1.0, 4.0, 1.0, 18.0]);
    }

    #[test]
    fn wrong_dimension_is_domain_error() {
        assert!(matches!(
            clamp_params(&[1.0; 4], Species::Soybean),
            Err(Error::Domain(_))
        ));
        assert!(clamp_params(&[1.0; 5], Species::Maize).is_err());
    }

    #[test]
    fn out_of_bounds_names_field() {
        let err = SoybeanParams::from_slice(&[1.0, 1.0, 4.5, 1.0, 3.0]).unwrap_err();
        assert!(err.to_string().contains("petiole_angle_mult"), "{err}");
        let err = MaizeParams::from_slice(&[1.0, 0.0, 1.0, 19.0]).unwrap_err();
        assert!(err.to_string().contains("num_nodes"), "{err}");
    }

    #[test]
    fn species_parse() {
        assert_eq!("Soybean".parse::<Species>().unwrap(), Species::Soybean);
        assert!("wheat".parse::<Species>().is_err());
    }

    #[test]
    fn record_json_shape() {
        let rec = ParamsRecord::new(&PlantParams::Maize(MaizeParams::unit(10.0)), RandomSeed(9));
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(json, r#"{"species":"maize","values":[1.0,0.0,1.0,10.0],"seed":9}"#);
        let back: ParamsRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.params().unwrap(), PlantParams::Maize(MaizeParams::unit(10.0)));
    }
}
