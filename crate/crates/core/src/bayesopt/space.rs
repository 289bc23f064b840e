use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::Species;

/// Axis-aligned search box with named dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(names: Vec<String>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let s = SearchSpace { names, lower, upper };
        s.validate()?;
        Ok(s)
    }

    pub fn unit(dim: usize) -> Self {
        SearchSpace {
            names: (0..dim).map(|i| format!("x{i}")).collect(),
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn for_species(species: Species) -> Self {
        let b = species.bounds();
        SearchSpace {
            names: b.iter().map(|p| p.name.to_string()).collect(),
            lower: b.iter().map(|p| p.lower).collect(),
            upper: b.iter().map(|p| p.upper).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() || self.names.len() != self.lower.len() {
            return Err(Error::config("search space needs matching, non-empty names/lower/upper"));
        }
        for i in 0..self.dim() {
            if !(self.lower[i] < self.upper[i]) || !self.lower[i].is_finite() || !self.upper[i].is_finite() {
                return Err(Error::config(format!(
                    "search dimension {} has invalid bounds [{}, {}]",
                    self.names[i], self.lower[i], self.upper[i]
                )));
            }
        }
        Ok(())
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| (v - self.lower[i]) / (self.upper[i] - self.lower[i]))
            .collect()
    }

    /// Maps a unit-box point into the box; the result is clamped to the bounds.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, t)| (self.lower[i] + t * (self.upper[i] - self.lower[i])).clamp(self.lower[i], self.upper[i]))
            .collect()
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| v.clamp(self.lower[i], self.upper[i])).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }
}
