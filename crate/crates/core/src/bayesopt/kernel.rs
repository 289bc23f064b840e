use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supported Matérn smoothness values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MaternNu {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "3/2")]
    ThreeHalves,
    #[default]
    #[serde(rename = "5/2")]
    FiveHalves,
}

impl MaternNu {
    pub fn from_f64(nu: f64) -> Result<Self> {
        match nu {
            v if v == 0.5 => Ok(MaternNu::Half),
            v if v == 1.5 => Ok(MaternNu::ThreeHalves),
            v if v == 2.5 => Ok(MaternNu::FiveHalves),
            v => Err(Error::config(format!("unsupported Matern nu {v}; use 0.5, 1.5 or 2.5"))),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }

    /// Unit-variance correlation at scaled distance `r`.
    #[inline]
    pub fn correlation(self, r: f64) -> f64 {
        match self {
            MaternNu::Half => (-r).exp(),
            MaternNu::ThreeHalves => {
                let s = 3f64.sqrt() * r;
                (1.0 + s) * (-s).exp()
            }
            MaternNu::FiveHalves => {
                let s = 5f64.sqrt() * r;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        }
    }
}

/// Matérn covariance with per-dimension length scales.
pub fn matern_cov(x1: &[f64], x2: &[f64], length_scales: &[f64], variance: f64, nu: f64) -> Result<f64> {
    let nu = MaternNu::from_f64(nu)?;
    if x1.len() != x2.len() || x1.len() != length_scales.len() {
        return Err(Error::domain("matern_cov: dimension mismatch"));
    }
    if length_scales.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::domain("matern_cov: length scales must be positive"));
    }
    Ok(variance * nu.correlation(scaled_distance(x1, x2, length_scales)))
}

#[inline]
pub(crate) fn scaled_distance(a: &[f64], b: &[f64], ls: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(ls)
        .map(|((x, y), l)| {
            let t = (x - y) / l;
            t * t
        })
        .sum::<f64>()
        .sqrt()
}
