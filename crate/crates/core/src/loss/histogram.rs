use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equal-width bins over `[lower, upper]`; values outside fall into the end bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bins: usize,
    pub lower: f64,
    pub upper: f64,
}

impl HistogramSpec {
    pub fn new(bins: usize, lower: f64, upper: f64) -> Result<Self> {
        let s = HistogramSpec { bins, lower, upper };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || !(self.lower < self.upper) || !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::domain(format!(
                "invalid histogram spec: {} bins over [{}, {}]",
                self.bins, self.lower, self.upper
            )));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        (self.upper - self.lower) / self.bins as f64
    }

    /// Bin index of `v`, clamped into range.
    pub fn bin(&self, v: f64) -> usize {
        let t = ((v - self.lower) / self.bin_width()).floor();
        if t <= 0.0 {
            0
        } else {
            (t as usize).min(self.bins - 1)
        }
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.lower + (k as f64 + 0.5) * self.bin_width()
    }
}

/// Normalized histogram (sums to 1), or zeros when there are no values.
pub fn normalized_histogram(values: impl IntoIterator<Item = f64>, spec: &HistogramSpec) -> Vec<f64> {
    let mut h = vec![0.0; spec.bins];
    let mut n = 0usize;
    for v in values {
        h[spec.bin(v)] += 1.0;
        n += 1;
    }
    if n > 0 {
        let n = n as f64;
        h.iter_mut().for_each(|x| *x /= n);
    }
    h
}
