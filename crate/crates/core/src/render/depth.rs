use crate::error::{Error, Result};

/// Row-major grid of z-depths in meters; NaN marks background.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl DepthMap {
    pub fn empty(width: usize, height: usize) -> Self {
        DepthMap {
            width,
            height,
            data: vec![f32::NAN; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::domain(format!(
                "depth data has {} values for a {width}x{height} grid",
                data.len()
            )));
        }
        Ok(DepthMap { width, height, data })
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f32 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, v: f32) {
        self.data[row * self.width + col] = v;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Mask of finite, positive depths.
    pub fn finite_mask(&self) -> ForegroundMask {
        ForegroundMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|d| d.is_finite() && *d > 0.0).collect(),
        }
    }
}

/// Binary foreground grid aligned with a [`DepthMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForegroundMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl ForegroundMask {
    pub fn empty(width: usize, height: usize) -> Self {
        ForegroundMask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn same_shape(&self, depth: &DepthMap) -> bool {
        self.width == depth.width && self.height == depth.height
    }

    /// Require mask => finite positive depth.
    pub fn check_consistent(&self, depth: &DepthMap) -> Result<()> {
        if !self.same_shape(depth) {
            return Err(Error::domain(format!(
                "mask is {}x{}, depth is {}x{}",
                self.width, self.height, depth.width, depth.height
            )));
        }
        if let Some(i) = self
            .data
            .iter()
            .zip(&depth.data)
            .position(|(&m, &d)| m && !(d.is_finite() && d > 0.0))
        {
            return Err(Error::domain(format!(
                "mask pixel ({}, {}) has no valid depth",
                i % self.width,
                i / self.width
            )));
        }
        Ok(())
    }
}
