//! Uniform per-dimension binning of continuous actions.

use crate::error::{Error, Result};

/// `B` equal-width bins per action dimension, decoded at bin centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    low: Vec<f64>,
    high: Vec<f64>,
    bins: usize,
}

impl Discretizer {
    pub fn new(low: Vec<f64>, high: Vec<f64>, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 bins, got {bins}"
            )));
        }
        if low.len() != high.len() || low.is_empty() {
            return Err(Error::InvalidArgument(
                "low/high must be non-empty and equal length".into(),
            ));
        }
        if let Some(i) = (0..low.len()).find(|&i| !(low[i] < high[i])) {
            return Err(Error::InvalidArgument(format!(
                "dimension {i}: low {} must be below high {}",
                low[i], high[i]
            )));
        }
        Ok(Self { low, high, bins })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn dims(&self) -> usize {
        self.low.len()
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.high)
    }

    pub fn width(&self, dim: usize) -> f64 {
        (self.high[dim] - self.low[dim]) / self.bins as f64
    }

    /// `clamp(floor((x - low) / w), 0, B - 1)`.
    pub fn to_bin(&self, x: f64, dim: usize) -> usize {
        let k = ((x - self.low[dim]) / self.width(dim)).floor();
        if k.is_nan() || k < 0.0 {
            0
        } else {
            (k as usize).min(self.bins - 1)
        }
    }

    pub fn to_continuous(&self, k: usize, dim: usize) -> Result<f64> {
        if k >= self.bins {
            return Err(Error::BinOutOfRange {
                index: k,
                bins: self.bins,
            });
        }
        Ok(self.center(k, dim))
    }

    /// Bin center without the range check; `k` must be below `bins()`.
    pub(crate) fn center(&self, k: usize, dim: usize) -> f64 {
        self.low[dim] + (k as f64 + 0.5) * self.width(dim)
    }

    pub fn encode(&self, action: &[f64]) -> Vec<usize> {
        action
            .iter()
            .enumerate()
            .map(|(d, &x)| self.to_bin(x, d))
            .collect()
    }

    pub fn decode(&self, bins: &[usize]) -> Vec<f64> {
        bins.iter()
            .enumerate()
            .map(|(d, &k)| self.center(k, d))
            .collect()
    }
}
