use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Log-uniform radial nodes `r_i = exp(s_0 + i h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    s0: f64,
    step: f64,
    len: usize,
}

impl RadialGrid {
    /// `len` nodes from `r_min` to `r_max` inclusive.
    pub fn log_uniform(r_min: f64, r_max: f64, len: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_min.is_finite() && r_max.is_finite()) {
            return invalid(format!(
                "grid bounds must satisfy 0 < r_min < r_max, got [{r_min}, {r_max}]"
            ));
        }
        if len < 8 {
            return invalid("grid needs at least 8 nodes");
        }
        let s0 = r_min.ln();
        let step = (r_max.ln() - s0) / (len - 1) as f64;
        Ok(Self { s0, step, len })
    }

    /// Nodes from `s0` with spacing `step`; used when a node must sit on a
    /// prescribed abscissa.
    pub fn from_log_step(s0: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0 && s0.is_finite()) || len < 8 {
            return invalid("log grid needs a positive step and at least 8 nodes");
        }
        Ok(Self { s0, step, len })
    }

    /// Default profile grid: 4000 nodes over `[1e-4, 1e3]`.
    pub fn default_profile() -> Self {
        Self::log_uniform(1e-4, 1e3, 4000).expect("static grid")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn s_min(&self) -> f64 {
        self.s0
    }

    pub fn s_max(&self) -> f64 {
        self.s(self.len - 1)
    }

    pub fn r_min(&self) -> f64 {
        self.s0.exp()
    }

    pub fn r_max(&self) -> f64 {
        self.s_max().exp()
    }

    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        self.s0 + i as f64 * self.step
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        self.s(i).exp()
    }

    pub fn s_nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.s(i)).collect()
    }

    pub fn r_nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.r(i)).collect()
    }

    /// Index of the node closest to radius `r` (clamped to the grid).
    pub fn nearest(&self, r: f64) -> usize {
        let pos = ((r.ln() - self.s0) / self.step).round();
        pos.clamp(0.0, (self.len - 1) as f64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_monotonicity() {
        let g = RadialGrid::default_profile();
        assert_eq!(g.len(), 4000);
        assert!((g.r_min() - 1e-4).abs() < 1e-16);
        assert!((g.r_max() / 1e3 - 1.0).abs() < 1e-12);
        let r = g.r_nodes();
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(RadialGrid::log_uniform(0.0, 1.0, 100).is_err());
        assert!(RadialGrid::log_uniform(2.0, 1.0, 100).is_err());
        assert!(RadialGrid::log_uniform(1.0, 2.0, 3).is_err());
    }
}
