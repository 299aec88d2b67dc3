//! Weighted sup-norms
//! `‖φ‖_* = ‖φ‖_{L∞(B₁(ξ))} + sup_{ρ≥1} ρ^β |φ|` and
//! `‖h‖_** = sup_{ρ≤1} ρ^σ |h| + sup_{ρ≥1} ρ^{2+β} |h|`, `ρ = |x - ξ|`.
//!
//! Functions are passed as functions of `ρ`; every field in this crate is
//! radial about its center. Suprema are taken on a log-uniform sample with a
//! 10× refinement around the discrete maximiser.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::phase::linearization_eigenvalues;
use crate::Dimension;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormParams {
    pub beta: f64,
    pub sigma: f64,
    pub xi: Vec<f64>,
    /// bound `Z` with `|ξ| ≤ Z`
    pub z_bound: f64,
}

impl WeightedNormParams {
    pub fn new(dim: Dimension, beta: f64, sigma: f64, xi: Vec<f64>, z_bound: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 2.0) {
            return invalid(format!("sigma must lie in (0, 2), got {sigma}"));
        }
        let (_, upper) = beta_range(dim);
        if !(beta > 0.0 && beta < upper || (dim.n() >= 4 && beta == upper)) {
            return invalid(format!("beta = {beta} outside the admissible range (0, {upper})"));
        }
        if xi.len() != dim.n() {
            return invalid("center xi must have N components");
        }
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > z_bound {
            return invalid(format!("|xi| = {norm} exceeds Z = {z_bound}"));
        }
        Ok(Self {
            beta,
            sigma,
            xi,
            z_bound,
        })
    }

    /// `β = 0.5` (`0.25` for `N = 3`), `σ = 1`, `ξ = 0`, `Z = 1`.
    pub fn default_for(dim: Dimension) -> Self {
        let beta = if dim.n() == 3 { 0.25 } else { 0.5 };
        Self {
            beta,
            sigma: 1.0,
            xi: vec![0.0; dim.n()],
            z_bound: 1.0,
        }
    }
}

/// Admissible decay exponents `(0, upper)`: `1/2` for `N = 3`, else
/// `min{μ₀⁻, 1}` where `μ₀⁻` is the smaller root at infinity of the radial mode.
pub fn beta_range(dim: Dimension) -> (f64, f64) {
    match dim.n() {
        3 => (0.0, 0.5),
        4..=9 => (0.0, 1.0),
        _ => {
            // μ₀^- = -μ₊ in terms of the phase-plane eigenvalue
            let mu0_minus = -linearization_eigenvalues(dim).0.re;
            (0.0, mu0_minus.min(1.0))
        }
    }
}

/// Sampling of `ρ` used for the discrete suprema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSampling {
    pub rho_min: f64,
    pub rho_max: f64,
    pub nodes: usize,
}

impl Default for NormSampling {
    fn default() -> Self {
        Self {
            rho_min: 1e-4,
            rho_max: 1e4,
            nodes: 2001,
        }
    }
}

fn weighted_sup(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, nodes: usize) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let (a, b) = (lo.ln(), hi.ln());
    let h = (b - a) / (nodes - 1) as f64;
    let vals: Vec<f64> = (0..nodes).map(|k| f((a + k as f64 * h).exp()).abs()).collect();
    let (imax, vmax) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
            if *v > acc.1 || v.is_nan() {
                (i, *v)
            } else {
                acc
            }
        });
    if vmax.is_nan() {
        return f64::NAN;
    }
    let lo_s = a + imax.saturating_sub(1) as f64 * h;
    let hi_s = a + (imax + 1).min(nodes - 1) as f64 * h;
    let fine = 20;
    (0..=fine)
        .map(|k| f((lo_s + (hi_s - lo_s) * k as f64 / fine as f64).exp()).abs())
        .fold(vmax, f64::max)
}

fn split(s: &NormSampling) -> (usize, usize) {
    let la = s.rho_min.ln();
    let lb = s.rho_max.ln();
    let inner = if la < 0.0 {
        (((-la) / (lb - la)) * s.nodes as f64).ceil().max(8.0) as usize
    } else {
        0
    };
    (inner, s.nodes.saturating_sub(inner).max(8))
}

/// `‖φ‖_*` for `φ` given as a function of `ρ = |x - ξ|` on
/// `[sampling.rho_min, sampling.rho_max]`.
pub fn norm_star(phi: &dyn Fn(f64) -> f64, params: &WeightedNormParams, sampling: &NormSampling) -> f64 {
    let (ni, no) = split(sampling);
    let beta = params.beta;
    let inner = if sampling.rho_min < 1.0 {
        weighted_sup(phi, sampling.rho_min, sampling.rho_max.min(1.0), ni)
    } else {
        0.0
    };
    let outer = weighted_sup(
        &|r| r.powf(beta) * phi(r),
        sampling.rho_min.max(1.0),
        sampling.rho_max,
        no,
    );
    inner + outer
}

/// `‖h‖_**` with the same conventions as [`norm_star`].
pub fn norm_starstar(h: &dyn Fn(f64) -> f64, params: &WeightedNormParams, sampling: &NormSampling) -> f64 {
    let (ni, no) = split(sampling);
    let (beta, sigma) = (params.beta, params.sigma);
    let inner = if sampling.rho_min < 1.0 {
        weighted_sup(
            &|r| r.powf(sigma) * h(r),
            sampling.rho_min,
            sampling.rho_max.min(1.0),
            ni,
        )
    } else {
        0.0
    };
    let outer = weighted_sup(
        &|r| r.powf(2.0 + beta) * h(r),
        sampling.rho_min.max(1.0),
        sampling.rho_max,
        no,
    );
    inner + outer
}
