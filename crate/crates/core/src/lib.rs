//! Numerical machinery for the Gelfand problem `-Δu = λe^u` outside a ball.
//!
//! The crate builds the entire radial solution `U` of `-ΔU = λ₀e^U`,
//! `U(0) = 0` (with `λ₀ = 2(N-2)`), analyses it in the Emden–Fowler phase
//! plane, inverts the linearized operator `Δ + λ₀e^{U_α}` mode by mode in
//! weighted sup-norms, and runs the contraction-mapping construction of
//! solutions on the exterior of the unit ball. A small three-dimensional
//! module evaluates the reduced field whose inward orientation drives the
//! `N = 3` construction.
//!
//! Modules:
//! - [`profile`]: radial profile, scaling family `U_α`, `λ_α`, bifurcation table
//! - [`phase`]: the planar system, equilibria, Lyapunov function, heteroclinic orbit, tail fits
//! - [`modes`]: Fourier-mode inversion and weighted norms
//! - [`exterior`]: harmonic correction, fixed-point solve, Newton cross-check, solution continuum
//! - [`reduction`]: cutoff generators, projection coefficients, reduced field
//! - [`io`]: CSV and JSON serialization

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exterior;
pub mod fit;
pub mod grid;
pub mod io;
pub mod modes;
pub mod norms;
pub mod ode;
pub mod phase;
pub mod profile;
pub mod quad;
pub mod reduction;

use serde::{Deserialize, Serialize};

pub use error::{GelfandError, Result};
pub use grid::RadialGrid;

/// Space dimension `N ≥ 3` together with `λ₀ = 2(N-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return error::invalid(format!("dimension must be at least 3, got {n}"));
        }
        Ok(Self(n))
    }

    #[inline]
    pub fn n(self) -> usize {
        self.0
    }

    #[inline]
    pub fn nf(self) -> f64 {
        self.0 as f64
    }

    /// `λ₀ = 2(N-2)`, the parameter of the singular solution `-2 log r`.
    #[inline]
    pub fn lambda0(self) -> f64 {
        2.0 * (self.nf() - 2.0)
    }

    /// Surface area of the unit sphere `S^{N-1}`.
    pub fn sphere_area(self) -> f64 {
        let n = self.nf();
        2.0 * std::f64::consts::PI.powf(n / 2.0) / gamma_half_integer(self.0)
    }
}

/// `Γ(n/2)` for integer `n ≥ 1`.
fn gamma_half_integer(n: usize) -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let (mut g, mut k) = if n.is_multiple_of(2) {
        (1.0, 2)
    } else {
        (sqrt_pi, 1)
    };
    while k + 2 <= n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}
