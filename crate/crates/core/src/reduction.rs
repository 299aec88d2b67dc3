//! Bookkeeping for the three-dimensional reduction: cutoff generators
//! `Φ_i = η ∂_iU_α`, projection coefficients `c_i`, and the leading-order
//! reduced field `G(ξ) = f₀λ^{1/2} I(ξ)`, `I_j(ξ) = ∫|x-ξ|^{-1}e^{U_α}∂_jU_α`.
//!
//! Only the leading order of `G` is assembled; the remainder needs a
//! non-radial solve.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GelfandError, Result};
use crate::profile::RadialProfile;
use crate::quad::gauss_legendre;

pub type Point = [f64; 3];

/// Smooth radial cutoff, `η = 1` for `|x| ≤ inner`, `0` for `|x| ≥ outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self {
            inner_radius: 1.0,
            outer_radius: 2.0,
        }
    }
}

impl CutoffSpec {
    pub fn eta(&self, r: f64) -> f64 {
        let bump = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
        let t = (r - self.inner_radius) / (self.outer_radius - self.inner_radius);
        if t <= 0.0 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        let (a, b) = (bump(1.0 - t), bump(t));
        a / (a + b)
    }
}

fn norm(x: &Point) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn check_profile(profile: &RadialProfile) -> Result<()> {
    if profile.dim().n() != 3 {
        return invalid("the reduction is defined for N = 3");
    }
    Ok(())
}

/// `Φ_i(x) = η(|x|) U_α'(|x|) x_i/|x|`, `i ∈ {0, 1, 2}`.
pub fn cutoff_field(i: usize, x: &Point, profile: &RadialProfile, alpha: f64, spec: &CutoffSpec) -> f64 {
    let r = norm(x);
    if r == 0.0 || r >= spec.outer_radius {
        return 0.0;
    }
    spec.eta(r) * profile.scaled_du(alpha, r) * x[i] / r
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` panels of `n` points.
fn panel_rule(a: f64, b: f64, panels: usize, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let lo = a + p as f64 * h;
            x.iter()
                .zip(&w)
                .map(move |(xi, wi)| (lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Tensor quadrature of `f` over the shell `r_lo ≤ |x| ≤ r_hi` in spherical
/// coordinates. `breaks` are extra radii where `f` is not smooth.
fn shell_integral(f: &dyn Fn(&Point) -> f64, r_lo: f64, r_hi: f64, breaks: &[f64], n: usize) -> f64 {
    let mut edges = vec![r_lo];
    edges.extend(breaks.iter().copied().filter(|b| *b > r_lo && *b < r_hi));
    edges.push(r_hi);
    let radial: Vec<(f64, f64)> = edges
        .windows(2)
        .flat_map(|e| panel_rule(e[0], e[1], 8, n))
        .collect();
    let polar = panel_rule(-1.0, 1.0, 1, 2 * n);
    let n_phi = 4 * n;
    let dphi = std::f64::consts::TAU / n_phi as f64;
    let mut acc = 0.0;
    for (r, wr) in &radial {
        for (ct, wt) in &polar {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for k in 0..n_phi {
                let ph = (k as f64 + 0.5) * dphi;
                let x = [r * st * ph.cos(), r * st * ph.sin(), r * ct];
                acc += wr * wt * dphi * r * r * f(&x);
            }
        }
    }
    acc
}

/// Projection onto the cutoff generators.
#[derive(Debug, Clone)]
pub struct Projector<'a> {
    profile: &'a RadialProfile,
    alpha: f64,
    spec: CutoffSpec,
    /// `∫η (∂_iU_α)²`, identical for the three axes
    pub denominator: f64,
}

impl<'a> Projector<'a> {
    pub fn new(profile: &'a RadialProfile, alpha: f64, spec: CutoffSpec) -> Result<Self> {
        check_profile(profile)?;
        if !(alpha > 0.0) || !(spec.inner_radius > 0.0 && spec.outer_radius > spec.inner_radius) {
            return invalid("alpha must be positive and the cutoff radii ordered");
        }
        // angular factor ∫x_i²/r² dΩ = 4π/3
        let rule: Vec<(f64, f64)> = panel_rule(0.0, spec.inner_radius, 8, 12)
            .into_iter()
            .chain(panel_rule(spec.inner_radius, spec.outer_radius, 16, 12))
            .collect();
        let radial: f64 = rule
            .iter()
            .map(|(r, w)| w * spec.eta(*r) * profile.scaled_du(alpha, *r).powi(2) * r * r)
            .sum();
        let denominator = 4.0 * std::f64::consts::PI / 3.0 * radial;
        Ok(Self {
            profile,
            alpha,
            spec,
            denominator,
        })
    }

    /// `c_i = -∫hΦ_i / ∫η(∂_iU_α)²`.
    pub fn coefficients(&self, h: &dyn Fn(&Point) -> f64) -> Result<[f64; 3]> {
        let mut c = [0.0; 3];
        for (i, ci) in c.iter_mut().enumerate() {
            let f = |x: &Point| h(x) * cutoff_field(i, x, self.profile, self.alpha, &self.spec);
            let num = shell_integral(&f, 0.0, self.spec.outer_radius, &[self.spec.inner_radius], 10);
            if !num.is_finite() {
                return Err(GelfandError::Divergent(
                    "projection numerator is not finite".into(),
                ));
            }
            *ci = -num / self.denominator;
        }
        Ok(c)
    }
}

pub fn projection_coefficients(
    h: &dyn Fn(&Point) -> f64,
    profile: &RadialProfile,
    alpha: f64,
    spec: CutoffSpec,
) -> Result<[f64; 3]> {
    Projector::new(profile, alpha, spec)?.coefficients(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedField {
    pub xi: Point,
    pub g: Point,
    pub lambda: f64,
    pub quadrature_error: f64,
    /// `∇U_α(ξ)`, reported alongside `G` without a fitted constant
    pub profile_gradient: Point,
}

impl ReducedField {
    pub fn dot_xi(&self) -> f64 {
        self.g.iter().zip(&self.xi).map(|(a, b)| a * b).sum()
    }
}

/// `ξ̂·I(ξ)` for `ρ = |ξ| > 0` using the `l = 1` Legendre term of `|x-ξ|^{-1}`:
/// `(4π/3)∫ F'(r) r² r_</r_>² dr`, `F = e^{U_α}`. The part `r > ρ` is
/// `-(4π/3)ρF(ρ)` in closed form; the rest is Gauss–Legendre with `n` points
/// per panel.
fn radial_component(profile: &RadialProfile, alpha: f64, rho: f64, n: usize) -> f64 {
    let f = |r: f64| profile.scaled(alpha, r).exp();
    let inner: f64 = panel_rule(0.0, rho, 8, n)
        .iter()
        .map(|(r, w)| w * f(*r) * profile.scaled_du(alpha, *r) * r * r * r)
        .sum::<f64>()
        / (rho * rho);
    4.0 * std::f64::consts::PI / 3.0 * (inner - rho * f(rho))
}

/// Shell-theorem form `ξ̂·I(ξ) = -4π m(ρ)/ρ²`, `m(ρ) = ∫₀^ρ e^{U_α} r² dr`;
/// an independent check of [`reduced_field_leading`].
pub fn shell_component(profile: &RadialProfile, alpha: f64, rho: f64) -> f64 {
    let m: f64 = panel_rule(0.0, rho, 16, 16)
        .iter()
        .map(|(r, w)| w * profile.scaled(alpha, *r).exp() * r * r)
        .sum();
    -4.0 * std::f64::consts::PI * m / (rho * rho)
}

/// Leading-order reduced field `G = f₀λ^{1/2}I(ξ)`.
pub fn reduced_field_leading(
    xi: &Point,
    lambda: f64,
    profile: &RadialProfile,
    alpha: f64,
    f0: f64,
) -> Result<ReducedField> {
    check_profile(profile)?;
    if !(lambda > 0.0) || !(alpha > 0.0) || xi.iter().any(|v| !v.is_finite()) {
        return invalid("lambda and alpha must be positive and xi finite");
    }
    let rho = norm(xi);
    if rho == 0.0 {
        return Ok(ReducedField {
            xi: *xi,
            g: [0.0; 3],
            lambda,
            quadrature_error: 0.0,
            profile_gradient: [0.0; 3],
        });
    }
    let coarse = radial_component(profile, alpha, rho, 10);
    let fine = radial_component(profile, alpha, rho, 20);
    if !fine.is_finite() {
        return Err(GelfandError::Divergent(
            "reduced-field quadrature is not finite".into(),
        ));
    }
    let scale = f0 * lambda.sqrt();
    let du = profile.scaled_du(alpha, rho);
    Ok(ReducedField {
        xi: *xi,
        g: xi.map(|v| scale * fine * v / rho),
        lambda,
        quadrature_error: scale * (fine - coarse).abs(),
        profile_gradient: xi.map(|v| du * v / rho),
    })
}

/// `|∫_{|x|=ε} ∂_nφ ∂_iU_α dS + ∫_{ε<|x|<r_outer} h ∂_iU_α dx|`, with the hole
/// centred at the origin. For radial inputs both terms vanish by parity.
pub fn boundary_flux_defect(
    i: usize,
    dphi_dn: &dyn Fn(&Point) -> f64,
    h: &dyn Fn(&Point) -> f64,
    profile: &RadialProfile,
    alpha: f64,
    epsilon: f64,
    r_outer: f64,
) -> Result<f64> {
    check_profile(profile)?;
    if i > 2 || !(epsilon > 0.0 && r_outer > epsilon) {
        return invalid("axis must be 0..3 and 0 < epsilon < r_outer");
    }
    let grad_i = |x: &Point| {
        let r = norm(x);
        profile.scaled_du(alpha, r) * x[i] / r
    };
    // surface term: unit-sphere rule scaled by ε²
    let n = 16;
    let polar = panel_rule(-1.0, 1.0, 1, 2 * n);
    let n_phi = 4 * n;
    let dphi = std::f64::consts::TAU / n_phi as f64;
    let mut surface = 0.0;
    for (ct, wt) in &polar {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for k in 0..n_phi {
            let ph = (k as f64 + 0.5) * dphi;
            let x = [epsilon * st * ph.cos(), epsilon * st * ph.sin(), epsilon * ct];
            surface += wt * dphi * epsilon * epsilon * dphi_dn(&x) * grad_i(&x);
        }
    }
    let volume = shell_integral(&|x| h(x) * grad_i(x), epsilon, r_outer, &[1.0, 2.0], 10);
    Ok((surface + volume).abs())
}
