//! The exterior construction for `D = B₁`, `ξ = 0`.
//!
//! In scaled variables `y = √(λ/λ₀)·x` the problem `-Δu = λe^u`, `u = 0` on
//! `|x| = 1` becomes `-Δũ = λ₀e^ũ` on `|y| > ε = √(λ/λ₀)`, `ũ(ε) = 0`. With
//! `ũ = U_α - φ_λ + φ`, where `φ_λ` is the harmonic function equal to `U_α`
//! on `|y| = ε`, the correction solves
//! `Δφ + λ₀e^{U_α}φ = M(φ) + E_λ`, `φ(ε) = 0`, and is found as the fixed point
//! of `φ ↦ Ψ(M(φ) + E_λ)`.
//!
//! Both homogeneous solutions of the radial operator decay at infinity, so
//! `φ(ε) = 0` plus decay does not determine `φ`. The inverse `Ψ` fixes the
//! free multiple by the condition `r^{N-1}W(φ, z₂)(1) = 0`, which the Newton
//! cross-check imposes as its outer boundary condition.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GelfandError, Result};
use crate::grid::RadialGrid;
use crate::modes::{homogeneous_pair, sphere_eigenvalue, HomogeneousPair};
use crate::norms::{beta_range, norm_star, norm_starstar, NormSampling, WeightedNormParams};
use crate::ode::{Dopri5, ErrorControl};
use crate::phase::{self, PhaseState, Trajectory};
use crate::profile::RadialProfile;
use crate::quad;
use crate::{fit, Dimension};

/// Target node spacing in `log r`.
const STEP: f64 = 0.004;
/// `|d|` below which `e^d - 1 - d` is summed as a series.
const SERIES_CUTOFF: f64 = 1e-4;
const OVERFLOW_LIMIT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorConfig {
    pub dim: Dimension,
    pub alpha: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub beta: f64,
    /// outer truncation radius in scaled variables
    pub r_max: f64,
    /// stopping tolerance for `‖φ^{n+1} - φ^n‖_*`
    pub tol: f64,
    pub max_iterations: usize,
}

impl ExteriorConfig {
    pub fn new(dim: Dimension, alpha: f64, lambda: f64) -> Result<Self> {
        let cfg = Self {
            dim,
            alpha,
            lambda,
            sigma: 1.8,
            beta: 0.5 * beta_range(dim).1,
            r_max: 1e4,
            tol: 1e-12,
            max_iterations: 50,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.lambda > 0.0) {
            return invalid("alpha and lambda must be positive");
        }
        if !(self.epsilon() < 0.1) {
            return invalid(format!(
                "epsilon = sqrt(lambda/lambda0) = {} must be below 0.1",
                self.epsilon()
            ));
        }
        if !(self.r_max >= 1e3) {
            return invalid("r_max must be at least 1e3");
        }
        if !(self.tol > 0.0) || self.max_iterations < 2 {
            return invalid("tol must be positive and max_iterations at least 2");
        }
        WeightedNormParams::new(self.dim, self.beta, self.sigma, vec![0.0; self.dim.n()], 1.0)?;
        Ok(())
    }

    /// Inner radius `ε = √(λ/λ₀)` of the scaled hole.
    pub fn epsilon(&self) -> f64 {
        (self.lambda / self.dim.lambda0()).sqrt()
    }

    pub fn norm_params(&self) -> WeightedNormParams {
        WeightedNormParams {
            beta: self.beta,
            sigma: self.sigma,
            xi: vec![0.0; self.dim.n()],
            z_bound: 1.0,
        }
    }

    /// Log-uniform scaled grid from `ε` to at least `r_max`, spacing close to
    /// 0.004, with `r = 1` an exact node.
    pub fn grid(&self) -> RadialGrid {
        let s0 = self.epsilon().ln();
        let k = (-s0 / STEP).ceil();
        let h = -s0 / k;
        let len = k as usize + (self.r_max.ln() / h).ceil() as usize + 1;
        RadialGrid::from_log_step(s0, h, len).expect("valid exterior grid")
    }
}

/// `φ_λ(r) = U_α(ε)(ε/r)^{N-2}` and the capacity constant of the unit ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicCorrection {
    pub boundary_value: f64,
    pub epsilon: f64,
    pub n: usize,
    pub f0: f64,
    pub values: Vec<f64>,
}

impl HarmonicCorrection {
    pub fn eval(&self, r: f64) -> f64 {
        self.boundary_value * (self.epsilon / r).powi(self.n as i32 - 2)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        -(self.n as f64 - 2.0) * self.eval(r) / r
    }
}

pub fn harmonic_potential(config: &ExteriorConfig, profile: &RadialProfile) -> HarmonicCorrection {
    let eps = config.epsilon();
    let mut hc = HarmonicCorrection {
        boundary_value: profile.scaled(config.alpha, eps),
        epsilon: eps,
        n: config.dim.n(),
        f0: 1.0,
        values: Vec::new(),
    };
    hc.values = config.grid().r_nodes().iter().map(|r| hc.eval(*r)).collect();
    // the first node is r = ε to rounding; pin the boundary value exactly
    hc.values[0] = hc.boundary_value;
    hc
}

/// Capacity potential of the unit ball computed numerically, with the two
/// characterisations of `f₀`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityReport {
    /// `lim r^{N-2} φ₀(r)`, read at the outer radius
    pub f0_limit: f64,
    /// `(1/((N-2)|S^{N-1}|)) ∫_{|x|>1} |∇φ₀|²`
    pub f0_energy: f64,
}

/// Solve `Δφ₀ = 0`, `φ₀(1) = 1`, `φ₀ → 0` by finite differences in
/// `s = log r` on `[0, log r_max]`, closed by the decaying branch
/// `φ₀' = -(N-2)φ₀/r` at `r_max`, and evaluate both forms of `f₀`.
pub fn capacity(dim: Dimension, r_max: f64, nodes: usize) -> Result<CapacityReport> {
    if !(r_max > 10.0) || nodes < 16 {
        return invalid("capacity needs r_max > 10 and at least 16 nodes");
    }
    let nm2 = dim.nf() - 2.0;
    let m = nodes - 1;
    let h = r_max.ln() / m as f64;
    // φ_ss + (N-2)φ_s = 0; unknowns φ_1..φ_m, φ_0 = 1
    let lo = 1.0 / (h * h) - nm2 / (2.0 * h);
    let hi = 1.0 / (h * h) + nm2 / (2.0 * h);
    let mut sub = vec![lo; m];
    let mut diag = vec![-2.0 / (h * h); m];
    let mut sup = vec![hi; m];
    let mut rhs = vec![0.0; m];
    rhs[0] = -lo;
    // ghost from φ_s = -(N-2)φ at the last node
    sub[m - 1] = lo + hi;
    diag[m - 1] = -2.0 / (h * h) - hi * 2.0 * h * nm2;
    sup[m - 1] = 0.0;
    let phi_inner = thomas(&sub, &diag, &sup, &rhs)?;
    let mut phi = vec![1.0];
    phi.extend(phi_inner);
    let f0_limit = (nm2 * r_max.ln()).exp() * phi[m];
    // energy ∫|∇φ|² = |S| ∫ φ_s² e^{(N-2)s} ds plus the exact tail of the decaying branch
    let d = quad::derivative6(&phi, h);
    let ds: Vec<f64> = (0..=m)
        .map(|i| {
            d[i].unwrap_or_else(|| {
                if i == 0 {
                    (-25.0 * phi[0] + 48.0 * phi[1] - 36.0 * phi[2] + 16.0 * phi[3] - 3.0 * phi[4])
                        / (12.0 * h)
                } else if i < 3 {
                    (phi[i + 1] - phi[i - 1]) / (2.0 * h)
                } else if i == m {
                    -nm2 * phi[m]
                } else {
                    (phi[i + 1] - phi[i - 1]) / (2.0 * h)
                }
            })
        })
        .collect();
    let f: Vec<f64> = (0..=m)
        .map(|i| ds[i] * ds[i] * (nm2 * i as f64 * h).exp())
        .collect();
    let body = quad::cumulative(&f, h)[m];
    let tail = f[m] / nm2;
    let f0_energy = (body + tail) / nm2;
    Ok(CapacityReport { f0_limit, f0_energy })
}

/// Tridiagonal solve; `sub[0]` and `sup[n-1]` are ignored.
pub(crate) fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta.abs() < 1e-300 {
        return Err(GelfandError::Singular("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        if beta.abs() < 1e-300 || !beta.is_finite() {
            return Err(GelfandError::Singular(format!("zero pivot at row {i}")));
        }
        c[i] = if i + 1 < n { sup[i] / beta } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Shared data of one exterior solve on the scaled grid.
#[derive(Debug, Clone)]
pub struct ExteriorProblem<'a> {
    pub config: ExteriorConfig,
    pub profile: &'a RadialProfile,
    pub grid: RadialGrid,
    /// `U_α` at the nodes
    pub u_alpha: Vec<f64>,
    /// `λ₀e^{U_α}` at the nodes
    pub weight: Vec<f64>,
    pub correction: HarmonicCorrection,
    pub pair: HomogeneousPair,
    sampling: NormSampling,
}

impl<'a> ExteriorProblem<'a> {
    pub fn new(config: &ExteriorConfig, profile: &'a RadialProfile) -> Result<Self> {
        config.validate()?;
        if profile.dim() != config.dim {
            return invalid("profile dimension differs from the configuration");
        }
        let grid = config.grid();
        let alpha = config.alpha;
        let r = grid.r_nodes();
        let u_alpha: Vec<f64> = r.iter().map(|r| profile.scaled(alpha, *r)).collect();
        let weight: Vec<f64> = grid
            .s_nodes()
            .iter()
            .map(|s| profile.v1(s + alpha.ln()) * (-2.0 * s).exp())
            .collect();
        let correction = harmonic_potential(config, profile);
        let pair = homogeneous_pair(profile, alpha, sphere_eigenvalue(config.dim, 0), &grid)?;
        let sampling = NormSampling {
            rho_min: grid.r_min(),
            rho_max: grid.r_max(),
            nodes: grid.len().min(4001),
        };
        Ok(Self {
            config: config.clone(),
            profile,
            grid,
            u_alpha,
            weight,
            correction,
            pair,
            sampling,
        })
    }

    fn eval(&self, values: &[f64], r: f64) -> f64 {
        let s = r.ln().clamp(self.grid.s_min(), self.grid.s_max());
        quad::lagrange4(values, self.grid.s_min(), self.grid.step(), s)
    }

    pub fn norm_star(&self, values: &[f64]) -> f64 {
        norm_star(
            &|r| self.eval(values, r),
            &self.config.norm_params(),
            &self.sampling,
        )
    }

    pub fn norm_starstar(&self, values: &[f64]) -> f64 {
        norm_starstar(
            &|r| self.eval(values, r),
            &self.config.norm_params(),
            &self.sampling,
        )
    }

    /// `E_λ = λ₀e^{U_α}φ_λ` at the nodes.
    pub fn error_term(&self) -> Vec<f64> {
        self.weight
            .iter()
            .zip(&self.correction.values)
            .map(|(w, p)| w * p)
            .collect()
    }

    /// `M(φ) = -λ₀e^{U_α}(e^d - 1 - d)`, `d = φ - φ_λ`.
    pub fn nonlinear_term(&self, phi: &[f64]) -> Result<Vec<f64>> {
        phi.iter()
            .zip(&self.correction.values)
            .zip(&self.weight)
            .map(|((p, pl), w)| {
                if !(p.abs() <= OVERFLOW_LIMIT) {
                    return Err(GelfandError::Overflow(p.abs()));
                }
                Ok(-w * exp_remainder(p - pl))
            })
            .collect()
    }

    /// `Ψ(h)`: the solution of `φ'' + (N-1)φ'/r + λ₀e^{U_α}φ = h` with
    /// `φ(ε) = 0` and `r^{N-1}W(φ, z₂)(1) = 0`.
    pub fn linear_inverse(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.grid.len() || h.iter().any(|v| !v.is_finite()) {
            return invalid("right-hand side must be finite on the exterior grid");
        }
        let nf = self.config.dim.nf();
        let (z1, z2) = (&self.pair.z1.values, &self.pair.z2.values);
        let s = self.grid.s_nodes();
        let step = self.grid.step();
        let f1: Vec<f64> = (0..s.len()).map(|i| z1[i] * h[i] * (nf * s[i]).exp()).collect();
        let f2: Vec<f64> = (0..s.len()).map(|i| z2[i] * h[i] * (nf * s[i]).exp()).collect();
        let b = quad::cumulative(&f1, step);
        let a = quad::cumulative(&f2, step);
        let a1 = a[self.grid.nearest(1.0)];
        let mut phi: Vec<f64> = (0..s.len()).map(|i| z2[i] * b[i] - z1[i] * (a[i] - a1)).collect();
        if z2[0].abs() < 1e-300 {
            return Err(GelfandError::Singular("z2 vanishes at the inner radius".into()));
        }
        let c = phi[0] / z2[0];
        for (p, z) in phi.iter_mut().zip(z2) {
            *p -= c * z;
        }
        phi[0] = 0.0;
        Ok(phi)
    }

    /// Iterate `φ ← Ψ(M(φ) + E_λ)` from `φ = 0`.
    pub fn fixed_point_solve(&self) -> Result<FixedPoint> {
        let e = self.error_term();
        let mut phi = vec![0.0; self.grid.len()];
        let mut increments = Vec::new();
        let mut ratios = Vec::new();
        for it in 1..=self.config.max_iterations {
            let m = self.nonlinear_term(&phi)?;
            let rhs: Vec<f64> = m.iter().zip(&e).map(|(a, b)| a + b).collect();
            let next = self.linear_inverse(&rhs)?;
            let diff: Vec<f64> = next.iter().zip(&phi).map(|(a, b)| a - b).collect();
            let d = self.norm_star(&diff);
            if let Some(prev) = increments.last() {
                let ratio = if *prev > 0.0 { d / prev } else { 0.0 };
                ratios.push(ratio);
                if it > 5 && ratio >= 1.0 {
                    return Err(GelfandError::NonContraction { iteration: it, ratio });
                }
            }
            increments.push(d);
            phi = next;
            if d <= self.config.tol {
                return Ok(FixedPoint {
                    phi,
                    iterations: it,
                    increments,
                    ratios,
                });
            }
        }
        let ratio = ratios.last().copied().unwrap_or(f64::NAN);
        Err(GelfandError::NonContraction {
            iteration: self.config.max_iterations,
            ratio,
        })
    }
}

/// `e^d - 1 - d` without cancellation.
fn exp_remainder(d: f64) -> f64 {
    if d.abs() < SERIES_CUTOFF {
        d * d * (0.5 + d * (1.0 / 6.0 + d / 24.0))
    } else {
        d.exp_m1() - d
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPoint {
    pub phi: Vec<f64>,
    pub iterations: usize,
    /// `‖φ^{n+1} - φ^n‖_*` per iteration
    pub increments: Vec<f64>,
    /// successive increment ratios
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExteriorSolution {
    pub config: ExteriorConfig,
    /// scaled grid `r ∈ [ε, r_max]`
    pub grid: RadialGrid,
    pub phi: Vec<f64>,
    /// `ũ = U_α - φ_λ + φ` at the scaled nodes; `u(x) = ũ(εx)`
    pub u_scaled: Vec<f64>,
    pub iterations: usize,
    pub contraction_ratios: Vec<f64>,
    /// `max |Δũ + λ₀e^ũ| / max λ₀e^ũ` over interior nodes
    pub residual_max: f64,
    /// fitted `c` in `u(x) ≈ -2 log x + c`
    pub asymptotic_constant: f64,
    /// fitted decay exponent of `u + 2 log x - c` in the scaled variable
    pub asymptotic_rate: f64,
    pub phi_norm: f64,
    pub error_norm: f64,
}

impl ExteriorSolution {
    /// Original radii `x = r/ε` of the nodes.
    pub fn x_nodes(&self) -> Vec<f64> {
        let eps = self.config.epsilon();
        self.grid.r_nodes().iter().map(|r| r / eps).collect()
    }

    /// `u(x)` for `1 ≤ x ≤ r_max/ε`.
    pub fn u(&self, x: f64) -> f64 {
        let s = (x * self.config.epsilon())
            .ln()
            .clamp(self.grid.s_min(), self.grid.s_max());
        quad::lagrange4(&self.u_scaled, self.grid.s_min(), self.grid.step(), s)
    }

    /// `(x, u(x), relative PDE residual)` rows for export.
    pub fn rows(&self) -> Vec<[f64; 3]> {
        let res = pde_residuals(&self.grid, &self.u_scaled, self.config.dim);
        let scale = self
            .u_scaled
            .iter()
            .map(|u| self.config.dim.lambda0() * u.exp())
            .fold(0.0, f64::max);
        self.x_nodes()
            .into_iter()
            .zip(&self.u_scaled)
            .zip(res)
            .map(|((x, u), r)| [x, *u, r.map_or(0.0, |v| v / scale)])
            .collect()
    }
}

/// `Δũ + λ₀e^ũ` at interior nodes by sixth-order differences in `log r`.
fn pde_residuals(grid: &RadialGrid, u: &[f64], dim: Dimension) -> Vec<Option<f64>> {
    let h = grid.step();
    let d1 = quad::derivative6(u, h);
    let d2 = quad::second_derivative6(u, h);
    let nm2 = dim.nf() - 2.0;
    (0..u.len())
        .map(|i| {
            let (a, b) = (d1[i]?, d2[i]?);
            let r2 = (2.0 * grid.s(i)).exp();
            Some((b + nm2 * a) / r2 + dim.lambda0() * u[i].exp())
        })
        .collect()
}

/// Form `ũ`, check the PDE and fit the far field on scaled `r ∈ [10², 10³]`.
pub fn assemble_solution(problem: &ExteriorProblem, fp: &FixedPoint) -> Result<ExteriorSolution> {
    let cfg = &problem.config;
    let grid = &problem.grid;
    let mut u: Vec<f64> = (0..grid.len())
        .map(|i| (problem.u_alpha[i] - problem.correction.values[i]) + fp.phi[i])
        .collect();
    u[0] = 0.0;
    let res = pde_residuals(grid, &u, cfg.dim);
    let scale = u.iter().map(|v| cfg.dim.lambda0() * v.exp()).fold(0.0, f64::max);
    let residual_max = res.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max) / scale;

    let eps = cfg.epsilon();
    let window: Vec<usize> = (0..grid.len())
        .filter(|&i| (1e2..=1e3).contains(&grid.r(i)))
        .collect();
    if window.len() < 8 {
        return Err(GelfandError::InsufficientData(
            "far-field window [1e2, 1e3] not covered".into(),
        ));
    }
    // u(x) + 2 log x = ũ(r) + 2 log r - 2 log ε
    let g: Vec<f64> = window
        .iter()
        .map(|&i| u[i] + 2.0 * grid.s(i) - 2.0 * eps.ln())
        .collect();
    let s: Vec<f64> = window.iter().map(|&i| grid.s(i)).collect();
    let (c, rate) = far_field_fit(cfg.dim, &s, &g)?;

    Ok(ExteriorSolution {
        config: cfg.clone(),
        grid: grid.clone(),
        phi: fp.phi.clone(),
        u_scaled: u,
        iterations: fp.iterations,
        contraction_ratios: fp.ratios.clone(),
        residual_max,
        asymptotic_constant: c,
        asymptotic_rate: rate,
        phi_norm: problem.norm_star(&fp.phi),
        error_norm: problem.norm_starstar(&problem.error_term()),
    })
}

/// Far-field fit `g(s) ≈ c + e^{-ρs}(A cos ωs + B sin ωs)` (or `c + A e^{-ρs}`
/// when the infinity roots are real) with `ω` from the linearisation and `ρ`
/// chosen by golden-section search on the linear least-squares residual.
/// Returns `(c, ρ)`.
pub fn far_field_fit(dim: Dimension, s: &[f64], g: &[f64]) -> Result<(f64, f64)> {
    let omega = phase::linearization_eigenvalues(dim).0.im.abs();
    let s0 = s.first().copied().unwrap_or(0.0);
    let solve = |rho: f64| -> Result<(Vec<f64>, f64)> {
        let env: Vec<f64> = s.iter().map(|x| (-rho * (x - s0)).exp()).collect();
        let mut cols = vec![vec![1.0; s.len()]];
        if omega > 0.0 {
            cols.push(s.iter().zip(&env).map(|(x, e)| e * (omega * x).cos()).collect());
            cols.push(s.iter().zip(&env).map(|(x, e)| e * (omega * x).sin()).collect());
        } else {
            cols.push(env);
        }
        fit::least_squares(&cols, g)
    };
    let (mut a, mut b) = (0.05, 6.0);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if solve(x1)?.1 < solve(x2)?.1 {
            b = x2;
        } else {
            a = x1;
        }
    }
    let rho = 0.5 * (a + b);
    Ok((solve(rho)?.0[0], rho))
}

/// Full pipeline: problem set-up, contraction, assembly.
pub fn solve_exterior(config: &ExteriorConfig, profile: &RadialProfile) -> Result<ExteriorSolution> {
    let problem = ExteriorProblem::new(config, profile)?;
    let fp = problem.fixed_point_solve()?;
    assemble_solution(&problem, &fp)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonSolution {
    /// `u` at the scaled grid nodes, in the same layout as [`ExteriorSolution::u_scaled`]
    pub u_scaled: Vec<f64>,
    pub iterations: usize,
    /// max-norm of the `h²`-scaled discrete residual at convergence (finest level)
    pub residual: f64,
}

/// Independent solve of `u'' + (N-1)u'/x + λe^u = 0`, `u(1) = 0`, by damped
/// Newton on `t = log x ∈ [0, -log ε]` with the selection condition at scaled
/// radius 1 as outer boundary condition. Two step sizes are combined by
/// Richardson extrapolation; the far field is continued by integration.
pub fn newton_oracle(problem: &ExteriorProblem) -> Result<NewtonSolution> {
    let cfg = &problem.config;
    let grid = &problem.grid;
    let i1 = grid.nearest(1.0);
    let nm2 = cfg.dim.nf() - 2.0;
    let t_end = -grid.s_min();

    // selection condition a(u - c0) - b(u_t - c1) = 0 at t_end
    let hz = grid.step();
    let z2 = &problem.pair.z2.values;
    let a = quad::derivative6(z2, hz)[i1]
        .ok_or_else(|| GelfandError::Singular("z2 derivative unavailable at r = 1".into()))?;
    let b = z2[i1];
    if b.abs() < 1e-8 * a.abs() {
        return Err(GelfandError::Singular(
            "z2(1) vanishes; selection condition degenerate".into(),
        ));
    }
    let hc = &problem.correction;
    let c0 = problem.profile.scaled(cfg.alpha, 1.0) - hc.eval(1.0);
    let c1 = problem.profile.scaled_du(cfg.alpha, 1.0) - hc.derivative(1.0);
    let slope = move |u: f64| c1 + a / b * (u - c0);

    let guess = |t: f64| {
        let r = (t + grid.s_min()).exp();
        problem.profile.scaled(cfg.alpha, r) - hc.eval(r)
    };
    let coarse = newton_fd(cfg.lambda, nm2, t_end, 2 * i1, slope, a / b, &guess)?;
    let fine = newton_fd(cfg.lambda, nm2, t_end, 4 * i1, slope, a / b, &guess)?;
    let mut u_scaled = vec![0.0; grid.len()];
    for (k, u) in u_scaled.iter_mut().enumerate().take(i1 + 1) {
        *u = (4.0 * fine.0[4 * k] - coarse.0[2 * k]) / 3.0;
    }
    // continue outward from scaled r = 1
    let u_end = u_scaled[i1];
    let lam = cfg.lambda;
    let rhs = move |t: f64, v: &[f64; 2]| [v[1], -nm2 * v[1] - lam * (v[0] + 2.0 * t).exp()];
    let outputs: Vec<f64> = (i1 + 1..grid.len()).map(|i| grid.s(i) + t_end).collect();
    let solver = Dopri5::new(ErrorControl::Componentwise {
        rtol: 1e-12,
        atol: 1e-14,
    })
    .with_h_max(0.05);
    let out = solver.integrate(rhs, t_end, [u_end, slope(u_end)], &outputs, |v| v[0].is_finite())?;
    for (k, v) in out.into_iter().enumerate() {
        u_scaled[i1 + 1 + k] = v[0];
    }
    Ok(NewtonSolution {
        u_scaled,
        iterations: fine.1,
        residual: fine.2,
    })
}

/// Damped Newton for the second-order discretisation with `m` intervals.
/// Returns nodal values, iteration count and final residual.
fn newton_fd(
    lambda: f64,
    nm2: f64,
    t_end: f64,
    m: usize,
    slope: impl Fn(f64) -> f64,
    dslope: f64,
    guess: &dyn Fn(f64) -> f64,
) -> Result<(Vec<f64>, usize, f64)> {
    let h = t_end / m as f64;
    let t: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let mut u: Vec<f64> = t.iter().map(|t| guess(*t)).collect();
    u[0] = 0.0;
    let lo = 1.0 / (h * h) - nm2 / (2.0 * h);
    let hi = 1.0 / (h * h) + nm2 / (2.0 * h);
    let residual = |u: &[f64]| -> Vec<f64> {
        let mut f = vec![0.0; m];
        for i in 1..m {
            f[i - 1] =
                lo * u[i - 1] - 2.0 * u[i] / (h * h) + hi * u[i + 1] + lambda * (u[i] + 2.0 * t[i]).exp();
        }
        // ghost u_{m+1} = u_{m-1} + 2h u_t
        let ut = slope(u[m]);
        f[m - 1] = (2.0 * u[m - 1] + 2.0 * h * ut - 2.0 * u[m]) / (h * h)
            + nm2 * ut
            + lambda * (u[m] + 2.0 * t[m]).exp();
        f
    };
    // equations multiplied by h² so that rounding does not set a floor at 1/h²
    let norm = |f: &[f64]| f.iter().fold(0.0f64, |a, v| a.max(v.abs())) * h * h;
    let mut f = residual(&u);
    let mut fn0 = norm(&f);
    for it in 1..=50 {
        if fn0 <= 1e-10 {
            return Ok((u, it - 1, fn0));
        }
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        for i in 1..m {
            sub[i - 1] = lo;
            diag[i - 1] = -2.0 / (h * h) + lambda * (u[i] + 2.0 * t[i]).exp();
            sup[i - 1] = hi;
        }
        sub[m - 1] = 2.0 / (h * h);
        diag[m - 1] = (2.0 * h * dslope - 2.0) / (h * h) + nm2 * dslope + lambda * (u[m] + 2.0 * t[m]).exp();
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let du = thomas(&sub, &diag, &sup, &neg)?;
        let mut step = 1.0;
        loop {
            let mut trial = u.clone();
            for i in 1..=m {
                trial[i] += step * du[i - 1];
            }
            let ft = residual(&trial);
            let fnt = norm(&ft);
            if fnt < fn0 || step < 1e-4 {
                u = trial;
                f = ft;
                fn0 = fnt;
                break;
            }
            step *= 0.5;
        }
        if !fn0.is_finite() {
            return Err(GelfandError::NewtonDivergence {
                iterations: it,
                residual: fn0,
            });
        }
    }
    if fn0 <= 1e-10 {
        Ok((u, 50, fn0))
    } else {
        Err(GelfandError::NewtonDivergence {
            iterations: 50,
            residual: fn0,
        })
    }
}

/// A member of the radial solution continuum at fixed `λ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyMember {
    pub lambda: f64,
    pub v2_start: f64,
    pub trajectory: Trajectory,
    /// `(r, u(r))` with `u(1) = 0`
    pub u: Vec<(f64, f64)>,
    /// mean of `u + 2 log r` over `r ∈ [10², 10³]`
    pub asymptotic_constant: f64,
}

/// Integrate the phase-plane system from `(v₁, v₂) = (λ, v2_start)` at
/// `s = 0`, i.e. `u(1) = 0`, `u'(1) = v2_start`.
pub fn solution_family(dim: Dimension, lambda: f64, v2_start: f64, tol: f64) -> Result<FamilyMember> {
    if !(lambda > 0.0) || !v2_start.is_finite() {
        return invalid("lambda must be positive and v2_start finite");
    }
    let start = PhaseState::new(dim, 0.0, lambda, v2_start)?;
    let traj = phase::integrate(&start, dim, 60.0, tol)
        .map_err(|e| GelfandError::Divergent(format!("start outside the family: {e}")))?;
    if phase::convergence_s(&traj, 1e-6, 1.0).is_none() {
        return Err(GelfandError::Divergent(
            "trajectory does not settle at (lambda0, -2); start outside the family".into(),
        ));
    }
    let u: Vec<(f64, f64)> = traj
        .states
        .iter()
        .map(|p| (p.s.exp(), p.v(dim, lambda)))
        .collect();
    let window: Vec<&PhaseState> = traj
        .states
        .iter()
        .filter(|p| (1e2f64.ln()..=1e3f64.ln()).contains(&p.s))
        .collect();
    let s: Vec<f64> = window.iter().map(|p| p.s).collect();
    let g: Vec<f64> = window.iter().map(|p| p.v(dim, lambda) + 2.0 * p.s).collect();
    let (asymptotic_constant, _) = far_field_fit(dim, &s, &g)?;
    Ok(FamilyMember {
        lambda,
        v2_start,
        trajectory: traj,
        u,
        asymptotic_constant,
    })
}

/// `v₂` at `s = 0` of the special member `u_α`: `U_α'(1) = αU'(α)`.
pub fn special_v2_start(profile: &RadialProfile, alpha: f64) -> f64 {
    profile.at_log(alpha.ln()).rdu
}
