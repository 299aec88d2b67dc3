//! The entire radial solution `U` of `-ΔU = λ₀e^U`, `U(0) = U'(0) = 0`,
//! and the family it generates.
//!
//! `U` is integrated in `s = log r`. Up to `r = 1` the unknowns are
//! `(U, rU')`, which keeps full relative precision while both are tiny.
//! From `r = 1` on the unknowns switch to the deviations from the singular
//! solution, `w = U + 2s` and `y = rU' + 2`, so the decaying tail is tracked
//! to relative accuracy far below the level of `U` itself. Past the last grid
//! node the deviation is tabulated on a coarser tail table.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GelfandError, Result};
use crate::grid::RadialGrid;
use crate::ode::{Dopri5, ErrorControl};
use crate::quad;
use crate::Dimension;

/// Length in `s` of the deviation table beyond the last grid node.
const TAIL_LENGTH: f64 = 100.0;
const TAIL_STEP: f64 = 0.005;

/// Values of `U`, `rU'` and the deviations at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub u: f64,
    /// `r U'(r)`, the phase variable `v₂`.
    pub rdu: f64,
    /// `U + 2 log r`
    pub w: f64,
    /// `r U'(r) + 2`
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct RadialProfile {
    dim: Dimension,
    grid: RadialGrid,
    tol: f64,
    u: Vec<f64>,
    rdu: Vec<f64>,
    w: Vec<f64>,
    y: Vec<f64>,
    /// nodes `< switch` carry `(U, rU')` as primary data
    switch: usize,
    tail_s0: f64,
    tail_w: Vec<f64>,
    tail_y: Vec<f64>,
    residual_max: f64,
}

/// Summary record for JSON export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub n: usize,
    pub lambda0: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: usize,
    pub tol: f64,
    pub residual_max: f64,
    pub integrator: String,
}

/// One point `(α, λ_α, u_α(0))` of the ball bifurcation diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub alpha: f64,
    pub lambda: f64,
    pub u_center: f64,
}

impl RadialProfile {
    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Largest ODE residual `|U'' + (N-1)U'/r + λ₀e^U|` over interior nodes.
    pub fn residual_max(&self) -> f64 {
        self.residual_max
    }

    /// Tabulated `U(r_i)`.
    pub fn u_nodes(&self) -> &[f64] {
        &self.u
    }

    /// Tabulated `U'(r_i)`.
    pub fn du_nodes(&self) -> Vec<f64> {
        self.rdu
            .iter()
            .enumerate()
            .map(|(i, p)| p / self.grid.r(i))
            .collect()
    }

    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            n: self.dim.n(),
            lambda0: self.dim.lambda0(),
            r_min: self.grid.r_min(),
            r_max: self.grid.r_max(),
            nodes: self.grid.len(),
            tol: self.tol,
            residual_max: self.residual_max,
            integrator: "Dormand-Prince 5(4) in s = log r, node-landing".into(),
        }
    }

    fn series(&self, r: f64) -> (f64, f64) {
        let (a, b) = series_coefficients(self.dim);
        let r2 = r * r;
        (a * r2 + b * r2 * r2, 2.0 * a * r2 + 4.0 * b * r2 * r2)
    }

    /// Profile data at `s = log r`, valid for every real `s`.
    pub fn at_log(&self, s: f64) -> ProfilePoint {
        let lambda0 = self.dim.lambda0();
        let nm2 = self.dim.nf() - 2.0;
        let h = self.grid.step();
        let s_min = self.grid.s_min();
        if s <= s_min {
            let (u, rdu) = self.series(s.exp());
            return ProfilePoint {
                u,
                rdu,
                w: u + 2.0 * s,
                y: rdu + 2.0,
            };
        }
        let last = self.grid.len() - 1;
        if s < self.grid.s_max() {
            let i = (((s - s_min) / h).floor() as usize).min(last - 1);
            let t = s - self.grid.s(i);
            if i < self.switch {
                let si = self.grid.s(i);
                let sj = self.grid.s(i + 1);
                let dp = |u: f64, p: f64, s: f64| -nm2 * p - lambda0 * (u + 2.0 * s).exp();
                let u = quad::hermite(self.u[i], self.rdu[i], self.u[i + 1], self.rdu[i + 1], h, t);
                let rdu = quad::hermite(
                    self.rdu[i],
                    dp(self.u[i], self.rdu[i], si),
                    self.rdu[i + 1],
                    dp(self.u[i + 1], self.rdu[i + 1], sj),
                    h,
                    t,
                );
                return ProfilePoint {
                    u,
                    rdu,
                    w: u + 2.0 * s,
                    y: rdu + 2.0,
                };
            }
            let (w, y) = hermite_deviation(lambda0, nm2, &self.w, &self.y, i, h, t);
            return ProfilePoint {
                u: w - 2.0 * s,
                rdu: y - 2.0,
                w,
                y,
            };
        }
        let tail_end = self.tail_s0 + TAIL_STEP * (self.tail_w.len() - 1) as f64;
        if s < tail_end {
            let i = (((s - self.tail_s0) / TAIL_STEP).floor() as usize).min(self.tail_w.len() - 2);
            let t = s - (self.tail_s0 + i as f64 * TAIL_STEP);
            let (w, y) = hermite_deviation(lambda0, nm2, &self.tail_w, &self.tail_y, i, TAIL_STEP, t);
            return ProfilePoint {
                u: w - 2.0 * s,
                rdu: y - 2.0,
                w,
                y,
            };
        }
        ProfilePoint {
            u: -2.0 * s,
            rdu: -2.0,
            w: 0.0,
            y: 0.0,
        }
    }

    /// `U(r)`; `U(0) = 0`.
    pub fn u(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.at_log(r.ln()).u
    }

    /// `U'(r)`.
    pub fn du(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.at_log(r.ln()).rdu / r
    }

    /// `v₁(s) = λ₀ e^{U(e^s) + 2s}` along the heteroclinic orbit.
    pub fn v1(&self, s: f64) -> f64 {
        self.dim.lambda0() * self.at_log(s).w.exp()
    }

    /// `U_α(r) = U(αr) + 2 log α`.
    pub fn scaled(&self, alpha: f64, r: f64) -> f64 {
        self.u(alpha * r) + 2.0 * alpha.ln()
    }

    /// `U_α'(r) = α U'(αr)`.
    pub fn scaled_du(&self, alpha: f64, r: f64) -> f64 {
        alpha * self.du(alpha * r)
    }

    /// `λ₀ r² e^{U_α(r)}`, which equals `v₁(log(αr))`.
    pub fn scaled_weight_r2(&self, alpha: f64, r: f64) -> f64 {
        self.v1((alpha * r).ln())
    }

    /// `λ_α = λ₀ α² e^{U(α)}`.
    pub fn lambda_alpha(&self, alpha: f64) -> f64 {
        self.v1(alpha.ln())
    }

    /// `u_α(r) = U_α(r) - U_α(1) = U(αr) - U(α)`, zero at `r = 1`.
    pub fn u_alpha_ball(&self, alpha: f64, r: f64) -> f64 {
        self.u(alpha * r) - self.u(alpha)
    }

    pub fn bifurcation(&self, alphas: &[f64]) -> Result<Vec<BifurcationPoint>> {
        if alphas.iter().any(|a| !(*a > 0.0)) {
            return invalid("all alphas must be positive");
        }
        let mut pts: Vec<BifurcationPoint> = alphas
            .iter()
            .map(|&alpha| BifurcationPoint {
                alpha,
                lambda: self.lambda_alpha(alpha),
                u_center: -self.u(alpha),
            })
            .collect();
        pts.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        Ok(pts)
    }
}

fn hermite_deviation(lambda0: f64, nm2: f64, w: &[f64], y: &[f64], i: usize, h: f64, t: f64) -> (f64, f64) {
    let dy = |w: f64, y: f64| -lambda0 * w.exp_m1() - nm2 * y;
    let wv = quad::hermite(w[i], y[i], w[i + 1], y[i + 1], h, t);
    let yv = quad::hermite(y[i], dy(w[i], y[i]), y[i + 1], dy(w[i + 1], y[i + 1]), h, t);
    (wv, yv)
}

/// Coefficients `(a, b)` of `U = a r² + b r⁴ + O(r⁶)` at the origin.
///
/// Matching powers in `U'' + (N-1)U'/r = -λ₀(1 + U + …)` gives
/// `2aN = -λ₀` and `4b(N+2) = -λ₀ a`.
pub fn series_coefficients(dim: Dimension) -> (f64, f64) {
    let n = dim.nf();
    let l0 = dim.lambda0();
    let a = -l0 / (2.0 * n);
    let b = l0 * l0 / (8.0 * n * (n + 2.0));
    (a, b)
}

/// Integrate the radial profile on `grid` to relative tolerance `tol`.
pub fn solve_profile(dim: Dimension, grid: &RadialGrid, tol: f64) -> Result<RadialProfile> {
    if !(tol > 0.0 && tol < 1e-2) {
        return invalid(format!("tolerance must lie in (0, 1e-2), got {tol}"));
    }
    if grid.r_min() > 1e-2 || grid.r_max() <= 1.0 {
        return invalid("profile grid must start at r ≤ 1e-2 and extend past r = 1");
    }
    let lambda0 = dim.lambda0();
    let nm2 = dim.nf() - 2.0;
    let rtol = (tol * 1e-2).max(1e-14);
    let n = grid.len();
    let s = grid.s_nodes();
    let switch = s.iter().position(|&v| v >= 0.0).unwrap_or(n - 1).max(1);

    let (a, b) = series_coefficients(dim);
    let r0 = grid.r_min();
    let r02 = r0 * r0;
    let start = [a * r02 + b * r02 * r02, 2.0 * a * r02 + 4.0 * b * r02 * r02];

    let inner = Dopri5::new(ErrorControl::Componentwise { rtol, atol: 1e-300 }).with_h_max(0.1);
    let rhs_inner = |s: f64, v: &[f64; 2]| [v[1], -nm2 * v[1] - lambda0 * (v[0] + 2.0 * s).exp()];
    let inner_states = inner.integrate(rhs_inner, s[0], start, &s[1..=switch], |v| {
        v[0].is_finite() && v[1].is_finite()
    })?;

    let mut u = Vec::with_capacity(n);
    let mut rdu = Vec::with_capacity(n);
    u.push(start[0]);
    rdu.push(start[1]);
    for st in &inner_states {
        u.push(st[0]);
        rdu.push(st[1]);
    }

    let outer = Dopri5::new(ErrorControl::StateNorm { rtol, atol: 1e-300 }).with_h_max(0.1);
    let rhs_dev = move |_s: f64, v: &[f64; 2]| [v[1], -lambda0 * v[0].exp_m1() - nm2 * v[1]];
    let dev0 = [u[switch] + 2.0 * s[switch], rdu[switch] + 2.0];
    let outer_states = if switch + 1 < n {
        outer.integrate(rhs_dev, s[switch], dev0, &s[switch + 1..], |v| v[0].abs() < 700.0)?
    } else {
        Vec::new()
    };

    let mut w: Vec<f64> = (0..=switch).map(|i| u[i] + 2.0 * s[i]).collect();
    let mut y: Vec<f64> = (0..=switch).map(|i| rdu[i] + 2.0).collect();
    for (k, st) in outer_states.iter().enumerate() {
        let i = switch + 1 + k;
        w.push(st[0]);
        y.push(st[1]);
        u.push(st[0] - 2.0 * s[i]);
        rdu.push(st[1] - 2.0);
    }

    let tail_s0 = s[n - 1];
    let tail_len = (TAIL_LENGTH / TAIL_STEP).round() as usize;
    let tail_out: Vec<f64> = (1..=tail_len).map(|k| tail_s0 + k as f64 * TAIL_STEP).collect();
    let tail_states = outer.integrate(rhs_dev, tail_s0, [w[n - 1], y[n - 1]], &tail_out, |v| {
        v[0].abs() < 700.0
    })?;
    let mut tail_w = vec![w[n - 1]];
    let mut tail_y = vec![y[n - 1]];
    for st in tail_states {
        tail_w.push(st[0]);
        tail_y.push(st[1]);
    }

    let mut profile = RadialProfile {
        dim,
        grid: grid.clone(),
        tol,
        u,
        rdu,
        w,
        y,
        switch,
        tail_s0,
        tail_w,
        tail_y,
        residual_max: 0.0,
    };
    profile.residual_max = ode_residuals(&profile).into_iter().flatten().fold(0.0, f64::max);
    if !profile.residual_max.is_finite() || profile.residual_max > 1e4 * tol {
        return Err(GelfandError::Integration {
            s: grid.s_max(),
            reason: format!(
                "profile residual {:e} inconsistent with tolerance {tol:e}; refine the grid",
                profile.residual_max
            ),
        });
    }
    Ok(profile)
}

/// Pointwise residual `U'' + (N-1)U'/r + λ₀e^U` at interior nodes, from a
/// sixth-order difference of the tabulated `rU'` in `s`.
pub fn ode_residuals(profile: &RadialProfile) -> Vec<Option<f64>> {
    let lambda0 = profile.dim.lambda0();
    let nm2 = profile.dim.nf() - 2.0;
    let h = profile.grid.step();
    let dp = quad::derivative6(&profile.rdu, h);
    dp.iter()
        .enumerate()
        .map(|(i, d)| {
            d.map(|dps| {
                let s = profile.grid.s(i);
                let r2 = (2.0 * s).exp();
                (dps + nm2 * profile.rdu[i] + lambda0 * r2 * profile.u[i].exp()) / r2
            })
        })
        .collect()
}

/// Default profile: 4000 nodes on `[1e-4, 1e3]`, tolerance `1e-10`.
pub fn default_profile(dim: Dimension) -> Result<RadialProfile> {
    solve_profile(dim, &RadialGrid::default_profile(), 1e-10)
}

/// Ball bifurcation diagram `(α, λ_α, u_α(0))` on the default profile.
pub fn bifurcation_diagram(dim: Dimension, alphas: &[f64]) -> Result<Vec<BifurcationPoint>> {
    default_profile(dim)?.bifurcation(alphas)
}

/// Number of sign changes of `λ_α - λ₀` along a sorted diagram.
pub fn crossings_of_lambda0(points: &[BifurcationPoint], lambda0: f64) -> usize {
    points
        .windows(2)
        .filter(|p| (p[0].lambda - lambda0) * (p[1].lambda - lambda0) < 0.0)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn n(k: usize) -> Dimension {
        Dimension::new(k).unwrap()
    }

    fn profile4() -> &'static RadialProfile {
        static P: OnceLock<RadialProfile> = OnceLock::new();
        P.get_or_init(|| default_profile(n(4)).unwrap())
    }

    #[test]
    fn leading_taylor_coefficient_n3() {
        let (a, _) = series_coefficients(n(3));
        assert!((a + 1.0 / 3.0).abs() < 1e-15);
        let p = default_profile(n(3)).unwrap();
        let r = 1e-3;
        assert!((p.u(r) / (r * r) + 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn residual_within_ten_tol() {
        let p = profile4();
        assert!(
            p.residual_max() <= 10.0 * p.tol(),
            "residual {}",
            p.residual_max()
        );
    }

    #[test]
    fn strictly_decreasing() {
        let p = profile4();
        assert!(p.du_nodes().iter().all(|d| *d < 0.0));
        assert!(p.u_nodes().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn tail_approaches_singular_solution() {
        let p = profile4();
        // N = 4: deviation decays like r^{-1}
        assert!((p.u(1e3) + 2.0 * 1e3f64.ln()).abs() < 1e-2);
        assert!((p.u(1e8) + 2.0 * 1e8f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn scaling_identities() {
        let p = profile4();
        for r in [0.0, 0.3, 2.0] {
            assert!((p.scaled(1.0, r) - p.u(r)).abs() < 1e-15);
        }
        assert!((p.scaled(3.0, 0.0) - 2.0 * 3f64.ln()).abs() < 1e-15);
        assert!((p.scaled(2.0, 1.0) - (p.u(2.0) + 2.0 * 2f64.ln())).abs() < 1e-14);
        assert_eq!(p.u_alpha_ball(1.7, 1.0), 0.0);
        assert!((p.u_alpha_ball(1.7, 0.0) + p.u(1.7)).abs() < 1e-15);
    }

    #[test]
    fn lambda_alpha_limits() {
        let p = profile4();
        let small = 1e-3;
        assert!((p.lambda_alpha(small) / (4.0 * small * small) - 1.0).abs() < 1e-5);
        assert!((p.lambda_alpha(1e4) / 4.0 - 1.0).abs() < 1e-3);
        let direct = 4.0 * 4.0 * p.u(2.0).exp();
        assert!((p.lambda_alpha(2.0) - direct).abs() < 1e-12);
    }

    #[test]
    fn hermite_interpolant_matches_nodes() {
        let p = profile4();
        let g = p.grid();
        for i in [10, 500, 2000, 3990] {
            let at = p.at_log(g.s(i));
            assert!((at.u - p.u_nodes()[i]).abs() < 1e-13 * (1.0 + at.u.abs()));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = RadialGrid::default_profile();
        assert!(solve_profile(n(4), &g, 0.0).is_err());
        let short = RadialGrid::log_uniform(1e-4, 0.5, 100).unwrap();
        assert!(solve_profile(n(4), &short, 1e-10).is_err());
        assert!(profile4().bifurcation(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn bifurcation_sorted_with_center_values() {
        let pts = profile4().bifurcation(&[3.0, 0.5, 1.0]).unwrap();
        assert!(pts.windows(2).all(|w| w[0].alpha < w[1].alpha));
        assert!((pts[1].u_center + profile4().u(1.0)).abs() < 1e-15);
    }

    #[test]
    fn n3_crossings_of_lambda0() {
        let d = n(3);
        let logspace = |lo: f64, hi: f64, k: usize| -> Vec<f64> {
            (0..=k)
                .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / k as f64))
                .collect()
        };
        let wide = bifurcation_diagram(d, &logspace(-2.0, 4.0, 1200)).unwrap();
        assert!(crossings_of_lambda0(&wide, d.lambda0()) >= 3);
        let narrow = bifurcation_diagram(d, &logspace(-2.0, 2.0, 800)).unwrap();
        assert_eq!(crossings_of_lambda0(&narrow, d.lambda0()), 2);
    }
}
