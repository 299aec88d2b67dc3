//! The Emden–Fowler system
//! `v₁' = v₁(v₂ + 2)`, `v₂' = -v₁ - (N-2)v₂`
//! with `v₁ = λe^{v+2s}`, `v₂ = v'`.
//!
//! Trajectories are integrated in the deviation variables
//! `w = log(v₁/λ₀)`, `y = v₂ + 2`, in which the system reads
//! `w' = y`, `y' = -λ₀(e^w - 1) - (N-2)y` and the tail near `(λ₀, -2)`
//! keeps full relative precision.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GelfandError, Result};
use crate::fit;
use crate::ode::{Dopri5, ErrorControl};
use crate::profile::RadialProfile;
use crate::Dimension;

/// Spacing in `s` of stored trajectory states.
pub const OUTPUT_STEP: f64 = 0.01;
/// Launch point of the heteroclinic integration.
pub const LAUNCH_S: f64 = -5.0;
const OVERFLOW_W: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub s: f64,
    pub v1: f64,
    pub v2: f64,
    /// `log(v₁/λ₀)`
    pub w: f64,
    /// `v₂ + 2`
    pub y: f64,
}

impl PhaseState {
    pub fn new(dim: Dimension, s: f64, v1: f64, v2: f64) -> Result<Self> {
        if !(v1 > 0.0) || !v1.is_finite() || !v2.is_finite() {
            return invalid(format!("phase state needs v1 > 0, got ({v1}, {v2})"));
        }
        Ok(Self {
            s,
            v1,
            v2,
            w: (v1 / dim.lambda0()).ln(),
            y: v2 + 2.0,
        })
    }

    pub fn from_deviation(dim: Dimension, s: f64, w: f64, y: f64) -> Self {
        Self {
            s,
            v1: dim.lambda0() * w.exp(),
            v2: y - 2.0,
            w,
            y,
        }
    }

    /// `v = w + log(λ₀/λ) - 2s` for the correspondence tagged with `lambda`.
    pub fn v(&self, dim: Dimension, lambda: f64) -> f64 {
        self.w + (dim.lambda0() / lambda).ln() - 2.0 * self.s
    }

    /// Euclidean distance to `(λ₀, -2)`.
    pub fn distance_to_singular(&self, dim: Dimension) -> f64 {
        (dim.lambda0() * self.w.exp_m1()).hypot(self.y)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub dim: Dimension,
    pub states: Vec<PhaseState>,
    pub lambda_tag: f64,
}

impl Trajectory {
    pub fn s_max(&self) -> f64 {
        self.states.last().map_or(f64::NEG_INFINITY, |p| p.s)
    }

    /// Cubic Hermite interpolation of the state at `s` inside the stored range.
    pub fn state_at(&self, s: f64) -> Option<PhaseState> {
        let k = self.states.partition_point(|p| p.s <= s);
        if k == 0 || (k == self.states.len() && s > self.s_max()) {
            return None;
        }
        if k == self.states.len() {
            return self.states.last().copied();
        }
        let (a, b) = (&self.states[k - 1], &self.states[k]);
        let f = deviation_rhs(self.dim);
        let (da, db) = (f(a.s, &[a.w, a.y]), f(b.s, &[b.w, b.y]));
        let h = b.s - a.s;
        let t = s - a.s;
        let w = crate::quad::hermite(a.w, da[0], b.w, db[0], h, t);
        let y = crate::quad::hermite(a.y, da[1], b.y, db[1], h, t);
        Some(PhaseState::from_deviation(self.dim, s, w, y))
    }

    /// State at the stored abscissa nearest `s`.
    pub fn nearest(&self, s: f64) -> Option<&PhaseState> {
        self.states
            .iter()
            .min_by(|a, b| (a.s - s).abs().total_cmp(&(b.s - s).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    Saddle,
    Spiral,
    StableNode,
    DegenerateNode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub point: (f64, f64),
    pub kind: EquilibriumKind,
    pub eigenvalues: (Complex64, Complex64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub a: f64,
    pub b: f64,
    /// decay rate of the leading term (positive)
    pub rate_primary: f64,
    /// oscillation frequency for spirals, otherwise the second exponent's rate
    pub rate_secondary: f64,
    pub includes_log_factor: bool,
    /// relative residual over the window; for the node fits it is measured on
    /// `w e^{-μ s}` with `μ` the slower exponent
    pub residual: f64,
    /// second ansatz `a e^{μ₊s} + b s e^{μ₊s}` for `N > 10`
    pub alternative: Option<AlternativeFit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlternativeFit {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

/// Extremes of the heteroclinic and whether the strict box
/// `0 < v₁ < λ₀`, `-2 < v₂ < 0` holds everywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseBoundsReport {
    pub min_v1: f64,
    pub max_v1: f64,
    pub min_v2: f64,
    pub max_v2: f64,
    /// `max w = max log(v₁/λ₀)`; negative iff `v₁ < λ₀` throughout
    pub max_w: f64,
    /// `min y = min (v₂ + 2)`; positive iff `v₂ > -2` throughout
    pub min_y: f64,
    pub pass: bool,
}

/// Right-hand side of the system in `(v₁, v₂)`.
pub fn vector_field(state: &PhaseState, dim: Dimension) -> (f64, f64) {
    (state.v1 * state.y, -state.v1 - (dim.nf() - 2.0) * state.v2)
}

fn deviation_rhs(dim: Dimension) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + Copy {
    let l0 = dim.lambda0();
    let nm2 = dim.nf() - 2.0;
    move |_s, v| [v[1], -l0 * v[0].exp_m1() - nm2 * v[1]]
}

/// Integrate from `start` to `s_end`, storing states every [`OUTPUT_STEP`].
pub fn integrate(start: &PhaseState, dim: Dimension, s_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_with_step(start, dim, s_end, tol, OUTPUT_STEP)
}

pub fn integrate_with_step(
    start: &PhaseState,
    dim: Dimension,
    s_end: f64,
    tol: f64,
    ds: f64,
) -> Result<Trajectory> {
    if !(s_end > start.s) {
        return invalid("s_end must exceed the start abscissa");
    }
    if !(tol > 0.0) || !(ds > 0.0) {
        return invalid("tolerance and output step must be positive");
    }
    if !(start.v1 > 0.0) {
        return invalid("start state needs v1 > 0");
    }
    let steps = ((s_end - start.s) / ds).ceil() as usize;
    let outputs: Vec<f64> = (1..=steps)
        .map(|k| (start.s + k as f64 * ds).min(s_end))
        .collect();
    let solver = Dopri5::new(ErrorControl::StateNorm {
        rtol: tol,
        atol: 1e-300,
    })
    .with_h_max(0.1);
    let out = solver.integrate(deviation_rhs(dim), start.s, [start.w, start.y], &outputs, |v| {
        v[0] < OVERFLOW_W
    })?;
    let mut states = Vec::with_capacity(out.len() + 1);
    states.push(*start);
    for (s, v) in outputs.iter().zip(out) {
        states.push(PhaseState::from_deviation(dim, *s, v[0], v[1]));
    }
    Ok(Trajectory {
        dim,
        states,
        lambda_tag: dim.lambda0(),
    })
}

/// `μ± = -(N-2)/2 ± ½√((N-2)(N-10))`, the eigenvalues at `(λ₀, -2)`.
pub fn linearization_eigenvalues(dim: Dimension) -> (Complex64, Complex64) {
    let n = dim.nf();
    let re = -(n - 2.0) / 2.0;
    let disc = (n - 2.0) * (n - 10.0);
    if disc >= 0.0 {
        let h = 0.5 * disc.sqrt();
        (Complex64::new(re + h, 0.0), Complex64::new(re - h, 0.0))
    } else {
        let h = 0.5 * (-disc).sqrt();
        (Complex64::new(re, h), Complex64::new(re, -h))
    }
}

/// Classification of the two equilibria `(0, 0)` and `(λ₀, -2)`.
pub fn equilibria(dim: Dimension) -> [EquilibriumReport; 2] {
    let n = dim.nf();
    let origin = EquilibriumReport {
        point: (0.0, 0.0),
        kind: EquilibriumKind::Saddle,
        eigenvalues: (Complex64::new(2.0, 0.0), Complex64::new(-(n - 2.0), 0.0)),
    };
    let (mp, mm) = linearization_eigenvalues(dim);
    let kind = if mp.im != 0.0 {
        EquilibriumKind::Spiral
    } else if mp.re == mm.re {
        EquilibriumKind::DegenerateNode
    } else {
        EquilibriumKind::StableNode
    };
    let singular = EquilibriumReport {
        point: (dim.lambda0(), -2.0),
        kind,
        eigenvalues: (mp, mm),
    };
    [origin, singular]
}

/// `L̃(v₁, v₂) = (v₂+2)²/2 + v₁ - λ₀ log v₁`, evaluated without cancellation
/// near its minimum `λ₀ - λ₀ log λ₀`.
pub fn lyapunov_value(state: &PhaseState, dim: Dimension) -> f64 {
    let l0 = dim.lambda0();
    let excess = 0.5 * state.y * state.y + l0 * (state.w.exp_m1() - state.w);
    excess + (l0 - l0 * l0.ln())
}

/// `L̃ - min L̃`, which is what decays along trajectories.
pub fn lyapunov_excess(state: &PhaseState, dim: Dimension) -> f64 {
    0.5 * state.y * state.y + dim.lambda0() * (state.w.exp_m1() - state.w)
}

/// The image of the entire radial solution, `(λ₀e^{U+2s}, rU')`.
///
/// States on `[s_start, -5]` are read from the profile; from `s = -5` on
/// the orbit is integrated.
pub fn heteroclinic(profile: &RadialProfile) -> Result<Trajectory> {
    heteroclinic_range(profile, -10.0, 60.0, profile.tol())
}

pub fn heteroclinic_range(profile: &RadialProfile, s_start: f64, s_end: f64, tol: f64) -> Result<Trajectory> {
    if !(s_start < LAUNCH_S && s_end > LAUNCH_S) {
        return invalid("heteroclinic range must straddle the launch point s = -5");
    }
    let dim = profile.dim();
    let at = |s: f64| {
        let p = profile.at_log(s);
        PhaseState::from_deviation(dim, s, p.w, p.y)
    };
    let head = ((LAUNCH_S - s_start) / OUTPUT_STEP).round() as usize;
    let mut states: Vec<PhaseState> = (0..head)
        .map(|k| at(LAUNCH_S - (head - k) as f64 * OUTPUT_STEP))
        .collect();
    let tail = integrate(&at(LAUNCH_S), dim, s_end, tol)?;
    states.extend(tail.states);
    Ok(Trajectory {
        dim,
        states,
        lambda_tag: dim.lambda0(),
    })
}

/// Checks the strict box `0 < v₁ < λ₀`, `-2 < v₂ < 0` along the orbit.
pub fn check_phase_bounds(traj: &Trajectory) -> PhaseBoundsReport {
    let mut r = PhaseBoundsReport {
        min_v1: f64::INFINITY,
        max_v1: f64::NEG_INFINITY,
        min_v2: f64::INFINITY,
        max_v2: f64::NEG_INFINITY,
        max_w: f64::NEG_INFINITY,
        min_y: f64::INFINITY,
        pass: true,
    };
    for p in &traj.states {
        r.min_v1 = r.min_v1.min(p.v1);
        r.max_v1 = r.max_v1.max(p.v1);
        r.min_v2 = r.min_v2.min(p.v2);
        r.max_v2 = r.max_v2.max(p.v2);
        r.max_w = r.max_w.max(p.w);
        r.min_y = r.min_y.min(p.y);
        // compare through the deviations, which stay exact near (λ₀, -2)
        if !(p.v1 > 0.0 && p.w < 0.0 && p.y > 0.0 && p.v2 < 0.0) {
            r.pass = false;
        }
    }
    r
}

/// Signed offset `L = v₁ - λ₀ - μ₋(v₂ + 2)` from the line through
/// `(λ₀, -2)` along the slow eigendirection, sampled every [`OUTPUT_STEP`]
/// on `[-5, s_end]` of the heteroclinic.
///
/// Along the tail both terms of `L` agree to leading order, so `L` is carried
/// as an unknown of its own, `L' = μ₋L + λ₀(v₂ + 2)(e^w - 1)`, under relative
/// error control. Returns `(s, L)` pairs. Meaningful for `N ≥ 10`.
pub fn barrier_offsets(profile: &RadialProfile, s_end: f64, tol: f64) -> Result<Vec<(f64, f64)>> {
    let dim = profile.dim();
    let (mp, mm) = linearization_eigenvalues(dim);
    if mp.im != 0.0 {
        return invalid("barrier line needs real eigenvalues (N >= 10)");
    }
    let mm = mm.re;
    let l0 = dim.lambda0();
    let p = profile.at_log(LAUNCH_S);
    let start = [p.w, l0 * p.w.exp_m1() - mm * p.y];
    let rhs = move |_s: f64, v: &[f64; 2]| {
        let e = v[0].exp_m1();
        let y = (l0 * e - v[1]) / mm;
        [y, mm * v[1] + l0 * y * e]
    };
    let steps = ((s_end - LAUNCH_S) / OUTPUT_STEP).ceil() as usize;
    let outputs: Vec<f64> = (1..=steps).map(|k| LAUNCH_S + k as f64 * OUTPUT_STEP).collect();
    let solver = Dopri5::new(ErrorControl::Componentwise {
        rtol: tol,
        atol: 1e-300,
    })
    .with_h_max(0.1);
    let out = solver.integrate(rhs, LAUNCH_S, start, &outputs, |v| v[0] < OVERFLOW_W)?;
    let mut res = vec![(LAUNCH_S, start[1])];
    res.extend(outputs.iter().zip(out).map(|(s, v)| (*s, v[1])));
    Ok(res)
}

/// `s`-values where `v₁ - λ₀` changes sign, by linear interpolation.
pub fn oscillation_crossings(traj: &Trajectory) -> Vec<f64> {
    traj.states
        .windows(2)
        .filter(|p| p[0].w * p[1].w < 0.0 || (p[1].w == 0.0 && p[0].w != 0.0))
        .map(|p| p[0].s + (p[1].s - p[0].s) * p[0].w / (p[0].w - p[1].w))
        .collect()
}

/// First `s` from which the distance to `(λ₀, -2)` stays below `eps` for the
/// rest of the trajectory, provided at least `sustain` of `s` remains.
pub fn convergence_s(traj: &Trajectory, eps: f64, sustain: f64) -> Option<f64> {
    let dim = traj.dim;
    let mut first = None;
    for p in &traj.states {
        if p.distance_to_singular(dim) < eps {
            first.get_or_insert(p.s);
        } else {
            first = None;
        }
    }
    first.filter(|s| traj.s_max() - s >= sustain)
}

/// Fit the tail of `w = v + 2s` on `[s_max - 15, s_max]`.
pub fn asymptotic_fit(traj: &Trajectory) -> Result<AsymptoticFit> {
    let s_max = traj.s_max();
    if s_max < 30.0 {
        return Err(GelfandError::InsufficientData(format!(
            "tail fit needs the trajectory to reach s = 30, it ends at {s_max}"
        )));
    }
    let window: Vec<&PhaseState> = traj.states.iter().filter(|p| p.s >= s_max - 15.0).collect();
    let s: Vec<f64> = window.iter().map(|p| p.s).collect();
    let w: Vec<f64> = window.iter().map(|p| p.w).collect();
    let n = traj.dim.n();
    if n <= 9 {
        spiral_envelope_fit(&s, &w)
    } else {
        node_fit(traj.dim, &s, &w)
    }
}

fn spiral_envelope_fit(s: &[f64], w: &[f64]) -> Result<AsymptoticFit> {
    // local maxima of |w| between sign changes, refined by a parabola in log|w|
    let mut peak_s = Vec::new();
    let mut peak_log = Vec::new();
    for i in 1..w.len() - 1 {
        let (a, b, c) = (w[i - 1].abs(), w[i].abs(), w[i + 1].abs());
        if b > a && b >= c && b > 0.0 && a > 0.0 && c > 0.0 {
            let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
            let denom = la - 2.0 * lb + lc;
            let h = s[i + 1] - s[i];
            let off = if denom < 0.0 { 0.5 * (la - lc) / denom } else { 0.0 };
            peak_s.push(s[i] + off * h);
            peak_log.push(lb - 0.25 * (la - lc) * off);
        }
    }
    if peak_s.len() < 3 {
        return Err(GelfandError::InsufficientData(format!(
            "envelope fit found {} peaks in the window",
            peak_s.len()
        )));
    }
    let (c0, c1) = fit::line(&peak_s, &peak_log)?;
    let gaps: Vec<f64> = peak_s.windows(2).map(|p| p[1] - p[0]).collect();
    let half_period = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let rms = peak_s
        .iter()
        .zip(&peak_log)
        .map(|(x, y)| (y - c0 - c1 * x).powi(2))
        .sum::<f64>()
        / peak_s.len() as f64;
    Ok(AsymptoticFit {
        a: c0.exp(),
        b: 0.0,
        rate_primary: -c1,
        rate_secondary: std::f64::consts::PI / half_period,
        includes_log_factor: false,
        residual: rms.sqrt(),
        alternative: None,
    })
}

fn relative_residual(cols: &[Vec<f64>], coef: &[f64], w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..w.len() {
        let f: f64 = cols.iter().zip(coef).map(|(c, k)| c[i] * k).sum();
        num += (w[i] - f).powi(2);
        den += w[i] * w[i];
    }
    (num / den).sqrt()
}

/// Fit `w ≈ a e^{e1 s} + b s e^{e2 s}`, solved as
/// `w e^{-e2 s} ≈ a e^{(e1-e2)(s-s0)} e^{(e1-e2)s0} + b s` so no basis underflows.
fn two_term_fit(e1: f64, e2: f64, s: &[f64], w: &[f64]) -> Result<(f64, f64, f64)> {
    let s0 = s[0];
    let rhs: Vec<f64> = s.iter().zip(w).map(|(x, v)| v * (-e2 * x).exp()).collect();
    let c1: Vec<f64> = s.iter().map(|x| ((e1 - e2) * (x - s0)).exp()).collect();
    let c2: Vec<f64> = s.to_vec();
    let cols = [c1, c2];
    let (coef, _) = fit::least_squares(&cols, &rhs)?;
    let res = relative_residual(&cols, &coef, &rhs);
    Ok((coef[0] * (-(e1 - e2) * s0).exp(), coef[1], res))
}

fn node_fit(dim: Dimension, s: &[f64], w: &[f64]) -> Result<AsymptoticFit> {
    let (mp, mm) = linearization_eigenvalues(dim);
    let (mp, mm) = (mp.re, mm.re);
    if dim.n() == 10 {
        let (a, b, residual) = two_term_fit(-4.0, -4.0, s, w)?;
        return Ok(AsymptoticFit {
            a,
            b,
            rate_primary: 4.0,
            rate_secondary: 4.0,
            includes_log_factor: true,
            residual,
            alternative: None,
        });
    }
    let (a, b, residual) = two_term_fit(mm, mp, s, w)?;
    let (a2, b2, r2) = two_term_fit(mp, mp, s, w)?;
    Ok(AsymptoticFit {
        a,
        b,
        rate_primary: -mp,
        rate_secondary: -mm,
        includes_log_factor: true,
        residual,
        alternative: Some(AlternativeFit {
            a: a2,
            b: b2,
            residual: r2,
        }),
    })
}

/// Evaluate a `N = 10` fit `a e^{-4s} + b s e^{-4s}` at `s`.
pub fn resonant_fit_value(fit: &AsymptoticFit, s: f64) -> f64 {
    (fit.a + fit.b * s) * (-4.0 * s).exp()
}
