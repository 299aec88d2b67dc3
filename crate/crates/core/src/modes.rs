//! Inversion of the linearized operator `Δ + λ₀e^{U_α}` one spherical
//! harmonic at a time:
//! `φ'' + (N-1)φ'/r + (λ₀e^{U_α} - λ_k/r²)φ = h`.
//!
//! All kernels work in `s = log r` on a log-uniform grid, where the operator
//! becomes `r²L = ∂_s² + (N-2)∂_s + q(s)` with `q = v₁(s + log α) - λ_k`.
//!
//! - degree 0, `N ≤ 9`: variation of parameters with `z₁ = v₂ + 2` and the
//!   reduction-of-order partner `z₂`, limits `1` and `0`;
//! - degree 0 with `N ≥ 10`, and degree 1: the nested kernel
//!   `φ = z₁ ∫₀^r z₁⁻² τ^{1-N} ∫₀^τ z₁ h t^{N-1}`;
//! - degree `≥ 2`: the Green's function built from the solution regular at
//!   the origin and the one decaying at infinity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GelfandError, Result};
use crate::grid::RadialGrid;
use crate::norms::{norm_starstar, NormSampling, WeightedNormParams};
use crate::ode::{Dopri5, ErrorControl};
use crate::profile::RadialProfile;
use crate::quad;
use crate::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeIndex {
    pub degree: usize,
    pub eigenvalue: f64,
    pub multiplicity: u64,
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, j| acc * (n - j) as u128 / (j + 1) as u128) as u64
}

/// Degree-`i` eigenvalue `i(N-2+i)` of `-Δ_{S^{N-1}}` and its multiplicity.
pub fn sphere_eigenvalue(dim: Dimension, degree: usize) -> ModeIndex {
    let n = dim.n() as u64;
    let i = degree as u64;
    let multiplicity = match i {
        0 => 1,
        1 => n,
        _ => binomial(n + i - 1, i) - binomial(n + i - 3, i - 2),
    };
    ModeIndex {
        degree,
        eigenvalue: (i * (n - 2 + i)) as f64,
        multiplicity,
    }
}

/// Roots of `μ² - (N-2)μ - λ_k = 0`, ascending; `z ~ r^{-μ}` as `r → 0`.
pub fn indicial_roots_origin(dim: Dimension, mode: ModeIndex) -> (f64, f64) {
    let a = dim.nf() - 2.0;
    let d = (a * a + 4.0 * mode.eigenvalue).sqrt();
    ((a - d) / 2.0, (a + d) / 2.0)
}

/// Roots `(μ⁺, μ⁻)` of `μ² - (N-2)μ + 2(N-2) - λ_k = 0`; `φ ~ r^{-μ}` as
/// `r → ∞`. For degree 1 the pair is `(N-3, 1)`.
pub fn indicial_roots_infinity(dim: Dimension, mode: ModeIndex) -> (Complex64, Complex64) {
    let n = dim.nf();
    if mode.degree == 1 {
        return (Complex64::new(n - 3.0, 0.0), Complex64::new(1.0, 0.0));
    }
    let half = (n - 2.0) / 2.0;
    let disc = (n - 2.0) * (n - 2.0) - 4.0 * (2.0 * (n - 2.0) - mode.eigenvalue);
    if disc >= 0.0 {
        let r = 0.5 * disc.sqrt();
        (Complex64::new(half + r, 0.0), Complex64::new(half - r, 0.0))
    } else {
        let r = 0.5 * (-disc).sqrt();
        (Complex64::new(half, r), Complex64::new(half, -r))
    }
}

/// Radial profile of one Fourier mode, tabulated on a log-uniform grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeFunction {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    pub mode: ModeIndex,
}

impl ModeFunction {
    pub fn from_fn(grid: &RadialGrid, mode: ModeIndex, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.r_nodes().into_iter().map(f).collect(),
            mode,
        }
    }

    /// Four-point interpolation in `log r`; constant extrapolation is avoided
    /// by clamping to the grid range.
    pub fn eval(&self, r: f64) -> f64 {
        let s = r.ln().clamp(self.grid.s_min(), self.grid.s_max());
        quad::lagrange4(&self.values, self.grid.s_min(), self.grid.step(), s)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
            mode: self.mode,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomogeneousPair {
    pub z1: ModeFunction,
    pub z2: ModeFunction,
    /// `max |r^{N-1} W(z₁, z₂) - 1|` over interior nodes
    pub wronskian_check: f64,
    pub r0: f64,
}

/// Default mode grid: `r ∈ [10⁻⁴, 10⁶]`, `Δs = log(10⁴)/4000`, with `r = 1`
/// an exact node.
pub fn mode_grid() -> RadialGrid {
    let h = (1e4f64).ln() / 4000.0;
    RadialGrid::from_log_step(-4000.0 * h, h, 10001).expect("static grid")
}

fn require_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        invalid(format!("alpha must be positive, got {alpha}"))
    }
}

/// Explicit homogeneous solution from scaling (degree 0, `z₁ = v₂(log αr) + 2`)
/// or translation (degree 1, `z₁ = -U_α'`) invariance.
pub fn homogeneous_z1(
    profile: &RadialProfile,
    alpha: f64,
    mode: ModeIndex,
    grid: &RadialGrid,
) -> Result<ModeFunction> {
    require_alpha(alpha)?;
    let la = alpha.ln();
    let values = match mode.degree {
        0 => grid.s_nodes().iter().map(|s| profile.at_log(s + la).y).collect(),
        1 => grid
            .s_nodes()
            .iter()
            .map(|s| -profile.at_log(s + la).rdu / s.exp())
            .collect(),
        d => return Err(GelfandError::NoExplicitSolution(d)),
    };
    Ok(ModeFunction {
        grid: grid.clone(),
        values,
        mode,
    })
}

/// Index of the reduction-of-order anchor: the last node of the run around
/// the first local maximum of `z₁` on which `z₁ > ½ max`.
fn anchor_index(z1: &[f64]) -> Result<usize> {
    let im = (0..z1.len() - 1)
        .find(|&i| z1[i + 1] < z1[i])
        .unwrap_or(z1.len() - 1);
    let half = 0.5 * z1[im];
    let mut j = im;
    while j + 1 < z1.len() && z1[j + 1] > half {
        j += 1;
    }
    if z1[..=j].iter().any(|v| !(*v > 0.0)) {
        return Err(GelfandError::Singular("z1 vanishes before the anchor r0".into()));
    }
    Ok(j)
}

/// Second homogeneous solution with `r^{N-1}W(z₁, z₂) = 1` and `z₂(r₀) = 0`:
/// `z₂ = z₁ ∫_{r₀}^r z₁⁻² τ^{1-N}` on `(0, r₀]`, continued past `r₀` by
/// integrating the homogeneous equation.
///
/// `r0 = None` selects the anchor automatically.
pub fn homogeneous_z2(
    z1: &ModeFunction,
    profile: &RadialProfile,
    alpha: f64,
    r0: Option<f64>,
) -> Result<ModeFunction> {
    require_alpha(alpha)?;
    let grid = &z1.grid;
    let dim = profile.dim();
    let nm2 = dim.nf() - 2.0;
    let j = match r0 {
        Some(r) => {
            let j = grid.nearest(r);
            if z1.values[..=j].iter().any(|v| !(*v > 0.0)) {
                return Err(GelfandError::Singular(format!("z1 vanishes in (0, {r}]")));
            }
            j
        }
        None => anchor_index(&z1.values)?,
    };
    let s = grid.s_nodes();
    let h = grid.step();
    // K(s) = -∫_s^{s_j} z1^{-2} e^{(2-N)t} dt, by cumulative quadrature from s_j down
    let integrand: Vec<f64> = (0..=j)
        .rev()
        .map(|i| (-nm2 * s[i]).exp() / (z1.values[i] * z1.values[i]))
        .collect();
    let back = quad::cumulative(&integrand, h);
    let mut values = vec![0.0; grid.len()];
    for (k, i) in (0..=j).rev().enumerate() {
        values[i] = -z1.values[i] * back[k];
    }
    if j + 1 < grid.len() {
        let la = alpha.ln();
        let lk = z1.mode.eigenvalue;
        let rhs = |t: f64, v: &[f64; 2]| [v[1], -nm2 * v[1] - (profile.v1(t + la) - lk) * v[0]];
        let start = [0.0, (-nm2 * s[j]).exp() / z1.values[j]];
        let solver = Dopri5::new(ErrorControl::StateNorm {
            rtol: 1e-12,
            atol: 1e-300,
        })
        .with_h_max(0.05);
        let out = solver.integrate(rhs, s[j], start, &s[j + 1..], |v| v[0].is_finite())?;
        for (k, v) in out.into_iter().enumerate() {
            values[j + 1 + k] = v[0];
        }
    }
    Ok(ModeFunction {
        grid: grid.clone(),
        values,
        mode: z1.mode,
    })
}

/// `z₁`, `z₂` and the Wronskian normalization check.
pub fn homogeneous_pair(
    profile: &RadialProfile,
    alpha: f64,
    mode: ModeIndex,
    grid: &RadialGrid,
) -> Result<HomogeneousPair> {
    let z1 = homogeneous_z1(profile, alpha, mode, grid)?;
    let j = anchor_index(&z1.values)?;
    let z2 = homogeneous_z2(&z1, profile, alpha, Some(grid.r(j)))?;
    let nm2 = profile.dim().nf() - 2.0;
    let d1 = quad::derivative6(&z1.values, grid.step());
    let d2 = quad::derivative6(&z2.values, grid.step());
    let mut check: f64 = 0.0;
    for i in 0..grid.len() {
        if let (Some(a), Some(b)) = (d1[i], d2[i]) {
            let w = (nm2 * grid.s(i)).exp() * (z1.values[i] * b - a * z2.values[i]);
            check = check.max((w - 1.0).abs());
        }
    }
    Ok(HomogeneousPair {
        z1,
        z2,
        wronskian_check: check,
        r0: grid.r(j),
    })
}

/// Solve one mode, rejecting right-hand sides with infinite `‖h‖_**` and, for
/// `N = 3` degree 1, right-hand sides that violate the orthogonality condition.
pub fn solve_mode(
    profile: &RadialProfile,
    alpha: f64,
    h: &ModeFunction,
    params: &WeightedNormParams,
) -> Result<ModeFunction> {
    if !h.is_finite() {
        return invalid("right-hand side has non-finite values");
    }
    let sampling = NormSampling {
        rho_min: h.grid.r_min(),
        rho_max: h.grid.r_max(),
        nodes: h.grid.len().min(4001),
    };
    let hn = norm_starstar(&|r| h.eval(r), params, &sampling);
    if !hn.is_finite() {
        return invalid("right-hand side has infinite weighted norm");
    }
    if profile.dim().n() == 3 && h.mode.degree == 1 {
        let d = orthogonality_defect(h, profile, alpha)?;
        let scale = weighted_abs_integral(h, profile, alpha)?;
        if d.abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
            return Err(GelfandError::Obstruction { defect: d });
        }
    }
    variation_of_parameters(profile, alpha, h)
}

/// The kernel solve of [`solve_mode`] without admissibility checks.
pub fn variation_of_parameters(
    profile: &RadialProfile,
    alpha: f64,
    h: &ModeFunction,
) -> Result<ModeFunction> {
    require_alpha(alpha)?;
    let n = profile.dim().n();
    match h.mode.degree {
        0 if n <= 9 => {
            let pair = homogeneous_pair(profile, alpha, h.mode, &h.grid)?;
            two_solution_kernel(&pair.z1, &pair.z2, h, profile.dim())
        }
        0 | 1 => {
            let z1 = homogeneous_z1(profile, alpha, h.mode, &h.grid)?;
            nested_kernel(&z1, h, profile.dim())
        }
        _ => green_kernel(profile, alpha, h),
    }
}

/// `∫_{-∞}^{s_i} f ds` at every node, with the head below the grid estimated
/// from the leading exponential.
fn integral_from_origin(f: &[f64], h: f64, what: &str) -> Result<Vec<f64>> {
    let head = quad::head_tail(f[0], f[1], h)
        .ok_or_else(|| GelfandError::Divergent(format!("{what} at the origin")))?;
    Ok(quad::cumulative(f, h).into_iter().map(|c| c + head).collect())
}

/// `∫_{s_i}^{∞} f ds` at every node, accumulated from the far end.
fn integral_to_infinity(f: &[f64], h: f64, what: &str) -> Result<Vec<f64>> {
    let n = f.len();
    let tail = quad::end_tail(f[n - 2], f[n - 1], h)
        .ok_or_else(|| GelfandError::Divergent(format!("{what} at infinity")))?;
    let rev: Vec<f64> = f.iter().rev().copied().collect();
    let mut out: Vec<f64> = quad::cumulative(&rev, h).into_iter().map(|c| c + tail).collect();
    out.reverse();
    Ok(out)
}

fn two_solution_kernel(
    z1: &ModeFunction,
    z2: &ModeFunction,
    h: &ModeFunction,
    dim: Dimension,
) -> Result<ModeFunction> {
    let grid = &h.grid;
    let step = grid.step();
    let nf = dim.nf();
    let s = grid.s_nodes();
    let f1: Vec<f64> = (0..grid.len())
        .map(|i| z1.values[i] * h.values[i] * (nf * s[i]).exp())
        .collect();
    let f2: Vec<f64> = (0..grid.len())
        .map(|i| z2.values[i] * h.values[i] * (nf * s[i]).exp())
        .collect();
    let b = integral_from_origin(&f1, step, "∫ z1 h r^{N-1}")?;
    let c2 = quad::cumulative(&f2, step);
    let at_one = quad::lagrange4(&c2, grid.s_min(), step, 0.0);
    let values = (0..grid.len())
        .map(|i| z2.values[i] * b[i] - z1.values[i] * (c2[i] - at_one))
        .collect();
    Ok(ModeFunction {
        grid: grid.clone(),
        values,
        mode: h.mode,
    })
}

fn nested_kernel(z1: &ModeFunction, h: &ModeFunction, dim: Dimension) -> Result<ModeFunction> {
    let grid = &h.grid;
    let step = grid.step();
    let nf = dim.nf();
    let s = grid.s_nodes();
    if z1.values.iter().any(|v| !(*v > 0.0)) {
        return Err(GelfandError::Singular(
            "z1 must be positive for the nested kernel".into(),
        ));
    }
    let f: Vec<f64> = (0..grid.len())
        .map(|i| z1.values[i] * h.values[i] * (nf * s[i]).exp())
        .collect();
    let inner = integral_from_origin(&f, step, "∫ z1 h r^{N-1}")?;
    let g: Vec<f64> = (0..grid.len())
        .map(|i| inner[i] * ((2.0 - nf) * s[i]).exp() / (z1.values[i] * z1.values[i]))
        .collect();
    let outer = integral_from_origin(&g, step, "∫ z1^-2 r^{1-N} (...)")?;
    let values = (0..grid.len()).map(|i| z1.values[i] * outer[i]).collect();
    Ok(ModeFunction {
        grid: grid.clone(),
        values,
        mode: h.mode,
    })
}

/// `(log z, z_s/z)` at every node for the solution of the homogeneous
/// equation started at node `from` with logarithmic slope `g0`, from the
/// Riccati form `g' = -g² - (N-2)g - q`.
fn log_solution(
    profile: &RadialProfile,
    alpha: f64,
    mode: ModeIndex,
    grid: &RadialGrid,
    forward: bool,
    g0: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nm2 = profile.dim().nf() - 2.0;
    let la = alpha.ln();
    let lk = mode.eigenvalue;
    let rhs = |t: f64, v: &[f64; 2]| [-v[0] * v[0] - nm2 * v[0] - (profile.v1(t + la) - lk), v[0]];
    let s = grid.s_nodes();
    let solver = Dopri5::new(ErrorControl::Componentwise {
        rtol: 1e-13,
        atol: 1e-13,
    })
    .with_h_max(0.05);
    let n = s.len();
    let mut g = vec![0.0; n];
    let mut l = vec![0.0; n];
    if forward {
        g[0] = g0;
        let out = solver.integrate(rhs, s[0], [g0, 0.0], &s[1..], |v| v[0].is_finite())?;
        for (k, v) in out.into_iter().enumerate() {
            g[k + 1] = v[0];
            l[k + 1] = v[1];
        }
    } else {
        g[n - 1] = g0;
        let targets: Vec<f64> = s[..n - 1].iter().rev().copied().collect();
        let out = solver.integrate(rhs, s[n - 1], [g0, 0.0], &targets, |v| v[0].is_finite())?;
        for (k, v) in out.into_iter().enumerate() {
            g[n - 2 - k] = v[0];
            l[n - 2 - k] = v[1];
        }
    }
    // normalize to log z = 0 at the node nearest r = 1
    let c = l[grid.nearest(1.0)];
    l.iter_mut().for_each(|v| *v -= c);
    Ok((l, g))
}

fn green_kernel(profile: &RadialProfile, alpha: f64, h: &ModeFunction) -> Result<ModeFunction> {
    let dim = profile.dim();
    let grid = &h.grid;
    let mode = h.mode;
    let (_, mu_origin) = indicial_roots_origin(dim, mode);
    let regular = -(indicial_roots_origin(dim, mode).0);
    let _ = mu_origin;
    let (mu_plus, _) = indicial_roots_infinity(dim, mode);
    let (lr, gr) = log_solution(profile, alpha, mode, grid, true, regular)?;
    let (ld, gd) = log_solution(profile, alpha, mode, grid, false, -mu_plus.re)?;
    let nf = dim.nf();
    let s = grid.s_nodes();
    let i1 = grid.nearest(1.0);
    // r^{N-1} W(z_reg, z_dec) is constant; evaluate where both are O(1)
    let c = ((nf - 2.0) * s[i1] + lr[i1] + ld[i1]).exp() * (gd[i1] - gr[i1]);
    if !(c.abs() > 0.0) || !c.is_finite() {
        return Err(GelfandError::Singular(
            "degenerate Wronskian for high mode".into(),
        ));
    }
    let step = grid.step();
    let fr: Vec<f64> = (0..grid.len())
        .map(|i| (lr[i] + nf * s[i]).exp() * h.values[i])
        .collect();
    let fd: Vec<f64> = (0..grid.len())
        .map(|i| (ld[i] + nf * s[i]).exp() * h.values[i])
        .collect();
    let p = integral_from_origin(&fr, step, "∫ z_reg h r^{N-1}")?;
    let q = integral_to_infinity(&fd, step, "∫ z_dec h r^{N-1}")?;
    let values = (0..grid.len())
        .map(|i| (ld[i].exp() * p[i] + lr[i].exp() * q[i]) / c)
        .collect();
    Ok(ModeFunction {
        grid: grid.clone(),
        values,
        mode,
    })
}

/// `∫₀^∞ z₁ h τ² dτ` with `z₁ = -U_α'`; the solvability condition for the
/// degree-1 mode when `N = 3`.
pub fn orthogonality_defect(h: &ModeFunction, profile: &RadialProfile, alpha: f64) -> Result<f64> {
    degree_one_moment(h, profile, alpha, false)
}

fn weighted_abs_integral(h: &ModeFunction, profile: &RadialProfile, alpha: f64) -> Result<f64> {
    degree_one_moment(h, profile, alpha, true)
}

fn degree_one_moment(h: &ModeFunction, profile: &RadialProfile, alpha: f64, abs: bool) -> Result<f64> {
    if profile.dim().n() != 3 || h.mode.degree != 1 {
        return invalid("orthogonality defect is defined for N = 3, degree 1");
    }
    let z1 = homogeneous_z1(profile, alpha, h.mode, &h.grid)?;
    let s = h.grid.s_nodes();
    let f: Vec<f64> = (0..s.len())
        .map(|i| {
            let v = z1.values[i] * h.values[i] * (3.0 * s[i]).exp();
            if abs {
                v.abs()
            } else {
                v
            }
        })
        .collect();
    let total = integral_from_origin(&f, h.grid.step(), "defect integrand")?;
    let n = f.len();
    let tail = quad::end_tail(f[n - 2], f[n - 1], h.grid.step())
        .ok_or_else(|| GelfandError::Divergent("defect integrand at infinity".into()))?;
    Ok(total[n - 1] + tail)
}

/// Remove the defect along `e^{U_α} z₁`, whose own defect is positive.
pub fn project_out_defect(h: &ModeFunction, profile: &RadialProfile, alpha: f64) -> Result<ModeFunction> {
    let z1 = homogeneous_z1(profile, alpha, h.mode, &h.grid)?;
    let psi = ModeFunction {
        values: h
            .grid
            .r_nodes()
            .iter()
            .zip(&z1.values)
            .map(|(r, z)| profile.scaled(alpha, *r).exp() * z)
            .collect(),
        ..h.clone()
    };
    let d = orthogonality_defect(h, profile, alpha)?;
    let dp = orthogonality_defect(&psi, profile, alpha)?;
    Ok(h.sub(&psi.scaled(d / dp)))
}

/// `L_k φ` at `r` from the value and first two derivatives of `φ`.
pub fn apply_operator(
    profile: &RadialProfile,
    alpha: f64,
    mode: ModeIndex,
    r: f64,
    phi: f64,
    dphi: f64,
    d2phi: f64,
) -> f64 {
    let n = profile.dim().nf();
    let pot = profile.v1((alpha * r).ln()) - mode.eigenvalue;
    d2phi + (n - 1.0) * dphi / r + pot * phi / (r * r)
}

/// `(r, L_kφ - h)` on every `stride`-th node, from sixth-order differences in
/// `s` on the subsampled grid.
pub fn operator_residual(
    profile: &RadialProfile,
    alpha: f64,
    phi: &ModeFunction,
    h: &ModeFunction,
    stride: usize,
) -> Vec<(f64, f64)> {
    let stride = stride.max(1);
    let grid = &phi.grid;
    let idx: Vec<usize> = (0..grid.len()).step_by(stride).collect();
    let sub: Vec<f64> = idx.iter().map(|&i| phi.values[i]).collect();
    let hs = grid.step() * stride as f64;
    let d1 = quad::derivative6(&sub, hs);
    let dd = quad::second_derivative6(&sub, hs);
    let nm2 = profile.dim().nf() - 2.0;
    let la = alpha.ln();
    idx.iter()
        .enumerate()
        .filter_map(|(k, &i)| {
            let (a, b) = (d1[k]?, dd[k]?);
            let s = grid.s(i);
            let q = profile.v1(s + la) - phi.mode.eigenvalue;
            let r2 = (2.0 * s).exp();
            Some((s.exp(), (b + nm2 * a + q * sub[k]) / r2 - h.values[i]))
        })
        .collect()
}
