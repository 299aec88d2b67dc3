//! Browser bindings: three operations returning JSON strings for `www/index.html`.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use gelfand_core::exterior::{solve_exterior, ExteriorConfig};
use gelfand_core::phase::{check_phase_bounds, heteroclinic};
use gelfand_core::profile::{crossings_of_lambda0, default_profile, RadialProfile};
use gelfand_core::Dimension;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Maximum number of points handed to the page per curve.
const PLOT_POINTS: usize = 800;

thread_local! {
    static PROFILES: RefCell<HashMap<usize, Rc<RadialProfile>>> = RefCell::new(HashMap::new());
}

fn profile(n: usize) -> Result<(Dimension, Rc<RadialProfile>), String> {
    let dim = Dimension::new(n).map_err(|e| e.to_string())?;
    if let Some(p) = PROFILES.with(|m| m.borrow().get(&n).cloned()) {
        return Ok((dim, p));
    }
    let p = Rc::new(default_profile(dim).map_err(|e| e.to_string())?);
    PROFILES.with(|m| m.borrow_mut().insert(n, p.clone()));
    Ok((dim, p))
}

fn thin<T: Copy>(v: &[T]) -> Vec<T> {
    let step = v.len().div_ceil(PLOT_POINTS).max(1);
    let mut out: Vec<T> = v.iter().step_by(step).copied().collect();
    if let Some(last) = v.last() {
        if !(v.len() - 1).is_multiple_of(step) {
            out.push(*last);
        }
    }
    out
}

/// `(α, λ_α, u_α(0))` for log-spaced `α` in `[alpha_min, alpha_max]`.
#[wasm_bindgen]
pub fn bifurcation_curve(n: usize, alpha_min: f64, alpha_max: f64, points: usize) -> Result<String, String> {
    if !(alpha_min > 0.0 && alpha_max > alpha_min) || points < 2 {
        return Err("need 0 < alpha_min < alpha_max and at least 2 points".into());
    }
    let (dim, p) = profile(n)?;
    let (a, b) = (alpha_min.ln(), alpha_max.ln());
    let alphas: Vec<f64> = (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect();
    let pts = p.bifurcation(&alphas).map_err(|e| e.to_string())?;
    Ok(json!({
        "lambda0": dim.lambda0(),
        "alpha": pts.iter().map(|q| q.alpha).collect::<Vec<_>>(),
        "lambda": pts.iter().map(|q| q.lambda).collect::<Vec<_>>(),
        "u_center": pts.iter().map(|q| q.u_center).collect::<Vec<_>>(),
        "crossings": crossings_of_lambda0(&pts, dim.lambda0()),
    })
    .to_string())
}

/// The heteroclinic orbit `(v₁, v₂)(s)` and its box-bound report.
#[wasm_bindgen]
pub fn phase_orbit(n: usize) -> Result<String, String> {
    let (dim, p) = profile(n)?;
    let traj = heteroclinic(&p).map_err(|e| e.to_string())?;
    let states = thin(&traj.states);
    let bounds = check_phase_bounds(&traj);
    Ok(json!({
        "lambda0": dim.lambda0(),
        "s": states.iter().map(|q| q.s).collect::<Vec<_>>(),
        "v1": states.iter().map(|q| q.v1).collect::<Vec<_>>(),
        "v2": states.iter().map(|q| q.v2).collect::<Vec<_>>(),
        "bounds": bounds,
    })
    .to_string())
}

/// Exterior solution `u(x)` on `|x| ≥ 1` for `N`, `α`, `λ`.
#[wasm_bindgen]
pub fn exterior_solution(n: usize, alpha: f64, lambda: f64) -> Result<String, String> {
    let (dim, p) = profile(n)?;
    let cfg = ExteriorConfig::new(dim, alpha, lambda).map_err(|e| e.to_string())?;
    let sol = solve_exterior(&cfg, &p).map_err(|e| e.to_string())?;
    let rows = thin(&sol.rows());
    Ok(json!({
        "epsilon": cfg.epsilon(),
        "x": rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        "u": rows.iter().map(|r| r[1]).collect::<Vec<_>>(),
        "iterations": sol.iterations,
        "residual_max": sol.residual_max,
        "asymptotic_constant": sol.asymptotic_constant,
        "predicted_constant": -(lambda / dim.lambda0()).ln(),
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Result<String, String>) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn bifurcation_curve_shape() {
        let v = parse(bifurcation_curve(3, 0.1, 10.0, 50));
        assert_eq!(v["alpha"].as_array().unwrap().len(), 50);
        assert!(bifurcation_curve(3, 1.0, 0.5, 50).is_err());
        assert!(bifurcation_curve(2, 0.1, 1.0, 50).is_err());
    }

    #[test]
    fn phase_orbit_is_thinned_and_checked() {
        let v = parse(phase_orbit(10));
        let s = v["s"].as_array().unwrap();
        assert!(s.len() <= PLOT_POINTS + 1);
        assert_eq!(v["bounds"]["pass"], true);
    }

    #[test]
    fn exterior_solution_starts_at_zero() {
        let v = parse(exterior_solution(4, 1.0, 1e-4));
        assert!((v["x"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(v["u"][0].as_f64().unwrap(), 0.0);
        assert!(exterior_solution(4, 1.0, 1.0).is_err());
    }
}
