//! Degree ≥ 2 mode solves against an independent finite-difference BVP.

use gelfand_core::modes::{mode_grid, solve_mode, sphere_eigenvalue, ModeFunction, ModeIndex};
use gelfand_core::norms::WeightedNormParams;
use gelfand_core::profile::{default_profile, RadialProfile};
use gelfand_core::Dimension;

fn tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// `φ_ss + (N-2)φ_s + (v₁ - λ_k)φ = r²h` on uniform `s` with zero Dirichlet
/// data at both ends (both far-field branches are killed by the end values).
fn fd_solve(
    p: &RadialProfile,
    mode: ModeIndex,
    h: &dyn Fn(f64) -> f64,
    s0: f64,
    s1: f64,
    m: usize,
) -> Vec<f64> {
    let dh = (s1 - s0) / m as f64;
    let nm2 = p.dim().nf() - 2.0;
    let lo = 1.0 / (dh * dh) - nm2 / (2.0 * dh);
    let hi = 1.0 / (dh * dh) + nm2 / (2.0 * dh);
    let k = m - 1;
    let mut sub = vec![lo; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![hi; k];
    let mut rhs = vec![0.0; k];
    for j in 0..k {
        let s = s0 + (j + 1) as f64 * dh;
        diag[j] = -2.0 / (dh * dh) + p.v1(s) - mode.eigenvalue;
        rhs[j] = (2.0 * s).exp() * h(s.exp());
    }
    sub[0] = 0.0;
    sup[k - 1] = 0.0;
    let mut out = vec![0.0];
    out.extend(tridiagonal(&sub, &diag, &sup, &rhs));
    out.push(0.0);
    out
}

#[test]
fn green_function_matches_finite_differences() {
    let grid = mode_grid();
    let (s0, s1) = (grid.s_min(), grid.s_max());
    let m = grid.len() - 1;
    for n in [3usize, 4, 10] {
        let d = Dimension::new(n).unwrap();
        let p = default_profile(d).unwrap();
        for degree in [2usize, 3, 5] {
            let mode = sphere_eigenvalue(d, degree);
            let bump = |r: f64| (-(r.ln() - 0.3).powi(2) / 0.8).exp() * (1.0 + 0.5 * r.ln().sin());
            let h = ModeFunction::from_fn(&grid, mode, bump);
            let green = solve_mode(&p, 1.0, &h, &WeightedNormParams::default_for(d)).unwrap();
            // Richardson on h and h/2 of the second-order scheme
            let coarse = fd_solve(&p, mode, &bump, s0, s1, m);
            let fine = fd_solve(&p, mode, &bump, s0, s1, 2 * m);
            let oracle: Vec<f64> = (0..=m).map(|i| (4.0 * fine[2 * i] - coarse[i]) / 3.0).collect();
            let idx = (0..=m).filter(|&i| (1e-2..=1e2).contains(&grid.r(i)));
            let scale = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let gap = idx
                .map(|i| (green.values[i] - oracle[i]).abs())
                .fold(0.0, f64::max)
                / scale;
            assert!(gap < 1e-7, "N={n} degree={degree}: relative gap {gap:e}");
        }
    }
}
