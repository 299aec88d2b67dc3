//! One function per subcommand. Each writes its CSV artifacts and returns the
//! `result` object of the JSON summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use gelfand_core::exterior::{assemble_solution, capacity, newton_oracle, ExteriorConfig, ExteriorProblem};
use gelfand_core::io::{write_csv, CsvMeta};
use gelfand_core::modes::{
    mode_grid, operator_residual, orthogonality_defect, project_out_defect, solve_mode, sphere_eigenvalue,
    ModeFunction,
};
use gelfand_core::norms::{norm_star, norm_starstar, NormSampling, WeightedNormParams};
use gelfand_core::phase::{
    asymptotic_fit, barrier_offsets, check_phase_bounds, convergence_s, equilibria, heteroclinic,
    linearization_eigenvalues, lyapunov_excess, oscillation_crossings,
};
use gelfand_core::profile::{
    crossings_of_lambda0, default_profile, ode_residuals, solve_profile, RadialProfile,
};
use gelfand_core::reduction::{reduced_field_leading, shell_component, Point};
use gelfand_core::{fit, Dimension, GelfandError, RadialGrid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CommandKind, RunConfig};

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub dir: PathBuf,
    pub meta: CsvMeta,
}

impl Context<'_> {
    fn csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
        write_csv(&self.dir.join(name), &self.meta, header, rows)?;
        Ok(name.to_string())
    }

    fn dim(&self) -> Result<Dimension> {
        Dimension::new(self.config.n)
    }

    fn profile(&self) -> Result<RadialProfile> {
        match self.config.tol {
            Some(tol) => solve_profile(self.dim()?, &RadialGrid::default_profile(), tol),
            None => default_profile(self.dim()?),
        }
    }
}

pub fn run(ctx: &Context) -> Result<Value> {
    fs::create_dir_all(&ctx.dir)?;
    match ctx.config.command {
        CommandKind::Profile => profile(ctx),
        CommandKind::Phase => phase(ctx),
        CommandKind::Modes => modes(ctx),
        CommandKind::Exterior => exterior(ctx),
        CommandKind::Reduce3d => reduce3d(ctx),
        CommandKind::Bifurcation => bifurcation(ctx),
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn profile(ctx: &Context) -> Result<Value> {
    let cfg = ctx.config;
    let grid = RadialGrid::log_uniform(1e-4, cfg.rmax, cfg.nodes)?;
    let p = solve_profile(ctx.dim()?, &grid, cfg.tol.unwrap_or(1e-10))?;
    let res = ode_residuals(&p);
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .map(|i| {
            let (r, q) = (grid.r(i), p.at_log(grid.s(i)));
            vec![r, q.u, q.rdu / r, q.w, q.y, res[i].unwrap_or(f64::NAN)]
        })
        .collect();
    let file = ctx.csv("profile.csv", &["r", "U", "dU", "w", "y", "residual"], &rows)?;
    let known: Vec<f64> = res.iter().flatten().map(|v| v.abs()).collect();
    let mean = known.iter().sum::<f64>() / known.len().max(1) as f64;
    Ok(json!({
        "csv": file,
        "summary": p.summary(),
        "residual": { "max": max_abs(known.iter().copied()), "mean": mean, "evaluated_nodes": known.len() },
    }))
}

#[derive(Serialize)]
struct BoundsCheck {
    pass: bool,
    /// distance to each side of the box; all positive iff the check passes
    margin_v1_lower: f64,
    margin_v1_upper: f64,
    margin_v2_lower: f64,
    margin_v2_upper: f64,
    /// sign-constancy of `v₁ - (λ₀ + 2μ₋ + μ₋v₂)` along the orbit (`N ≥ 10`)
    barrier: Option<BarrierCheck>,
}

#[derive(Serialize)]
struct BarrierCheck {
    constant_sign: bool,
    min_abs_offset: f64,
}

fn phase(ctx: &Context) -> Result<Value> {
    let d = ctx.dim()?;
    let l0 = d.lambda0();
    let p = ctx.profile()?;
    let traj = heteroclinic(&p)?;
    let rows: Vec<Vec<f64>> = traj
        .states
        .iter()
        .map(|q| vec![q.s, q.v1, q.v2, q.w, q.y, lyapunov_excess(q, d)])
        .collect();
    let file = ctx.csv(
        "heteroclinic.csv",
        &["s", "v1", "v2", "w", "y", "lyapunov_excess"],
        &rows,
    )?;
    let fit = asymptotic_fit(&traj).map_err(|e| e.to_string());
    let mut out = json!({
        "csv": file,
        "lambda0": l0,
        "equilibria": equilibria(d),
        "eigenvalues_at_singular": linearization_eigenvalues(d),
        "arrival_s": convergence_s(&traj, 1e-6, 1.0),
        "crossings_of_lambda0": oscillation_crossings(&traj).len(),
        "asymptotic_fit": match fit { Ok(f) => json!(f), Err(e) => json!({ "error": e }) },
    });
    if ctx.config.check_bounds {
        let b = check_phase_bounds(&traj);
        let barrier = if d.n() >= 10 {
            let offs = barrier_offsets(&p, traj.s_max(), 1e-12)?;
            let first = offs[0].1.signum();
            Some(BarrierCheck {
                constant_sign: offs.iter().all(|(_, o)| o.signum() == first && *o != 0.0),
                min_abs_offset: offs.iter().fold(f64::INFINITY, |m, (_, o)| m.min(o.abs())),
            })
        } else {
            None
        };
        let check = BoundsCheck {
            pass: b.pass,
            margin_v1_lower: b.min_v1,
            margin_v1_upper: -l0 * b.max_w.exp_m1(),
            margin_v2_lower: b.min_y,
            margin_v2_upper: -b.max_v2,
            barrier,
        };
        println!(
            "check-bounds N={}: {} (margins v1 {:.3e}/{:.3e}, v2 {:.3e}/{:.3e})",
            d.n(),
            if check.pass { "PASS" } else { "FAIL" },
            check.margin_v1_lower,
            check.margin_v1_upper,
            check.margin_v2_lower,
            check.margin_v2_upper
        );
        out["check_bounds"] = json!(check);
        out["check_bounds"]["extremes"] = json!(b);
    }
    Ok(out)
}

fn bump(center: f64, width: f64, amplitude: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| amplitude * (-(r.ln() - center).powi(2) / (2.0 * width * width)).exp()
}

fn modes(ctx: &Context) -> Result<Value> {
    let cfg = ctx.config;
    let d = ctx.dim()?;
    let p = ctx.profile()?;
    let grid = mode_grid();
    let mode = sphere_eigenvalue(d, cfg.degree);
    let defaults = WeightedNormParams::default_for(d);
    let params = WeightedNormParams::new(
        d,
        cfg.beta.unwrap_or(defaults.beta),
        cfg.sigma.unwrap_or(defaults.sigma),
        vec![0.0; d.n()],
        1.0,
    )?;
    let sampling = NormSampling {
        rho_min: grid.r_min(),
        rho_max: grid.r_max(),
        nodes: 4001,
    };
    let obstructed = d.n() == 3 && cfg.degree == 1;
    let admissible = |h: ModeFunction| {
        if obstructed {
            project_out_defect(&h, &p, cfg.alpha)
        } else {
            Ok(h)
        }
    };

    let raw = ModeFunction::from_fn(&grid, mode, bump(0.0, 0.5, 1.0));
    let defect = if obstructed {
        Some(orthogonality_defect(&raw, &p, cfg.alpha)?)
    } else {
        None
    };
    let h = admissible(raw)?;
    let phi = solve_mode(&p, cfg.alpha, &h, &params)?;
    let residual = max_abs(
        operator_residual(&p, cfg.alpha, &phi, &h, 4)
            .into_iter()
            .filter(|(r, _)| (1e-2..=1e2).contains(r))
            .map(|(_, v)| v),
    );
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .map(|i| vec![grid.r(i), h.values[i], phi.values[i]])
        .collect();
    let file = ctx.csv("mode.csv", &["r", "h", "phi"], &rows)?;
    let h_norm = norm_starstar(&|r| h.eval(r), &params, &sampling);
    let phi_norm = norm_star(&|r| phi.eval(r), &params, &sampling);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut battery = Vec::with_capacity(cfg.samples);
    for k in 0..cfg.samples {
        let (c, w, a) = (
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.3..1.0),
            rng.gen_range(-2.0..2.0),
        );
        let hk = admissible(ModeFunction::from_fn(&grid, mode, bump(c, w, a)))?;
        let pk = solve_mode(&p, cfg.alpha, &hk, &params)?;
        let hn = norm_starstar(&|r| hk.eval(r), &params, &sampling);
        let pn = norm_star(&|r| pk.eval(r), &params, &sampling);
        battery.push(vec![k as f64, c, w, a, hn, pn, pn / hn]);
    }
    let mut out = json!({
        "csv": file,
        "mode": mode,
        "norm_params": params,
        "orthogonality_defect_removed": defect,
        "h_norm": h_norm,
        "phi_norm": phi_norm,
        "ratio": phi_norm / h_norm,
        "operator_residual_max": residual,
    });
    if !battery.is_empty() {
        let worst = battery.iter().map(|r| r[6]).fold(0.0, f64::max);
        let file = ctx.csv(
            "battery.csv",
            &[
                "sample",
                "center",
                "width",
                "amplitude",
                "h_norm",
                "phi_norm",
                "ratio",
            ],
            &battery,
        )?;
        out["battery"] = json!({ "csv": file, "samples": battery.len(), "max_ratio": worst });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
struct ExteriorRecord {
    lambda: f64,
    epsilon: f64,
    csv: String,
    iterations: usize,
    contraction_ratios: Vec<f64>,
    residual_max: f64,
    asymptotic_constant: f64,
    /// `-log(λ/λ₀)`, the leading-order prediction for the constant
    predicted_constant: f64,
    asymptotic_rate: f64,
    phi_norm: f64,
    error_norm: f64,
    newton_gap: Option<f64>,
    newton_error: Option<String>,
}

fn exterior_one(ctx: &Context, p: &RadialProfile, index: usize, lambda: f64) -> Result<ExteriorRecord> {
    let cfg = ctx.config;
    let mut ec = ExteriorConfig::new(ctx.dim()?, cfg.alpha, lambda)?;
    ec.r_max = cfg.rmax;
    if let Some(s) = cfg.sigma {
        ec.sigma = s;
    }
    if let Some(b) = cfg.beta {
        ec.beta = b;
    }
    if let Some(t) = cfg.tol {
        ec.tol = t;
    }
    ec.validate()?;
    let prob = ExteriorProblem::new(&ec, p)?;
    let fp = prob.fixed_point_solve()?;
    let sol = assemble_solution(&prob, &fp)?;
    let rows: Vec<Vec<f64>> = sol.rows().iter().map(|r| r.to_vec()).collect();
    let csv = ctx.csv(
        &format!("solution_{index:03}.csv"),
        &["x", "u", "residual"],
        &rows,
    )?;
    let (newton_gap, newton_error) = match newton_oracle(&prob) {
        Ok(nw) => (
            Some(max_abs(nw.u_scaled.iter().zip(&sol.u_scaled).map(|(a, b)| a - b))),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ExteriorRecord {
        lambda,
        epsilon: ec.epsilon(),
        csv,
        iterations: sol.iterations,
        contraction_ratios: sol.contraction_ratios.clone(),
        residual_max: sol.residual_max,
        asymptotic_constant: sol.asymptotic_constant,
        predicted_constant: -(lambda / ec.dim.lambda0()).ln(),
        asymptotic_rate: sol.asymptotic_rate,
        phi_norm: sol.phi_norm,
        error_norm: sol.error_norm,
        newton_gap,
        newton_error,
    })
}

fn exterior(ctx: &Context) -> Result<Value> {
    let p = ctx.profile()?;
    let lambdas = ctx.config.lambdas();
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(lambdas.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<ExteriorRecord>)>> = Mutex::new(Vec::new());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&lambda) = lambdas.get(k) else { break };
                let r = exterior_one(ctx, &p, k, lambda);
                results.lock().expect("result lock").push((k, r));
            });
        }
    });
    let mut results = results.into_inner().expect("result lock");
    results.sort_by_key(|(k, _)| *k);
    let mut records = Vec::with_capacity(results.len());
    for (_, r) in results {
        records.push(r?);
    }
    let slope = |f: fn(&ExteriorRecord) -> f64| -> Option<f64> {
        if records.len() < 2 {
            return None;
        }
        let x: Vec<f64> = records.iter().map(|r| r.lambda.ln()).collect();
        let y: Vec<f64> = records.iter().map(|r| f(r).ln()).collect();
        fit::line(&x, &y).ok().map(|(_, s)| s)
    };
    let sigma = ctx
        .config
        .sigma
        .unwrap_or(ExteriorConfig::new(ctx.dim()?, ctx.config.alpha, lambdas[0])?.sigma);
    Ok(json!({
        "solutions": records,
        "slopes": {
            "phi_norm": slope(|r| r.phi_norm),
            "error_norm": slope(|r| r.error_norm),
            "predicted": 0.5 * sigma,
        },
    }))
}

fn directions(count: usize, seed: u64) -> Vec<Point> {
    let axes: [Point; 6] = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let mut out: Vec<Point> = axes.into_iter().take(count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let v: Point = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (1e-3..=1.0).contains(&n) {
            out.push(v.map(|x| x / n));
        }
    }
    out
}

fn reduce3d(ctx: &Context) -> Result<Value> {
    let cfg = ctx.config;
    let d = ctx.dim()?;
    let p = ctx.profile()?;
    let f0 = capacity(d, 1e4, 20001)?.f0_limit;
    let mut rows = Vec::new();
    let mut shell_gap: f64 = 0.0;
    let mut quad_err: f64 = 0.0;
    let mut gradients = Vec::new();
    let origin = reduced_field_leading(&[0.0; 3], cfg.lambda, &p, cfg.alpha, f0)?;
    let mut fields = vec![origin];
    for dir in directions(cfg.directions, cfg.seed) {
        let xi = dir.map(|v| v * cfg.radius);
        let g = reduced_field_leading(&xi, cfg.lambda, &p, cfg.alpha, f0)?;
        let shell = f0 * cfg.lambda.sqrt() * shell_component(&p, cfg.alpha, cfg.radius);
        shell_gap = shell_gap.max((g.dot_xi() / cfg.radius - shell).abs());
        quad_err = quad_err.max(g.quadrature_error);
        gradients.push(json!({ "xi": xi, "profile_gradient": g.profile_gradient }));
        fields.push(g);
    }
    for g in &fields {
        let dot = g.dot_xi();
        rows.push(vec![
            g.xi[0],
            g.xi[1],
            g.xi[2],
            g.g[0],
            g.g[1],
            g.g[2],
            if dot == 0.0 { 0.0 } else { dot.signum() },
        ]);
    }
    let file = ctx.csv(
        "reduced_field.csv",
        &["xi_x", "xi_y", "xi_z", "G_x", "G_y", "G_z", "dot_sign"],
        &rows,
    )?;
    let inward = fields.iter().skip(1).all(|g| g.dot_xi() < 0.0);
    Ok(json!({
        "csv": file,
        "f0": f0,
        "inward_everywhere": inward,
        "shell_check_gap": shell_gap,
        "quadrature_error": quad_err,
        "profile_gradients": gradients,
    }))
}

fn bifurcation(ctx: &Context) -> Result<Value> {
    let cfg = ctx.config;
    let d = ctx.dim()?;
    let p = ctx.profile()?;
    let pts = p.bifurcation(&log_spaced(cfg.alpha_min, cfg.alpha_max, cfg.points))?;
    let rows: Vec<Vec<f64>> = pts.iter().map(|b| vec![b.alpha, b.lambda, b.u_center]).collect();
    let file = ctx.csv("bifurcation.csv", &["alpha", "lambda", "u_center"], &rows)?;
    let lambda_max = pts.iter().map(|b| b.lambda).fold(0.0, f64::max);
    Ok(json!({
        "csv": file,
        "lambda0": d.lambda0(),
        "lambda_max": lambda_max,
        "crossings_of_lambda0": crossings_of_lambda0(&pts, d.lambda0()),
    }))
}

/// Exit status for a core error: 2 for rejected parameters, 3 otherwise.
pub fn exit_code(e: &GelfandError) -> i32 {
    match e {
        GelfandError::InvalidParameter(_) => 2,
        _ => 3,
    }
}

pub fn error_kind(e: &GelfandError) -> &'static str {
    match e {
        GelfandError::InvalidParameter(_) => "invalid-parameter",
        GelfandError::Integration { .. } => "integration",
        GelfandError::BlowUp { .. } => "blow-up",
        GelfandError::InsufficientData(_) => "insufficient-data",
        GelfandError::Divergent(_) => "divergent",
        GelfandError::NoExplicitSolution(_) => "no-explicit-solution",
        GelfandError::Obstruction { .. } => "obstruction",
        GelfandError::NonContraction { .. } => "non-contraction",
        GelfandError::NewtonDivergence { .. } => "newton-divergence",
        GelfandError::Overflow(_) => "overflow",
        GelfandError::Singular(_) => "singular",
        GelfandError::Io(_) => "io",
    }
}

pub fn summary_path(dir: &Path, ok: bool) -> PathBuf {
    dir.join(if ok { "summary.json" } else { "error.json" })
}
