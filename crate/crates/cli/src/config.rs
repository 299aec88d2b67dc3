//! Run configuration: defaults, then a `key = value` file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const OUTPUT_ENV: &str = "GELFAND_OUTPUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "gelfand", version, about = "Numerics for -Δu = λe^u outside a ball")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the entire radial profile and export it with residual statistics
    Profile(Opts),
    /// Heteroclinic orbit, equilibria, tail fit and the box-bound check
    Phase(Opts),
    /// Solve one Fourier mode of the linearized operator, optionally a random battery
    Modes(Opts),
    /// Fixed-point construction outside the unit ball, with the Newton cross-check
    Exterior(Opts),
    /// Leading-order reduced field on a sphere of centers (N = 3)
    Reduce3d(Opts),
    /// Ball bifurcation diagram (α, λ_α, u_α(0))
    Bifurcation(Opts),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Profile,
    Phase,
    Modes,
    Exterior,
    Reduce3d,
    Bifurcation,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Profile => "profile",
            Self::Phase => "phase",
            Self::Modes => "modes",
            Self::Exterior => "exterior",
            Self::Reduce3d => "reduce3d",
            Self::Bifurcation => "bifurcation",
        };
        f.write_str(s)
    }
}

impl Command {
    pub fn split(self) -> (CommandKind, Opts) {
        match self {
            Self::Profile(o) => (CommandKind::Profile, o),
            Self::Phase(o) => (CommandKind::Phase, o),
            Self::Modes(o) => (CommandKind::Modes, o),
            Self::Exterior(o) => (CommandKind::Exterior, o),
            Self::Reduce3d(o) => (CommandKind::Reduce3d, o),
            Self::Bifurcation(o) => (CommandKind::Bifurcation, o),
        }
    }
}

/// Flags shared by all subcommands. Each overrides the config file key of the
/// same name.
#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// flat `key = value` file; flags win over its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// space dimension N ≥ 3
    #[arg(long = "N", short = 'N')]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// log-spaced λ range `hi:lo`, endpoints included
    #[arg(long)]
    pub lambda_sweep: Option<String>,
    #[arg(long)]
    pub sweep_points: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// outer radius (profile grid, or scaled truncation radius for exterior)
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub degree: Option<usize>,
    /// random right-hand sides for the modes battery (0 disables it)
    #[arg(long)]
    pub samples: Option<usize>,
    /// |ξ| for the reduced-field scan
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub directions: Option<usize>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// check 0 < v₁ < λ₀, -2 < v₂ < 0 along the heteroclinic and report margins
    #[arg(long = "check-bounds", visible_alias = "check-7b")]
    pub check_bounds: bool,
    /// output root directory
    #[arg(long, env = OUTPUT_ENV)]
    pub out: Option<PathBuf>,
}

/// Fully resolved configuration, embedded in every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub lambda_sweep: Option<(f64, f64)>,
    pub sweep_points: usize,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    pub rmax: f64,
    pub nodes: usize,
    /// `None` keeps each module's own default tolerance
    pub tol: Option<f64>,
    pub seed: u64,
    pub degree: usize,
    pub samples: usize,
    pub radius: f64,
    pub directions: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub points: usize,
    pub check_bounds: bool,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("config line {}: expected key = value", k + 1)))?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn parse_sweep(s: &str) -> Result<(f64, f64), ConfigError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| bad(format!("lambda sweep `{s}` must be hi:lo")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("bad number `{v}` in lambda sweep")))
    };
    Ok((parse(a)?, parse(b)?))
}

impl RunConfig {
    pub fn defaults(command: CommandKind) -> Self {
        let (n, rmax, lambda) = match command {
            CommandKind::Reduce3d => (3, 1e3, 1e-2),
            CommandKind::Exterior => (4, 1e4, 1e-4),
            _ => (4, 1e3, 1e-4),
        };
        Self {
            command,
            n,
            alpha: 1.0,
            lambda,
            lambda_sweep: None,
            sweep_points: 4,
            beta: None,
            sigma: None,
            rmax,
            nodes: 4000,
            tol: None,
            seed: 0,
            degree: 0,
            samples: 0,
            radius: 0.5,
            directions: 6,
            alpha_min: 1e-2,
            alpha_max: 1e2,
            points: 401,
            check_bounds: false,
            output: PathBuf::from("gelfand-out"),
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
            v.parse()
                .map_err(|_| bad(format!("config key `{key}`: cannot parse `{v}`")))
        }
        match key {
            "N" | "n" => self.n = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "lambda-sweep" | "lambda_sweep" => self.lambda_sweep = Some(parse_sweep(value)?),
            "sweep-points" | "sweep_points" => self.sweep_points = num(key, value)?,
            "beta" => self.beta = Some(num(key, value)?),
            "sigma" => self.sigma = Some(num(key, value)?),
            "rmax" => self.rmax = num(key, value)?,
            "nodes" => self.nodes = num(key, value)?,
            "tol" => self.tol = Some(num(key, value)?),
            "seed" => self.seed = num(key, value)?,
            "degree" => self.degree = num(key, value)?,
            "samples" => self.samples = num(key, value)?,
            "radius" => self.radius = num(key, value)?,
            "directions" => self.directions = num(key, value)?,
            "alpha-min" | "alpha_min" => self.alpha_min = num(key, value)?,
            "alpha-max" | "alpha_max" => self.alpha_max = num(key, value)?,
            "points" => self.points = num(key, value)?,
            "check-bounds" | "check_bounds" | "check-7b" => self.check_bounds = num(key, value)?,
            "out" | "output" => self.output = PathBuf::from(value),
            _ => return Err(bad(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Defaults, then the config file (if any), then explicit flags.
    pub fn resolve(command: CommandKind, opts: &Opts) -> Result<Self, ConfigError> {
        let mut cfg = Self::defaults(command);
        if let Some(path) = &opts.config {
            let text = fs::read_to_string(path)
                .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
            for (k, v) in parse_config_text(&text)? {
                cfg.set(&k, &v)?;
            }
        }
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = opts.$field { cfg.$field = v; })* };
        }
        take!(
            n,
            alpha,
            lambda,
            sweep_points,
            rmax,
            nodes,
            seed,
            degree,
            samples,
            radius,
            directions,
            alpha_min,
            alpha_max,
            points
        );
        if opts.beta.is_some() {
            cfg.beta = opts.beta;
        }
        if opts.tol.is_some() {
            cfg.tol = opts.tol;
        }
        if opts.sigma.is_some() {
            cfg.sigma = opts.sigma;
        }
        if let Some(s) = &opts.lambda_sweep {
            cfg.lambda_sweep = Some(parse_sweep(s)?);
        }
        if opts.check_bounds {
            cfg.check_bounds = true;
        }
        if let Some(o) = &opts.out {
            cfg.output = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 3 {
            return Err(bad("N must be at least 3"));
        }
        let positive = [
            ("alpha", self.alpha),
            ("lambda", self.lambda),
            ("rmax", self.rmax),
            ("tol", self.tol.unwrap_or(1.0)),
            ("radius", self.radius),
        ];
        if let Some((k, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(bad(format!("{k} must be positive and finite, got {v}")));
        }
        if let Some((a, b)) = self.lambda_sweep {
            if !(a > 0.0 && b > 0.0) || self.sweep_points < 2 {
                return Err(bad("lambda sweep needs positive endpoints and at least 2 points"));
            }
        }
        if !(self.alpha_min > 0.0 && self.alpha_max > self.alpha_min) || self.points < 2 {
            return Err(bad(
                "bifurcation range needs 0 < alpha-min < alpha-max and at least 2 points",
            ));
        }
        if self.nodes < 100 {
            return Err(bad("nodes must be at least 100"));
        }
        if self.command == CommandKind::Reduce3d && self.n != 3 {
            return Err(bad("reduce3d is defined for N = 3"));
        }
        if self.command == CommandKind::Reduce3d && (self.radius > 1.0 || self.directions == 0) {
            return Err(bad("reduce3d needs 0 < radius <= 1 and at least one direction"));
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output.join(self.command.to_string())
    }

    /// λ values of the run: the sweep (log-spaced, endpoints included) or the single λ.
    pub fn lambdas(&self) -> Vec<f64> {
        match self.lambda_sweep {
            Some((a, b)) => {
                let m = self.sweep_points - 1;
                let mut v: Vec<f64> = (0..=m)
                    .map(|k| (a.ln() + (b.ln() - a.ln()) * k as f64 / m as f64).exp())
                    .collect();
                (v[0], v[m]) = (a, b);
                v
            }
            None => vec![self.lambda],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_parsing() {
        let m = parse_config_text("# comment\nN = 10\nalpha=2 # trailing\n\n").unwrap();
        assert_eq!(m["N"], "10");
        assert_eq!(m["alpha"], "2");
        assert!(parse_config_text("novalue\n").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("gelfand-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        fs::write(&path, "N = 10\nalpha = 3\nseed = 9\n").unwrap();
        let opts = Opts {
            config: Some(path),
            alpha: Some(0.5),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(CommandKind::Phase, &opts).unwrap();
        assert_eq!((cfg.n, cfg.alpha, cfg.seed), (10, 0.5, 9));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn validation_failures() {
        let bad_n = Opts {
            n: Some(2),
            ..Default::default()
        };
        assert!(RunConfig::resolve(CommandKind::Profile, &bad_n).is_err());
        let bad_red = Opts {
            n: Some(4),
            ..Default::default()
        };
        assert!(RunConfig::resolve(CommandKind::Reduce3d, &bad_red).is_err());
        let sweep = Opts {
            lambda_sweep: Some("1e-2".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(CommandKind::Exterior, &sweep).is_err());
    }

    #[test]
    fn sweep_is_log_spaced() {
        let opts = Opts {
            lambda_sweep: Some("1e-2:1e-5".into()),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(CommandKind::Exterior, &opts).unwrap();
        let l = cfg.lambdas();
        assert_eq!(l.len(), 4);
        assert!((l[1] / 1e-3 - 1.0).abs() < 1e-12 && (l[3] / 1e-5 - 1.0).abs() < 1e-12);
    }
}
