use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gelfand_core::io::{csv_body, parse_csv};
use serde_json::Value;

fn gelfand(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gelfand"))
        .args(args)
        .env("GELFAND_OUTPUT_ROOT", out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn profile_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(dir.path(), &["profile", "--N", "4", "--rmax", "1000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("profile/summary.json"));
    assert_eq!(s["config"]["n"], 4);
    assert_eq!(s["config"]["rmax"], 1000.0);
    assert!(s["result"]["residual"]["max"].as_f64().unwrap() < 1e-6);
    let (meta, header, rows) =
        parse_csv(&fs::read_to_string(dir.path().join("profile/profile.csv")).unwrap()).unwrap();
    assert_eq!(meta.seed, 0);
    assert_eq!(header, ["r", "U", "dU", "w", "y", "residual"]);
    assert_eq!(rows.len(), 4000);
    assert!((rows.last().unwrap()[0] - 1000.0).abs() < 1e-9);
}

#[test]
fn check_alias_reports_pass_and_fail() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(dir.path(), &["phase", "--N", "10", "--check-7b"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    let s = json(&dir.path().join("phase/summary.json"));
    let c = &s["result"]["check_bounds"];
    assert_eq!(c["pass"], true);
    assert_eq!(c["barrier"]["constant_sign"], true);
    for k in [
        "margin_v1_lower",
        "margin_v1_upper",
        "margin_v2_lower",
        "margin_v2_upper",
    ] {
        assert!(c[k].as_f64().unwrap() > 0.0, "{k}");
    }

    let o = gelfand(dir.path(), &["phase", "--N", "3", "--check-bounds"]);
    assert!(o.status.success());
    let s = json(&dir.path().join("phase/summary.json"));
    assert_eq!(s["result"]["check_bounds"]["pass"], false);
    assert!(s["result"]["check_bounds"]["margin_v1_upper"].as_f64().unwrap() < 0.0);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        gelfand(dir.path(), &["profile", "--N", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        gelfand(dir.path(), &["profile", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(
        gelfand(dir.path(), &["reduce3d", "--N", "4"]).status.code(),
        Some(2)
    );
    // rejected inside the core: ε = 0.5 is not a small hole
    let o = gelfand(dir.path(), &["exterior", "--N", "4", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let e = json(&dir.path().join("exterior/error.json"));
    assert_eq!(e["error"]["kind"], "invalid-parameter");
    assert_eq!(e["config"]["lambda"], 1.0);
}

#[test]
fn numerical_failure_exits_3_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    // a single contraction step cannot meet the stopping tolerance
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "lambda = 1e-4\ntol = 1e-300\n").unwrap();
    let o = gelfand(dir.path(), &["exterior", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let e = json(&dir.path().join("exterior/error.json"));
    assert_eq!(e["status"], "error");
    assert_eq!(e["error"]["exit_code"], 3);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# bifurcation run\nN = 3\npoints = 50\nalpha-min = 0.1\nalpha-max = 10\nseed = 11\n",
    )
    .unwrap();
    let o = gelfand(
        dir.path(),
        &["bifurcation", "--config", cfg.to_str().unwrap(), "--points", "60"],
    );
    assert!(o.status.success());
    let s = json(&dir.path().join("bifurcation/summary.json"));
    assert_eq!(s["config"]["n"], 3);
    assert_eq!(s["config"]["points"], 60);
    assert_eq!(s["config"]["seed"], 11);
    assert_eq!(s["config"]["alpha_min"], 0.1);
    let (meta, _, rows) =
        parse_csv(&fs::read_to_string(dir.path().join("bifurcation/bifurcation.csv")).unwrap()).unwrap();
    assert_eq!((meta.seed, rows.len()), (11, 60));
}

#[test]
fn reruns_reproduce_csv_bodies() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str], &str); 3] = [
        (
            "modes",
            &[
                "modes",
                "--N",
                "4",
                "--degree",
                "2",
                "--samples",
                "4",
                "--seed",
                "5",
            ],
            "battery.csv",
        ),
        (
            "reduce3d",
            &["reduce3d", "--directions", "9", "--seed", "5"],
            "reduced_field.csv",
        ),
        (
            "exterior",
            &[
                "exterior",
                "--N",
                "4",
                "--lambda-sweep",
                "1e-3:1e-4",
                "--sweep-points",
                "2",
            ],
            "solution_001.csv",
        ),
    ];
    for (cmd, args, file) in cases {
        assert!(gelfand(a.path(), args).status.success(), "{cmd}");
        assert!(gelfand(b.path(), args).status.success(), "{cmd}");
        let ta = fs::read_to_string(a.path().join(cmd).join(file)).unwrap();
        let tb = fs::read_to_string(b.path().join(cmd).join(file)).unwrap();
        assert!(ta.starts_with("# seed="), "{cmd}");
        assert_eq!(csv_body(&ta), csv_body(&tb), "{cmd}");
        let s = json(&a.path().join(cmd).join("summary.json"));
        assert_eq!(s["config"]["command"], cmd);
    }
}

#[test]
fn exterior_sweep_reports_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(
        dir.path(),
        &[
            "exterior",
            "--N",
            "4",
            "--alpha",
            "1",
            "--lambda-sweep",
            "1e-2:1e-5",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("exterior/summary.json"));
    let sols = s["result"]["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 4);
    assert_eq!(sols[0]["lambda"], 1e-2);
    assert_eq!(sols[3]["lambda"], 1e-5);
    for (k, sol) in sols.iter().enumerate() {
        assert_eq!(sol["csv"], format!("solution_{k:03}.csv"));
        assert!(sol["newton_gap"].as_f64().unwrap() < 1e-6);
    }
    assert!(s["result"]["slopes"]["phi_norm"].is_f64());
    assert_eq!(s["result"]["slopes"]["predicted"], 0.9);
}
