// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
mod commands;
mod config;

use std::process::ExitCode;
use std::time::SystemTime;

use clap::Parser;
use gelfand_core::io::{write_json, CsvMeta};
use serde_json::json;

use commands::{error_kind, exit_code, summary_path, Context};
use config::{Cli, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not failures
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (kind, opts) = cli.command.split();
    let cfg = match RunConfig::resolve(kind, &opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let timestamp = humantime::format_rfc3339_seconds(SystemTime::now()).to_string();
    let ctx = Context {
        config: &cfg,
        dir: cfg.out_dir(),
        meta: CsvMeta {
            seed: cfg.seed,
            timestamp: timestamp.clone(),
        },
    };
    match commands::run(&ctx) {
        Ok(result) => {
            let doc = json!({ "config": cfg, "seed": cfg.seed, "timestamp": timestamp, "status": "ok", "result": result });
            let path = summary_path(&ctx.dir, true);
            if let Err(e) = write_json(&path, &doc) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            let doc = json!({
                "config": cfg,
                "seed": cfg.seed,
                "timestamp": timestamp,
                "status": "error",
                "error": { "kind": error_kind(&e), "message": e.to_string(), "exit_code": code },
            });
            let _ = std::fs::create_dir_all(&ctx.dir);
            let _ = write_json(&summary_path(&ctx.dir, false), &doc);
            ExitCode::from(code as u8)
        }
    }
}
