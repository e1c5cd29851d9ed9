//! `mflqr` — batch experiment runner for the mean-field stochastic LQR
//! solvers.
//!
//! ```text
//! mflqr <run|compare|check> --config <path> [--out <dir>] [--seed <u64>] [--quiet]
//! ```
//!
//! Exit codes: 0 success, 1 parse error, 2 invariant violation,
//! 3 gains not stabilizing, 4 solver failure, 5 divergence,
//! 6 iteration limit.

use mflqr_cli::{config, drivers};
use std::path::PathBuf;
use std::process::ExitCode;

struct Args {
    command: String,
    config: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    quiet: bool,
}

const USAGE: &str = "\
mflqr - mean-field stochastic LQR experiments

USAGE:
  mflqr <run|compare|check> --config <path> [--out <dir>] [--seed <u64>] [--quiet]

COMMANDS:
  run       run the algorithm selected in the config (pi | pd | pdmf | compare)
  compare   identification baseline vs. the partially model-free learner
  check     report weight, stabilizability, and ensemble conditions

OPTIONS:
  --config <path>   experiment configuration (JSON)
  --out <dir>       output directory (default: config output_dir or ./mflqr_out)
  --seed <u64>      override the config seed
  --quiet           suppress progress output

ENVIRONMENT:
  MFLQR_THREADS     cap on simulator worker threads; rollouts are advanced
                    in a fixed order, so results do not depend on it
";

fn parse_args() -> Result<Args, String> {
    let mut argv = std::env::args().skip(1);
    let command = argv.next().ok_or_else(|| USAGE.to_string())?;
    if !matches!(command.as_str(), "run" | "compare" | "check") {
        return Err(format!("unknown command '{command}'\n\n{USAGE}"));
    }
    let mut config = None;
    let mut out = None;
    let mut seed = None;
    let mut quiet = false;
    while let Some(arg) = argv.next() {
        match arg.as_str() {
            "--config" => {
                let v = argv.next().ok_or("--config needs a path")?;
                config = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = argv.next().ok_or("--out needs a directory")?;
                out = Some(PathBuf::from(v));
            }
            "--seed" => {
                let v = argv.next().ok_or("--seed needs a value")?;
                seed = Some(v.parse::<u64>().map_err(|e| format!("--seed: {e}"))?);
            }
            "--quiet" => quiet = true,
            other => return Err(format!("unknown option '{other}'\n\n{USAGE}")),
        }
    }
    Ok(Args {
        command,
        config: config.ok_or("missing --config <path>")?,
        out,
        seed,
        quiet,
    })
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(1);
        }
    };

    if let Ok(threads) = std::env::var("MFLQR_THREADS") {
        match threads.parse::<usize>() {
            Ok(t) if t >= 1 => {}
            _ => {
                eprintln!("MFLQR_THREADS must be a positive integer, got '{threads}'");
                return ExitCode::from(1);
            }
        }
    }

    let mut exp = match config::parse_config(&args.config) {
        Ok(e) => e,
        Err(err) => {
            eprintln!("{err}");
            let code = match err {
                config::ConfigError::Parse(_) | config::ConfigError::Schema(_) => 1,
                config::ConfigError::Invariant(_) => 2,
            };
            return ExitCode::from(code);
        }
    };
    if let Some(seed) = args.seed {
        exp.config.run.seed = seed;
        // re-derive seeded ensemble inputs when they were not explicit
        if exp.config.ensemble.input_means.is_none() {
            if let Ok(e2) = config::parse_config_str(
                &serde_json::to_string(&exp.config).expect("config serializes"),
            ) {
                exp = e2;
            }
        }
    }

    let out_dir = args
        .out
        .or_else(|| exp.config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mflqr_out"));

    let outcome = match args.command.as_str() {
        "run" => drivers::cmd_run(&exp, &out_dir),
        "compare" => drivers::cmd_compare(&exp, &out_dir),
        "check" => drivers::cmd_check(&exp, &out_dir),
        _ => unreachable!(),
    };

    match outcome {
        Ok(result) => {
            if !args.quiet {
                for line in &result.messages {
                    println!("{line}");
                }
                println!("outputs written to {}", out_dir.display());
            }
            ExitCode::from(result.exit as u8)
        }
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
