//! `nearfield run --config <path> [--out <dir>] [--seed <u64>] [--preset <name>]`

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use nearfield::experiment::{resolve, run_experiment, PRESETS};
use nearfield::Error;

#[derive(Parser)]
#[command(name = "nearfield", version, about = "Near-field inverse scattering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration; with `--preset` the config file only overrides the preset.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        preset: Option<String>,
    },
    /// List the built-in presets.
    Presets,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config_error() {
        2
    } else {
        3
    }
}

fn run(config: Option<PathBuf>, out: Option<PathBuf>, seed: Option<u64>, preset: Option<String>) -> Result<(), Error> {
    let overrides: Option<Value> = match &config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let v = serde_json::from_str(&text).map_err(|e| Error::Json {
                context: format!("{} is not valid JSON", path.display()),
                source: e,
            })?;
            Some(v)
        }
        None => None,
    };
    let runs = resolve(preset.as_deref(), overrides.as_ref(), seed)?;
    for (name, cfg) in runs {
        let base = out
            .clone()
            .or_else(|| cfg.output.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let dir = if name.is_empty() { base } else { base.join(&name) };
        log::info!("running {:?} into {}", cfg.mode, dir.display());
        let report = run_experiment(&cfg, &dir)?;
        println!(
            "{}",
            json!({"dir": dir, "mode": report.mode, "outputs": report.outputs})
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            preset,
        } => run(config, out, seed, preset),
        Command::Presets => {
            PRESETS.iter().for_each(|p| println!("{p}"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!(
                "{}",
                json!({"error": {"kind": e.kind(), "message": e.to_string(), "exit_code": code}})
            );
            ExitCode::from(code)
        }
    }
}
