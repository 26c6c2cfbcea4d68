use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thinfilm_cli::run::write_diagnostic;
use thinfilm_cli::{parse_config, run, Experiment, RunConfig, RunOptions};

const DEFAULT_OUT: &str = "thinfilm-out";

#[derive(Parser)]
#[command(
    name = "thinfilm",
    version,
    about = "Electrified thin-film solver and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve initial data and check energy and smoothing bounds.
    Simulate(Args),
    /// Kernel certificate, weighted sup bounds and kernel differences.
    KernelCheck(Args),
    /// Norm-inflation slope of the second derivative of the flow map.
    Illposed(Args),
    /// Parameter-asymptotics rate sweep.
    Sweep(Args),
    /// Picard fixed point against the time stepper.
    PicardValidate(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized fields (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the trajectory as binary field containers.
    #[arg(long)]
    emit_fields: bool,
    /// Dot-path assignment applied before validation, e.g. `grid.n=128`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::KernelCheck(a) => (Experiment::KernelCheck, a),
        Command::Illposed(a) => (Experiment::Illposed, a),
        Command::Sweep(a) => (Experiment::Sweep, a),
        Command::PicardValidate(a) => (Experiment::PicardValidate, a),
    };
    ExitCode::from(execute(kind, args))
}

fn execute(kind: Experiment, args: Args) -> u8 {
    let fallback_out = args.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let cfg = match load(kind, &args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 1;
        }
    };
    let out = cfg.output_dir.clone().unwrap_or(fallback_out);
    match run(
        &cfg,
        &out,
        &RunOptions {
            emit_fields: args.emit_fields,
        },
    ) {
        Ok(outcome) => {
            println!(
                "{}: {} ({} artifacts in {})",
                outcome.experiment,
                if outcome.pass { "PASS" } else { "FAIL" },
                outcome.artifacts.len(),
                out.display()
            );
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            write_diagnostic(&out, Some(&cfg), &e);
            1
        }
    }
}

fn load(kind: Experiment, args: &Args) -> Result<RunConfig, String> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?,
        None => String::new(),
    };
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    let mut cfg = parse_config(&text, &overrides, kind).map_err(|e| e.to_string())?;
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}
