//! `ris`: run configured rate-independent experiments and write reproducible artifacts.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use commands::RunContext;
use config::ConfigError;
use output::Artifacts;

#[derive(Parser)]
#[command(name = "ris", version, about = "Viscous, incremental and parametrized solutions of rate-independent systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// output directory (overrides `output.dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// worker threads for sweeps; 0 uses all cores
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// override a tolerance, e.g. `jump=1e-4`; repeatable
    #[arg(long = "tol-override", global = true, value_name = "KEY=VAL")]
    tol_override: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    BvToParam,
    ParamToBv,
}

#[derive(Subcommand)]
enum Command {
    /// tabulate the contact potential, its multiplier set and contact class over a grid
    Contact,
    /// integrate the viscous or incremental scheme on the configured time grid
    Solve,
    /// vanishing-viscosity sweep with limit extraction and jump table
    Sweep,
    /// optimal transition between two states at frozen time
    Jump,
    /// classify a curve and check its jump conditions
    Verify {
        /// curve CSV with columns t, u_1, …
        #[arg(long)]
        curve: PathBuf,
    },
    /// convert between BV and arclength-parametrized curves
    Param {
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long)]
        curve: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Contact => "contact",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Jump => "jump",
            Command::Verify { .. } => "verify",
            Command::Param { direction: Direction::BvToParam, .. } => "param bv-to-param",
            Command::Param { direction: Direction::ParamToBv, .. } => "param param-to-bv",
        }
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let path = cli.config.ok_or_else(|| ConfigError::new("--config", "a configuration file is required"))?;
    let text = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = config::parse(std::str::from_utf8(&text).map_err(|e| ConfigError::new("<root>", e))?)?;
    let mut tol = cfg.tolerances.clone();
    for kv in &cli.tol_override {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::new("--tol-override", format!("`{kv}` is not KEY=VAL")))?;
        tol.set(k.trim(), v.trim())?;
    }
    tol.validate()?;

    let dir = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let mut out = Artifacts::new(dir, cli.command.name());
    out.input(&path, &text);
    let ctx = RunContext { cfg: &cfg, tol, threads: cli.threads };
    match &cli.command {
        Command::Contact => commands::contact(&ctx, &mut out)?,
        Command::Solve => commands::solve(&ctx, &mut out)?,
        Command::Sweep => commands::sweep(&ctx, &mut out)?,
        Command::Jump => commands::jump(&ctx, &mut out)?,
        Command::Verify { curve } | Command::Param { curve, .. } => {
            let bytes = std::fs::read(curve).with_context(|| format!("reading {}", curve.display()))?;
            out.input(curve, &bytes);
            let text = String::from_utf8(bytes).context("curve file is not UTF-8")?;
            match &cli.command {
                Command::Verify { .. } => commands::verify(&ctx, &text, &mut out)?,
                Command::Param { direction: Direction::BvToParam, .. } => commands::bv_to_param_cmd(&ctx, &text, &mut out)?,
                _ => commands::param_to_bv_cmd(&ctx, &text, &mut out)?,
            }
        }
    }
    out.write()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else if e.downcast_ref::<ris_core::Error>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
