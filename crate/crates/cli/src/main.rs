use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use lattice_flow_cli::config::{read_json, GrowthSweepConfig, KernelSweepConfig, RunConfig};
use lattice_flow_cli::{artifacts, plot, simulate, sweeps, CliError, EXIT_CHECK_FAILED, EXIT_PASS};

#[derive(Parser)]
#[command(name = "lattice-flow", version, about = "Lattice NLS/KG simulations and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON configuration.
    #[arg(long)]
    config: PathBuf,
    /// Artifact directory (overrides output.dir in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed of random initial data or of the sweep.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and check its bounds.
    Simulate(Common),
    /// Linear l^p growth sweep over (flow, d, h, p, t).
    GrowthSweep(Common),
    /// Multiplier kernel l1 norms across mesh sizes.
    KernelSweep(Common),
    /// Focusing Klein-Gordon blow-up campaign with the defocusing control.
    Blowup(Common),
    /// Render SVG figures from an artifact directory.
    Plot {
        /// Directory holding run or sweep artifacts.
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: &Option<PathBuf>, configured: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    flag.clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output.dir".into()))
}

fn verdict(passed: bool) -> i32 {
    if passed {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}

fn run(command: Command) -> Result<i32, CliError> {
    let started = Instant::now();
    let (dir, code) = match command {
        Command::Simulate(c) => {
            let cfg = RunConfig::load(&c.config)?;
            let dir = out_dir(&c.out, &cfg.output.dir)?;
            let outcome = simulate::simulate(&cfg, c.seed, c.config.parent())?;
            simulate::write_outcome(&dir, "simulate", &cfg, &outcome)?;
            (dir, verdict(outcome.passed()))
        }
        Command::Blowup(c) => {
            let cfg = RunConfig::load(&c.config)?;
            let dir = out_dir(&c.out, &cfg.output.dir)?;
            let outcome = simulate::blowup(&cfg, c.seed, c.config.parent())?;
            simulate::write_outcome(&dir, "blowup", &cfg, &outcome)?;
            (dir, verdict(outcome.passed()))
        }
        Command::GrowthSweep(c) => {
            let cfg: GrowthSweepConfig = read_json(&c.config)?;
            let dir = out_dir(&c.out, &cfg.output.dir)?;
            let outcome = sweeps::growth_sweep(&cfg, c.seed, c.jobs)?;
            sweeps::write_growth(&dir, &cfg, c.seed, &outcome)?;
            (dir, verdict(outcome.passed()))
        }
        Command::KernelSweep(c) => {
            let cfg: KernelSweepConfig = read_json(&c.config)?;
            let dir = out_dir(&c.out, &cfg.output.dir)?;
            let outcome = sweeps::kernel_sweep(&cfg, c.jobs)?;
            sweeps::write_kernel(&dir, &cfg, &outcome)?;
            (dir, verdict(outcome.passed()))
        }
        Command::Plot { input, out } => {
            let dir = out.unwrap_or_else(|| input.clone());
            for path in plot::emit_plots(&input, &dir)? {
                println!("{}", path.display());
            }
            return Ok(EXIT_PASS);
        }
    };
    artifacts::write_timing(Path::new(&dir), started.elapsed())?;
    println!("{}: {}", dir.display(), if code == EXIT_PASS { "all checks passed" } else { "checks failed" });
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
