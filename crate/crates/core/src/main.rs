use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vesicle2d::driver::{check_snapshot, converge, convergence_csv, Checkpoint, Driver, RunConfig, RunStatus};
use vesicle2d::Error;

#[derive(Parser)]
#[command(version, about = "Two-dimensional vesicle suspensions in Stokes flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized placements.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the right-hand side, solution and residual history of every step.
    #[arg(long, global = true)]
    dump_linear_system: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration to its horizon.
    Run {
        config: PathBuf,
        /// Continue from a checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Refine N and Δt together and tabulate the errors.
    Converge {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Collision check of a snapshot CSV.
    Check {
        snapshot: PathBuf,
        #[arg(long, default_value_t = vesicle2d::collision::DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
}

fn load(cli: &Cli, path: &PathBuf) -> vesicle2d::Result<RunConfig> {
    let mut cfg = RunConfig::read(path)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }
    cfg.output.dump_linear_system |= cli.dump_linear_system;
    Ok(cfg)
}

fn execute(cli: &Cli) -> vesicle2d::Result<u8> {
    match &cli.command {
        Command::Run { config, resume } => {
            let cfg = load(cli, config)?;
            let mut driver = match resume {
                Some(p) => {
                    let cp: Checkpoint = serde_json::from_str(&std::fs::read_to_string(p)?)?;
                    Driver::resume(cfg, &cp)?
                }
                None => Driver::new(cfg)?,
            };
            let outcome = match driver.run() {
                Ok(o) => o,
                Err(e @ Error::TimeStepUnderflow { .. }) => {
                    eprintln!("error: {e}");
                    return Ok(3);
                }
                Err(e) => return Err(e),
            };
            let (e_a, e_l) = outcome.state.conservation_errors();
            println!(
                "t = {:.6} after {} steps, e_A = {e_a:.3e}, e_L = {e_l:.3e}, {} event(s)",
                outcome.state.time,
                outcome.state.step,
                outcome.events.len()
            );
            Ok(match outcome.status {
                RunStatus::Completed => 0,
                RunStatus::Collided { t, .. } => {
                    eprintln!("stopped at collision, t = {t:.6}");
                    2
                }
                RunStatus::AreaErrorExceeded { t, .. } => {
                    eprintln!("area error limit exceeded at t = {t:.6}");
                    1
                }
            })
        }
        Command::Converge { config, levels } => {
            let cfg = load(cli, config)?;
            let rows = converge(&cfg, *levels, cfg.output.dir.as_deref())?;
            print!("{}", convergence_csv(&rows));
            Ok(0)
        }
        Command::Check { snapshot, tolerance } => {
            let report = check_snapshot(snapshot, *tolerance)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.collided { 2 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
