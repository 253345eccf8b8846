use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use anisoheat::harness::{run_convergence, run_single, RunConfig};
use anisoheat::{Error, Result};

/// Worker threads for the parallel node loops; unset means all cores.
const THREADS_VAR: &str = "ANISOHEAT_THREADS";

#[derive(Parser)]
#[command(
    name = "anisoheat",
    version,
    about = "Anisotropic heat transport along magnetic field lines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One manufactured-solution run on `mesh`.
    Run(Args),
    /// Mesh convergence study over `meshes`.
    Study(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Flat `key = value` file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides as `--key value` pairs.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--key value")]
    overrides: Vec<String>,
}

fn load(args: &Args) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(&args.config)?;
    cfg.apply_overrides(&args.overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))
}

fn execute(cli: &Cli) -> Result<()> {
    init_threads()?;
    match &cli.command {
        Command::Run(args) => {
            let cfg = load(args)?;
            let s = run_single(&cfg)?;
            println!(
                "mesh {} steps {} error {:.6e} sqrt_error {:.6e} gmres_mean {:.1} walltime_s {:.2}",
                s.mesh, s.steps, s.error.squared, s.error.norm, s.gmres_mean, s.walltime_s
            );
            Ok(())
        }
        Command::Study(args) => {
            let cfg = load(args)?;
            let out = run_convergence(&cfg)?;
            println!("mesh,error,sqrt_error,order");
            for r in &out.rows {
                let order = r.order.map_or(String::new(), |o| format!("{o:.3}"));
                println!("{},{:.6e},{:.6e},{}", r.mesh, r.error.squared, r.error.norm, order);
            }
            match out.failures.into_iter().next() {
                Some((n, e)) => {
                    eprintln!("mesh {n} failed");
                    Err(e)
                }
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
