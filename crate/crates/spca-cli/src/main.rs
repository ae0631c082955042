use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spca_cli::{Algorithm, CliError, RunConfig, Units};

#[derive(Parser)]
#[command(name = "spca", version, about = "Energy-efficiency experiments for MIMO interference channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every seed of a configuration.
    Run {
        /// gee, see, gee-qos, see-qos or slbm; overrides the config.
        #[arg(long)]
        algorithm: Option<String>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        units: Option<String>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Outer stationarity tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Record wall times (outputs are then no longer reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Run two configurations on the same seeds and pair the results.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        timing: bool,
    },
}

fn load(path: &PathBuf, timing: bool) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    cfg.timing |= timing;
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run { algorithm, config, seed, seeds, out, units, max_iters, tol, timing } => {
            let mut cfg = load(&config, timing)?;
            if let Some(a) = algorithm {
                cfg.algorithm = Some(Algorithm::parse(&a)?);
            }
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if let Some(u) = units {
                cfg.units = Units::parse(&u)?;
            }
            if max_iters.is_some() {
                cfg.solver.max_outer = max_iters;
            }
            if tol.is_some() {
                cfg.solver.eps_outer = tol;
            }
            let (summary, _) = spca_cli::run(&cfg, &out)?;
            for s in &summary.seeds {
                match (&s.objective, &s.error) {
                    (Some(v), _) => println!("seed {}: objective {v:.6} after {} iterations", s.seed, s.iterations.unwrap_or(0)),
                    (None, Some(e)) => eprintln!("seed {}: failed: {e}", s.seed),
                    _ => {}
                }
            }
            Ok(summary.all_completed())
        }
        Command::Compare { a, b, out, timing } => {
            let (cmp, sa, sb) = spca_cli::compare(&load(&a, timing)?, &load(&b, timing)?, &out)?;
            for r in &cmp.rows {
                println!("seed {}: {} {:?} vs {} {:?}", r.seed, cmp.algorithm_a, r.objective_a, cmp.algorithm_b, r.objective_b);
            }
            Ok(sa.all_completed() && sb.all_completed())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
