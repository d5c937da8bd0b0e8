use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use magstar::run::{self, CommandError, Overrides};

#[derive(Parser)]
#[command(name = "magstar", version, about = "Rotating magnetized polytropes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Threads used for per-point post-processing.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Spherical background star.
    Radial,
    /// One equilibrium.
    Solve {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        omega2: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        eps: f64,
    },
    /// Continuation over the configured grid.
    Sweep,
    /// Acceptance suite.
    Verify,
}

fn setup(common: &Common) -> Result<(magstar::config::RunConfig, Overrides), CommandError> {
    let overrides = Overrides {
        out: common.out.clone(),
        seed: common.seed,
        workers: common.workers,
    };
    let cfg = overrides.apply(run::load_config(common.config.as_deref())?)?;
    Ok((cfg, overrides))
}

fn execute(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Radial => {
            let (cfg, _) = setup(&cli.common)?;
            let s = run::cmd_radial(&cfg)?;
            println!("xi1 = {:.12} M0 = {:.12} kappa = {:.12}", s.xi1, s.total_mass, s.kappa);
            println!("wrote {}", cfg.output_dir.join("profile.csv").display());
        }
        Command::Solve { omega2, eps } => {
            let (cfg, _) = setup(&cli.common)?;
            let s = run::cmd_solve(&cfg, omega2, eps)?;
            println!(
                "converged in {} iterations, residual {:.3e}",
                s.outcome.iterations, s.outcome.residual
            );
            for c in &s.report.checks {
                let tag = if c.pass { "ok" } else { "FAIL" };
                println!("  {:<24} {:>12.4e}  [{tag}]", c.name, c.value);
            }
            println!("oblateness {:.6e}", s.report.oblateness);
        }
        Command::Sweep => {
            let (cfg, o) = setup(&cli.common)?;
            let rows = run::cmd_sweep(&cfg, o.workers())?;
            println!("{:>10} {:>10} {:>5} {:>14} {:>14}", "omega2", "eps", "ok", "oblateness", "mass");
            for r in &rows {
                println!(
                    "{:>10.4} {:>10.4} {:>5} {:>14.6e} {:>14.10}",
                    r.omega2, r.epsilon, r.converged, r.oblateness, r.mass
                );
            }
        }
        Command::Verify => {
            let (cfg, _) = setup(&cli.common)?;
            let (report, err) = match run::cmd_verify(&cfg) {
                Ok(r) => (r, None),
                Err((r, e)) => (r, Some(e)),
            };
            for c in &report.criteria {
                println!("{}", c.line());
            }
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("magstar: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
