use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lqr_bridge_cli::commands::{self, Span};
use lqr_bridge_cli::CliError;

#[derive(Parser)]
#[command(
    name = "lqr-bridge",
    version,
    about = "Gaussian Schrödinger bridges under pathwise LQR costs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario; writes solution.json, marginals.csv and report.json.
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample trajectories of the solved bridge into paths.csv.
    Sample {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Draw figure.svg from a solve (and optional sample) output directory.
    Plot {
        #[arg(long)]
        out: PathBuf,
        /// Ellipse level in standard deviations.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Compare a one-dimensional scenario against the grid oracle.
    OracleCheck {
        scenario: PathBuf,
        #[arg(long)]
        grid: usize,
        /// `auto` or `lo,hi`.
        #[arg(long, default_value = "auto")]
        span: Span,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn report_run(r: &lqr_bridge_cli::outputs::RunReport) -> u8 {
    if r.converged {
        eprintln!(
            "converged in {} sweeps; endpoint errors: mean {:.3e}, cov {:.3e}",
            r.sweeps_used, r.endpoint_mean_error, r.endpoint_cov_error
        );
        0
    } else {
        eprintln!(
            "error: not converged after {} sweeps (last residual {:.3e}); artifacts written",
            r.sweeps_used,
            r.residual_history.last().copied().unwrap_or(f64::NAN)
        );
        2
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Solve { scenario, out } => Ok(report_run(&commands::cmd_solve(&scenario, &out)?)),
        Command::Sample {
            scenario,
            out,
            paths,
            seed,
        } => Ok(report_run(&commands::cmd_sample(
            &scenario, &out, paths, seed,
        )?)),
        Command::Plot { out, sigma } => {
            let p = commands::cmd_plot(&out, sigma)?;
            eprintln!("wrote {}", p.display());
            Ok(0)
        }
        Command::OracleCheck {
            scenario,
            grid,
            span,
            out,
        } => {
            let r = commands::cmd_oracle_check(&scenario, &out, grid, span)?;
            eprintln!(
                "oracle {}: max mean delta {:.3e}, max std delta {:.3e}, tolerance {:.3e}",
                if r.pass { "pass" } else { "FAIL" },
                r.max_mean_delta,
                r.max_std_delta,
                r.tolerance
            );
            if let Some(f) = &r.failure {
                eprintln!("{f}");
            }
            Ok(if r.pass { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
