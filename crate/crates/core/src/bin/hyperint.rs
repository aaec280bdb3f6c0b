use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hyperint::config::RunConfig;
use hyperint::report::{write_report_csv, write_trajectory_csv, Report};
use hyperint::runner::{run_flow, run_interp, run_neumann, run_periods, run_verify, RunOptions};
use hyperint::Error;

#[derive(Parser)]
#[command(name = "hyperint", version, about = "Hyperelliptic integrable systems: construction and numerical checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write plot data (trajectory for `flow` and `neumann`, one row per
    /// check otherwise).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Seed overriding the config's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies every pass threshold.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity checks on the configured instances.
    Verify { config: PathBuf },
    /// Integrate the flow of one Hamiltonian.
    Flow { config: PathBuf },
    /// Elementary periods of the cut curve.
    Periods { config: PathBuf },
    /// The Neumann cross-validation suite.
    Neumann { config: PathBuf },
    /// Recover the Hamiltonians from points by interpolation.
    Interp { config: PathBuf },
}

fn run(cli: &Cli) -> Result<Report, Error> {
    let c = &cli.common;
    if !(c.tol_scale > 0.0) {
        return Err(Error::Config {
            field: "--tol-scale".into(),
            message: "must be positive".into(),
        });
    }
    let opts = RunOptions {
        workers: c.workers,
        tol_scale: c.tol_scale,
    };
    let path = match &cli.command {
        Command::Verify { config }
        | Command::Flow { config }
        | Command::Periods { config }
        | Command::Neumann { config }
        | Command::Interp { config } => config,
    };
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = c.seed {
        cfg.seed = Some(seed);
    }
    let report = match &cli.command {
        Command::Verify { .. } => run_verify(&cfg, &opts)?,
        Command::Periods { .. } => run_periods(&cfg, &opts)?,
        Command::Interp { .. } => run_interp(&cfg, &opts)?,
        Command::Flow { .. } => {
            let (report, traj) = run_flow(&cfg, &opts)?;
            if let (Some(csv), Some(t)) = (&c.csv, &traj) {
                write_trajectory_csv(&t.times, &t.u_series, &t.psi_series, csv)?;
            }
            report
        }
        Command::Neumann { .. } => {
            let (report, series) = run_neumann(&cfg, &opts)?;
            if let Some(csv) = &c.csv {
                write_trajectory_csv(&series.times, &series.u, &series.psi, csv)?;
            }
            report
        }
    };
    if let Some(csv) = &c.csv {
        if matches!(cli.command, Command::Verify { .. } | Command::Periods { .. } | Command::Interp { .. }) {
            write_report_csv(&report, csv)?;
        }
    }
    match &c.out {
        Some(out) => report.write(out)?,
        None => println!("{}", report.to_json()),
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            for r in &report.records {
                let residual = r.residual.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
                let tag = if r.pass { "PASS" } else { "FAIL" };
                eprint!("{tag} {:<24} residual {residual:<10} threshold {:.1e}", r.name, r.threshold);
                match &r.error {
                    Some(e) => eprintln!("  ({})", e.message),
                    None => eprintln!(),
                }
            }
            for s in &report.skipped {
                eprintln!("SKIP {:<24} {}", s.name, s.reason);
            }
            eprintln!(
                "{} passed, {} failed",
                report.summary.pass_count, report.summary.fail_count
            );
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) if e.is_numerical() => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
