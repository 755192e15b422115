use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsfg_harness::check::Suite;
use nsfg_harness::sweep::parse_values;
use nsfg_harness::{report, run_to_dir, sweep, Axis, RunConfig};

/// Spectral Faedo-Galerkin runs, sweeps and property checks.
#[derive(Parser)]
#[command(name = "nsfg", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one configuration.
    Run {
        config: PathBuf,
        /// Output directory (overrides `run.output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one configuration per value of a parameter.
    Sweep {
        config: PathBuf,
        /// eps, kappa_q, r0, r1, N, dt, n_cutoff, K_cutoff or m_cutoff.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite: jungel, cutoffs, mass-op, thermal-odes, energy-balance.
    Check { suite: String },
    /// Summarize a run or sweep directory.
    Report { dir: PathBuf },
}

const USAGE: u8 = 2;

fn out_dir(explicit: Option<PathBuf>, cfg: &RunConfig, fallback: &str) -> PathBuf {
    explicit.or_else(|| cfg.run.output.clone()).unwrap_or_else(|| PathBuf::from(fallback))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { config, out } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(USAGE);
                }
            };
            let dir = out_dir(out, &cfg, "nsfg-run");
            match run_to_dir(&cfg, &dir) {
                Ok(art) => match &art.outcome.failure {
                    None => {
                        println!("completed: {} records in {}", art.outcome.rows.len(), dir.display());
                        ExitCode::SUCCESS
                    }
                    Some(f) => {
                        eprintln!("run failed ({:?}) at step {} (t = {}): {}", f.reason, f.step, f.t, f.message);
                        eprintln!("state dumped to {}", dir.join("failure.snap").display());
                        ExitCode::FAILURE
                    }
                },
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Cmd::Sweep { config, axis, values, out } => {
            let parsed = (|| -> Result<_, String> {
                let cfg = RunConfig::load(&config).map_err(|e| e.to_string())?;
                let axis: Axis = axis.parse().map_err(|e: nsfg_harness::sweep::SweepError| e.to_string())?;
                Ok((cfg, axis, parse_values(&values)?))
            })();
            let (cfg, axis, values) = match parsed {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(USAGE);
                }
            };
            let dir = out_dir(out, &cfg, "nsfg-sweep");
            match sweep(&cfg, axis, &values, &dir) {
                Ok(s) => {
                    for f in &s.fits {
                        println!("{}\tslope {:.4}\t({} points)", f.metric, f.slope, f.points);
                    }
                    if s.failures() > 0 {
                        eprintln!(
                            "{} of {} runs failed; see {}",
                            s.failures(),
                            s.rows.len(),
                            dir.join("summary.csv").display()
                        );
                        ExitCode::FAILURE
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(
                    e @ (nsfg_harness::sweep::SweepError::EmptyValues
                    | nsfg_harness::sweep::SweepError::BadValue { .. }
                    | nsfg_harness::sweep::SweepError::Invalid { .. }),
                ) => {
                    eprintln!("error: {e}");
                    ExitCode::from(USAGE)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Cmd::Check { suite } => {
            let suite: Suite = match suite.parse() {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(USAGE);
                }
            };
            println!("property\tsamples\tworst_margin\tresult");
            let props = suite.run();
            for p in &props {
                println!("{p}");
            }
            if props.iter().all(|p| p.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Cmd::Report { dir } => match report::report(&dir) {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
