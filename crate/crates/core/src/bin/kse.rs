use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kse::config::RunConfig;
use kse::diagnostics::shell_spectrum;
use kse::fixture::{record_fixture, replay_fixture};
use kse::harness::{run, run_many, RunSummary};
use kse::{snapshot, KseError, Result};

/// Kuramoto-Sivashinsky simulations on the periodic square.
#[derive(Parser)]
#[command(name = "kse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more configs. Output roots under $KSE_OUT_DIR if set.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Independent configs to run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Re-run a fixture and compare with its reference.
    Replay { fixture: PathBuf },
    /// Print `kappa E` shells for one state (one KSEF file per component).
    Spectrum {
        #[arg(required = true)]
        snapshots: Vec<PathBuf>,
    },
    /// Run a vector-KSE config alongside the scalar equation for its potential.
    Cosim { config: PathBuf },
    /// Run a config and store it as a golden fixture.
    RecordFixture { config: PathBuf, dir: PathBuf },
}

fn report(summary: &RunSummary) {
    let last = summary.records.last();
    println!(
        "{}: {} samples, {} steps, t = {}, {:.2}s",
        summary.output_dir.display(),
        summary.records.len(),
        summary.steps.len(),
        last.map(|r| r.t).unwrap_or(0.0),
        summary.wall_time
    );
    if !summary.resolution_ok() {
        eprintln!(
            "warning: spectrum tail not at machine precision at {} samples",
            summary.under_resolved.len()
        );
    }
    if let Some(mp) = &summary.max_principle {
        println!(
            "max principle: {} (excess {:e})",
            if mp.verdict.passed() { "PASS" } else { "FAIL" },
            mp.max_excess
        );
    }
    if let Some(&(t, e)) = summary.cosim_series().last() {
        println!("cosim error at t = {t}: {e:e}");
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { configs, jobs } => {
            let cfgs = configs
                .iter()
                .map(|p| RunConfig::load(p))
                .collect::<Result<Vec<_>>>()?;
            let mut first_err = None;
            for (path, res) in configs.iter().zip(run_many(&cfgs, jobs)?) {
                match res {
                    Ok(s) => report(&s),
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        first_err.get_or_insert(e);
                    }
                }
            }
            first_err.map_or(Ok(()), Err)
        }
        Command::Replay { fixture } => {
            let r = replay_fixture(&fixture)?;
            println!("{r}");
            if r.passed() {
                Ok(())
            } else {
                Err(KseError::FixtureMismatch(r.to_string()))
            }
        }
        Command::Spectrum { snapshots } => {
            let fields = snapshots
                .iter()
                .map(|p| snapshot::read(p)?.into_field())
                .collect::<Result<Vec<_>>>()?;
            for f in &fields[1..] {
                if !f.grid().same_discretization(fields[0].grid()) {
                    return Err(KseError::config("snapshots come from different grids"));
                }
            }
            let refs: Vec<_> = fields.iter().collect();
            println!("# kappa E");
            for (k, e) in shell_spectrum(&refs).iter().enumerate() {
                println!("{k} {e:e}");
            }
            Ok(())
        }
        Command::Cosim { config } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.cosim = true;
            cfg.validate()?;
            report(&run(&cfg)?);
            Ok(())
        }
        Command::RecordFixture { config, dir } => {
            let p = record_fixture(&config, &dir)?;
            println!("{}", p.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
