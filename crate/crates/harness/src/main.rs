use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use coopbeam::experiments::{run_alpha_sweep, run_corr_sweep, run_single_point, run_snr_sweep};
use coopbeam::output::write_report;
use coopbeam::{Experiment, ExperimentConfig, Report, Settings, Threaded};

/// Outage simulator for two-phase cooperative random beamforming.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Outage against the power split alpha at each SNR.
    AlphaSweep,
    /// Outage against SNR for several splits and the MIMO baseline.
    SnrSweep,
    /// Outage against receive correlation.
    CorrSweep,
    /// One (alpha, SNR) operating point.
    Point,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let experiment = match cli.command {
        Command::AlphaSweep => Experiment::AlphaSweep,
        Command::SnrSweep => Experiment::SnrSweep,
        Command::CorrSweep => Experiment::CorrSweep,
        Command::Point => Experiment::SinglePoint,
    };
    let file = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let cfg = ExperimentConfig::resolve(experiment, cli.settings.or(file))?;
    let exec = Threaded::new(cfg.workers);
    let start = Instant::now();

    let mut code = ExitCode::SUCCESS;
    let report = match experiment {
        Experiment::AlphaSweep => run_alpha_sweep(&cfg, &exec)?.report,
        Experiment::SnrSweep => run_snr_sweep(&cfg, &exec)?.report,
        Experiment::CorrSweep => run_corr_sweep(&cfg, &exec)?.report,
        Experiment::SinglePoint => {
            let sp = run_single_point(&cfg, &exec)?;
            if cfg.trials == 1 {
                eprintln!("warning: a single trial gives an outage estimate of 0 or 1 with no error bar");
            }
            eprint!("{}", sp.describe());
            if !sp.point.is_feasible() {
                eprintln!("error: the operating point is infeasible");
                code = ExitCode::from(2);
            }
            sp.report
        }
    };
    emit(&report, &cfg, start.elapsed().as_secs_f64())?;
    Ok(code)
}

fn emit(report: &Report, cfg: &ExperimentConfig, wall_clock_s: f64) -> anyhow::Result<()> {
    match &cfg.output_path {
        Some(path) => {
            write_report(report, path, wall_clock_s, cfg.workers)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {} rows to {}", report.manifest.rows, path.display());
        }
        None => std::io::stdout().write_all(report.to_csv()?.as_bytes())?,
    }
    Ok(())
}
