//! `uncollapse`: parameter sweeps over the measurement strength, written as
//! CSV (and χ matrices as JSON) for plotting.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad config, 3 numeric failure.

mod config;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use uncollapse_core::protocol::SequenceKind;
use uncollapse_core::qpt::{cp_diagnostics, process_fidelity};

use config::{ConfigFile, Mode, Overrides};

#[derive(Parser)]
#[command(name = "uncollapse", version, about = "Partial-measurement uncollapsing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partial-collapse sequence followed by state tomography.
    Collapse(CommonArgs),
    /// Uncollapsing sequence (measure, π, measure) followed by state tomography.
    Uncollapse(CommonArgs),
    /// Process tomography of the uncollapsing sequence.
    Qpt(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Shots per tomography setting (Monte Carlo mode).
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Refocusing pulse angle in units of π.
    #[arg(long)]
    pi_fraction: Option<f64>,
    #[arg(long)]
    no_decoherence: bool,
}

enum Failure {
    Io(anyhow::Error),
    Config(anyhow::Error),
    Numeric(anyhow::Error),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, kind, err) = match self {
            Failure::Io(e) => (1, "i/o error", e),
            Failure::Config(e) => (2, "config error", e),
            Failure::Numeric(e) => (3, "numeric failure", e),
        };
        eprintln!("uncollapse: {kind}: {err:#}");
        ExitCode::from(code)
    }
}

fn load(args: &CommonArgs) -> Result<ConfigFile, Failure> {
    let mut cfg = ConfigFile::load(args.config.as_deref()).map_err(Failure::Config)?;
    cfg.apply(&Overrides {
        mode: args.mode,
        shots: args.shots,
        seed: args.seed,
        pi_fraction: args.pi_fraction,
        no_decoherence: args.no_decoherence,
    });
    cfg.validate().map_err(Failure::Config)?;
    Ok(cfg)
}

fn numeric(e: uncollapse_core::Error) -> Failure {
    Failure::Numeric(e.into())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Collapse(args) => {
            let cfg = load(&args)?;
            let rows = sweep::state_rows(&cfg, SequenceKind::PartialCollapse, false).map_err(numeric)?;
            output::write_csv(&args.out, output::COLLAPSE_HEADER, &rows).map_err(Failure::Io)
        }
        Command::Uncollapse(args) => {
            let cfg = load(&args)?;
            let rows = sweep::state_rows(&cfg, SequenceKind::Uncollapse, true).map_err(numeric)?;
            output::write_csv(&args.out, output::UNCOLLAPSE_HEADER, &rows).map_err(Failure::Io)
        }
        Command::Qpt(args) => {
            let cfg = load(&args)?;
            let rows = sweep::qpt_rows(&cfg).map_err(numeric)?;
            output::write_csv(&args.out, output::QPT_HEADER, &rows).map_err(Failure::Io)?;
            for &p in &cfg.sweep.chi_p {
                let chi = sweep::chi_at(&cfg, p).map_err(numeric)?;
                let file = output::ChiFile::new(
                    p,
                    chi.real_part(),
                    chi.imag_part(),
                    process_fidelity(&chi),
                    cp_diagnostics(&chi).min_eigenvalue,
                );
                let path = output::chi_path(&args.out, p);
                output::write_chi(&path, &file)
                    .with_context(|| format!("χ matrix for p = {p}"))
                    .map_err(Failure::Io)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
