//! purcell-filters: synthesis and simulation of multi-stage bandpass
//! Purcell filters from a JSON design config.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 computation error.

mod config;
mod error;
mod output;
mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{DesignConfig, ModelChoice};
use error::CliError;
use output::Format;
use run::Source;

#[derive(Parser)]
#[command(name = "purcell-filters", version, about = "Bandpass Purcell filter design toolkit")]
struct Cli {
    /// JSON design config (see README for the schema)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for exported data files
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Export format for data files
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// S-parameter source (sparams command only)
    #[arg(long, global = true, value_enum)]
    source: Option<Source>,

    /// Dissipation model override (t1 and scaling commands only)
    #[arg(long, global = true, value_enum)]
    model: Option<ModelChoice>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Low-pass prototype: g values, adjacent products, coupling rates
    Synth,
    /// Two-port S parameters of the filter
    Sparams,
    /// Per-stage local density of states across the band
    Ldos,
    /// Time-domain decay of an excited readout resonator
    Decay,
    /// Qubit lifetime vs detuning through the full chain
    T1,
    /// Power-law scaling fits over orders and insertion losses
    Scaling,
    /// Distributed transmission-line realization
    Tline,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli) {
        eprintln!("{e}");
        std::process::exit(e.code());
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if cli.source.is_some() && cli.command != Command::Sparams {
        return Err(CliError::Config("--source applies only to the sparams command".into()));
    }
    if cli.model.is_some() && !matches!(cli.command, Command::T1 | Command::Scaling) {
        return Err(CliError::Config(
            "--model applies only to the t1 and scaling commands".into(),
        ));
    }
    if cli.format == Format::Touchstone && cli.command != Command::Sparams {
        return Err(CliError::Config(
            "touchstone output applies only to the sparams command".into(),
        ));
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <PATH> is required".into()))?;
    let cfg = DesignConfig::load(path)?;

    match cli.command {
        Command::Synth => run::cmd_synth(&cfg, &cli.out, cli.format),
        Command::Sparams => run::cmd_sparams(
            &cfg,
            &cli.out,
            cli.format,
            cli.source.unwrap_or(Source::CoupledMode),
        ),
        Command::Ldos => run::cmd_ldos(&cfg, &cli.out, cli.format),
        Command::Decay => run::cmd_decay(&cfg, &cli.out, cli.format),
        Command::T1 => run::cmd_t1(&cfg, &cli.out, cli.format, cli.model),
        Command::Scaling => run::cmd_scaling(&cfg, &cli.out, cli.format, cli.model),
        Command::Tline => run::cmd_tline(&cfg, &cli.out, cli.format),
    }
}
