use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rbsp_cli::commands::{self, VerifyOptions};
use rbsp_cli::config::RunConfig;
use rbsp_cli::presets::FigurePreset;
use rbsp_cli::CliError;

/// Resource estimates for remote blind state preparation with decoy states.
#[derive(Parser)]
#[command(name = "rbsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set mu=0.6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Resources at one intensity and length.
    Estimate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Emit a JSON record instead of key-value text.
        #[arg(long)]
        json: bool,
        /// Also evaluate the other gain mode.
        #[arg(long)]
        both_modes: bool,
    },
    /// CSV of S/N over the intensity grid.
    SweepMu {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// CSV of the best S/N over fiber lengths.
    SweepDistance {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Check the qubit-merging chain against its output phase rule.
    VerifyI1dc {
        /// Inputs per chain.
        #[arg(short, default_value_t = 8)]
        k: usize,
        /// Random phase tuples to try.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Try every phase tuple instead of random ones.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, hide = true)]
        mutant_rule: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// CSV data of one of the figures (fig1 ... fig6).
    Preset {
        figure: FigurePreset,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn load(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_text(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&args.overrides)?;
    if args.output.is_some() {
        cfg.output.clone_from(&args.output);
    }
    Ok(cfg)
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Estimate { cfg, json, both_modes } => {
            let cfg = load(&cfg)?;
            emit(cfg.output.as_ref(), &commands::estimate(&cfg, both_modes, json)?)?;
        }
        Command::SweepMu { cfg } => {
            let cfg = load(&cfg)?;
            let rows = commands::sweep_mu(&cfg, cfg.source_model()?.label())?;
            emit(cfg.output.as_ref(), &commands::csv_string(&rows)?)?;
        }
        Command::SweepDistance { cfg } => {
            let cfg = load(&cfg)?;
            let rows = commands::sweep_distance(&cfg, cfg.source_model()?.label())?;
            emit(cfg.output.as_ref(), &commands::csv_string(&rows)?)?;
        }
        Command::VerifyI1dc { k, trials, seed, exhaustive, mutant_rule, output } => {
            let (text, passed) = commands::verify(VerifyOptions { k, exhaustive, trials, seed, mutant_rule })?;
            emit(output.as_ref(), &text)?;
            return Ok(passed);
        }
        Command::Preset { figure, output } => {
            emit(output.as_ref(), &commands::csv_string(&commands::preset(figure)?)?)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
