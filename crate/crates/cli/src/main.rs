use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use cavity_readout_cli::commands::Command;
use cavity_readout_cli::config::{resolve, ScenarioName};
use cavity_readout_cli::output::write_table;
use cavity_readout_cli::CliError;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cavity-readout",
    version,
    about = "Figure data for cavity-assisted qubit readout"
)]
struct Cli {
    /// Scenario file (TOML)
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "scenario")]
    config: Option<PathBuf>,

    /// Built-in scenario: paper, ideal-fluorescence or improved-cavity
    #[arg(long, global = true, value_name = "NAME")]
    scenario: Option<ScenarioName>,

    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Monte Carlo records per preparation
    #[arg(long, global = true, value_name = "INT")]
    trials: Option<u64>,

    /// Output file; standard output when absent
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Helstrom error, maximum and accessible knowledge versus n
    Bounds,
    /// Monte Carlo detection error with and without quantum jumps
    Detect,
    /// Zeno transfer curves and inferred measurement numbers
    Zeno,
    /// Bright-state survival versus incident photons
    Depump,
    /// Master-equation summary of the atom-cavity system
    Lindblad,
    /// Knowledge versus scattered photons
    Figure4,
    /// Check a scenario and print it in normalised form
    ValidateConfig,
}

fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(cli.config.as_deref(), cli.scenario, cli.seed, cli.trials)?;
    let out = cli.out.as_ref().or(cfg.output.as_ref());
    let command = match cli.command {
        Cmd::Bounds => Command::Bounds,
        Cmd::Detect => Command::Detect,
        Cmd::Zeno => Command::Zeno,
        Cmd::Depump => Command::Depump,
        Cmd::Lindblad => Command::Lindblad,
        Cmd::Figure4 => Command::Figure4,
        Cmd::ValidateConfig => {
            let mut w = sink(out)?;
            w.write_all(cfg.to_toml()?.as_bytes())?;
            w.flush()?;
            eprintln!("scenario `{}` is valid", cfg.scenario);
            return Ok(());
        }
    };
    let table = command.run(&cfg)?;
    let mut w = sink(out)?;
    write_table(&mut w, &cfg, &table)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
