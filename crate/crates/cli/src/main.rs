use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use parstirap_cli::commands;
use parstirap_cli::config::{parse_config, Preset, RunConfig};
use parstirap_cli::error::{CliError, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "parstirap", version, about = "Parallel adiabatic passage in a three-level Lambda system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Directory for the output artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's Monte-Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Built-in configuration reproducing one of the figures.
    #[arg(long, global = true, value_parser = ["fig1", "fig23", "fig4", "fig5"])]
    preset: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the schedule and check its area, fluence and endpoints.
    Design,
    /// Integrate the Schroedinger equation from |1>.
    Propagate,
    /// Sweep pulse strength for each strategy and compute crossovers.
    Sweep,
    /// Monte-Carlo average over detuning and amplitude fluctuations.
    Noise,
    /// Spectral mask synthesis for a pulse shaper.
    Shape,
    /// Print the JSON schema of the run configuration.
    Schema,
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => {
            let preset = Preset::parse(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
            preset.load().map_err(CliError::Config)?
        }
        (None, None) => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(command: Command, common: &Common) -> Result<(), CliError> {
    if let Command::Schema = command {
        print!("{}", parstirap_cli::config::schema_json());
        return Ok(());
    }
    let cfg = load(common)?;
    let out: &Path = &common.out;
    let art = match command {
        Command::Design => commands::design(&cfg, out),
        Command::Propagate => commands::propagate_cmd(&cfg, out),
        Command::Sweep => commands::sweep(&cfg, out),
        Command::Noise => commands::noise(&cfg, out),
        Command::Shape => commands::shape(&cfg, out),
        Command::Schema => unreachable!(),
    }?;
    for path in &art.written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG as u8),
            };
        }
    };
    match run(cli.command, &cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
