use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use waveguide_cli::{run, Command, RunOptions, WaveguideConfig};

#[derive(Parser)]
#[command(name = "waveguide", version, about = "Spectral analysis of curved quantum waveguides")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Problem definition (TOML), or a report.txt written by an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.txt and the data files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Compute the spectrum even if the assumption gate fails.
    #[arg(long)]
    force: bool,
    /// Progress messages on stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Bound states below the threshold, with error bars (report.txt, spectrum.csv).
    Spectrum(Common),
    /// The assumption gate alone (report.txt).
    Check(Common),
    /// Tube mesh and metric samples (mesh.txt, metric.csv).
    Export(Common),
    /// Mourre estimate for the straight tube (report.txt, mourre.csv).
    Mourre(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Spectrum(c) => (Command::Spectrum, c),
        Sub::Check(c) => (Command::Check, c),
        Sub::Export(c) => (Command::Export, c),
        Sub::Mourre(c) => (Command::Mourre, c),
    };
    let opts = RunOptions {
        out: common.out,
        force: common.force,
        verbose: common.verbose,
    };
    let result = WaveguideConfig::load(&common.config).and_then(|config| run(command, &config, &opts));
    match result {
        Ok(outcome) => {
            println!("{}", outcome.message);
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
