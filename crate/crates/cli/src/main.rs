use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use trapnoise_cli::commands::{self, Common, Source};
use trapnoise_cli::runner::Measured;

/// Monte Carlo and closed-form spectra of trapping-detrapping current noise.
#[derive(Parser)]
#[command(name = "trapnoise", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed; run i of an experiment uses seed + i.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Divide observation times and realization counts by this factor.
    #[arg(long, global = true)]
    scale: Option<f64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory (default: output/<name>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Include runs that take hours at full scale.
    #[arg(long, global = true)]
    full: bool,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct SourceArgs {
    /// Built-in figure preset (fig2 .. fig6).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,

    /// Experiment spec file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SourceArgs {
    fn source(&self) -> Result<Source> {
        match (&self.preset, &self.config) {
            (Some(p), None) => Ok(Source::Preset(p.clone())),
            (None, Some(c)) => Ok(Source::Config(c.clone())),
            _ => bail!("give exactly one of --preset or --config"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write raw carrier paths (and sampled signals, when dt is set).
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        /// Only the first N realizations of each run.
        #[arg(long)]
        max_realizations: Option<usize>,
    },
    /// Estimate averaged spectra and write them with analytic curves.
    Spectrum {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Build the analysis report from spectra already on disk.
    Analyze {
        #[command(flatten)]
        source: SourceArgs,
        /// Directory holding the spectrum CSVs (default: the output directory).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Measured pulse rate per carrier, if no stats file is present.
        #[arg(long)]
        nu: Option<f64>,
        /// Measured mean current, if no stats file is present.
        #[arg(long)]
        mean_current: Option<f64>,
    },
    /// Run a figure preset end to end.
    Reproduce { figure: String },
    /// Print a figure preset as an editable spec.
    DumpPreset { figure: String },
}

fn run(cli: Cli) -> Result<()> {
    let common = Common {
        seed: cli.seed,
        scale: cli.scale,
        workers: cli.workers,
        out: cli.out,
        full: cli.full,
    };
    let set = match cli.command {
        Command::DumpPreset { figure } => {
            let text = commands::dump_preset(&figure, &common)?;
            match &common.out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            return Ok(());
        }
        Command::Reproduce { figure } => {
            let spec = commands::load_spec(&Source::Preset(figure), &common)?;
            commands::reproduce(&spec, &common)?
        }
        Command::Spectrum { source } => {
            let spec = commands::load_spec(&source.source()?, &common)?;
            commands::spectrum(&spec, &common)?
        }
        Command::Simulate { source, max_realizations } => {
            let spec = commands::load_spec(&source.source()?, &common)?;
            commands::simulate(&spec, &common, max_realizations)?
        }
        Command::Analyze {
            source,
            input,
            nu,
            mean_current,
        } => {
            let spec = commands::load_spec(&source.source()?, &common)?;
            let input = input
                .or_else(|| common.out.clone())
                .or_else(|| spec.output_dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("output").join(&spec.name));
            commands::analyze_files(&spec, &input, Measured { nu, mean_current }, &common)?
        }
    };
    for f in &set.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
