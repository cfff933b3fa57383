use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use torus_blowup::harness::{self, emit_report, ExperimentConfig, Formats, Preset};

#[derive(Parser)]
#[command(version, about = "Experiments on random walks with creation and annihilation on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance of the density field to the equation as N grows.
    LlnSweep(RunArgs),
    /// Concentration of estimated explosion times.
    BlowupSweep(RunArgs),
    /// Coupling of the total particle count with a birth-death chain.
    DominationCheck(RunArgs),
    /// Spatial convergence order of the semidiscrete scheme.
    SchemeOrder(RunArgs),
    /// First-passage times of birth-death chains against the recursion.
    BdHitting(RunArgs),
    /// Print the shipped configuration of a preset.
    ShowConfig { preset: String },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; defaults to the shipped preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the SVG plots.
    #[arg(long)]
    no_plots: bool,
}

fn run(preset: Preset, args: RunArgs) -> Result<bool, harness::HarnessError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => preset.default_config(),
    };
    if config.preset != preset {
        return Err(harness::HarnessError::Config(format!(
            "config is for preset {}, not {preset}",
            config.preset
        )));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args
        .out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(preset.name()));
    let report = harness::run(&config, args.workers)?;
    let formats = Formats {
        svg: !args.no_plots,
        ..Formats::default()
    };
    let files = emit_report(&report, formats, &out)?;
    for check in &report.checks {
        println!("[{}] {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    for path in files.csv.iter().chain(&files.json).chain(&files.svg) {
        println!("wrote {}", path.display());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (preset, args) = match cli.command {
        Command::LlnSweep(a) => (Preset::LlnSweep, a),
        Command::BlowupSweep(a) => (Preset::BlowupSweep, a),
        Command::DominationCheck(a) => (Preset::DominationCheck, a),
        Command::SchemeOrder(a) => (Preset::SchemeOrder, a),
        Command::BdHitting(a) => (Preset::BdHitting, a),
        Command::ShowConfig { preset } => {
            return match Preset::ALL.iter().find(|p| p.name() == preset) {
                Some(p) => {
                    print!("{}", p.default_config().to_toml());
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("unknown preset {preset:?}");
                    ExitCode::from(2)
                }
            };
        }
    };
    match run(preset, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
