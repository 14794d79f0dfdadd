//! Command-line front end: one subcommand per experiment kind, plus config validation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinloc_core::harness::{run_experiment, ExperimentConfig, ExperimentKind, HarnessError};

#[derive(Parser)]
#[command(name = "spinloc", version, about = "Spin-coupled Anderson model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, centers and participation ratios.
    Spectrum(RunArgs),
    /// Corresponding eigenvector pairs between the two sectors, spacing statistics.
    Match(RunArgs),
    /// Tunneling trace of the selected corresponding pair.
    Tunnel(RunArgs),
    /// Fractional moments of the spin resolvent and their decay fits.
    Greens(RunArgs),
    /// Minimal-spacing probabilities of the box Hamiltonian.
    Minami(RunArgs),
    /// Spin-flip correlator sup norms over a log time grid.
    Correlator(RunArgs),
    /// Parse and validate a config, then print its hash.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; its `kind` is replaced by the subcommand.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of derived seeds; replaces any explicit seed list.
    #[arg(long)]
    seeds: Option<usize>,
    /// Base of the seed derivation; replaces any explicit seed list.
    #[arg(long)]
    base_seed: Option<u64>,
}

fn load(args: &RunArgs, kind: ExperimentKind) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.kind = kind;
    if let Some(n) = args.seeds {
        cfg.seeds.n_seeds = n;
        cfg.seeds.list = None;
    }
    if let Some(b) = args.base_seed {
        cfg.seeds.base_seed = b;
        cfg.seeds.list = None;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs, kind: ExperimentKind) -> Result<i32, HarnessError> {
    let cfg = load(args, kind)?;
    let manifest = run_experiment(&cfg, args.out.as_deref())?;
    let failed = manifest.failed_seeds();
    println!(
        "{}: {} seeds, config {}, {} files",
        kind.name(),
        manifest.seeds.len(),
        manifest.config_hash,
        manifest.outputs.len()
    );
    if !failed.is_empty() {
        eprintln!("failed seeds: {failed:?} (see manifest.json)");
    }
    Ok(manifest.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(a) => run(a, ExperimentKind::Spectrum),
        Command::Match(a) => run(a, ExperimentKind::Match),
        Command::Tunnel(a) => run(a, ExperimentKind::Tunnel),
        Command::Greens(a) => run(a, ExperimentKind::Greens),
        Command::Minami(a) => run(a, ExperimentKind::Minami),
        Command::Correlator(a) => run(a, ExperimentKind::Correlator),
        Command::ValidateConfig { config } => ExperimentConfig::load(config).and_then(|cfg| {
            println!("ok: kind {}, {} seeds, hash {}", cfg.kind.name(), cfg.seed_list().len(), cfg.hash()?);
            Ok(0)
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
