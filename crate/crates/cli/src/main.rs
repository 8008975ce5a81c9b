use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use recical_cli::{run_experiment, ExperimentConfig, ExperimentKind, Result};

/// Runs one reciprocity-calibration experiment and writes CSV tables plus a
/// JSON manifest to `<out>/<experiment>/`.
#[derive(Debug, Parser)]
#[command(name = "recical", version)]
struct Args {
    experiment: ExperimentKind,

    /// JSON configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the trial count.
    #[arg(long)]
    trials: Option<usize>,

    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: &Args) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    let manifest = run_experiment(args.experiment, &cfg)?;
    for f in &manifest.outputs {
        println!("{}", f.path.display());
    }
    Ok(())
}

fn fail(kind: &str, message: String) -> ExitCode {
    let report = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{report}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.render().to_string()),
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string()),
    }
}
