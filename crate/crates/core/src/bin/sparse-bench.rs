//! Runs one Monte Carlo experiment and writes its result row as CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_sparse::harness::{
    emit_csv, run_experiment, trial_stream, write_csv, ExperimentSpec, Model, Scheme,
};
use adaptive_sparse::Constants;
use clap::Parser;

#[derive(Debug, Parser)]
#[command(
    name = "sparse-bench",
    version,
    about = "Benchmark adaptive and nonadaptive sparse recovery"
)]
struct Args {
    /// one-sparse, k-adaptive, two-round, countsketch or duplicate
    #[arg(long)]
    scheme: Scheme,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// flat-tail, gaussian-tail, power-law[:alpha], exact-sparse; for the
    /// duplicate scheme one-duplicate, all-same or shuffled
    #[arg(long)]
    model: Option<Model>,
    #[arg(long, default_value_t = 10.0)]
    spike_ratio: f64,
    /// Output CSV path; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// key=value file overriding the calibrated constants
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Write the stream of trial 0 as a newline-delimited fixture and exit
    /// (duplicate scheme only)
    #[arg(long)]
    stream_out: Option<PathBuf>,
}

fn spec(args: &Args) -> Result<ExperimentSpec, String> {
    let constants = match &args.constants {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Constants::parse(std::io::BufReader::new(file))
                .map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => Constants::default(),
    };
    let mut spec = ExperimentSpec::new(args.scheme, args.n, args.k);
    spec.eps = args.eps;
    spec.delta = args.delta;
    spec.trials = args.trials;
    spec.seed = args.seed;
    if let Some(m) = args.model {
        spec.model = m;
    }
    spec.spike_ratio = args.spike_ratio;
    spec.workers = args.workers;
    spec.constants = constants;
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let spec = match spec(&args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(path) = &args.stream_out {
        if spec.scheme != Scheme::Duplicate {
            eprintln!("error: --stream-out needs --scheme duplicate");
            return ExitCode::from(2);
        }
        let written = trial_stream(&spec, 0).and_then(|s| {
            let file = std::fs::File::create(path)?;
            s.write_text(std::io::BufWriter::new(file))
        });
        return match written {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    }
    let written = run_experiment(&spec).and_then(|row| match &args.out {
        Some(path) => write_csv(&[row], path),
        None => emit_csv(&[row], std::io::stdout().lock()),
    });
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
