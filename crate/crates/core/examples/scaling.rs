//! Measurement and round counts across n for every scheme, written as CSV.
//!
//!     cargo run --release --example scaling [out.csv] [trials]

use adaptive_sparse::harness::{emit_csv, run_experiment, write_csv, ExperimentSpec, Scheme};

fn main() -> adaptive_sparse::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next();
    let trials: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let mut rows = Vec::new();
    for e in (10..=22).step_by(2) {
        for (scheme, k) in [
            (Scheme::OneSparse, 1),
            (Scheme::KAdaptive, 8),
            (Scheme::CountSketch, 8),
            (Scheme::TwoRound, 4),
            (Scheme::Duplicate, 1),
        ] {
            let mut spec = ExperimentSpec::new(scheme, 1 << e, k);
            spec.trials = trials;
            spec.delta = if scheme == Scheme::Duplicate {
                0.25
            } else {
                0.1
            };
            if scheme == Scheme::OneSparse {
                spec.spike_ratio = spec.constants.heavy_c;
            }
            let row = run_experiment(&spec)?;
            eprintln!(
                "{:<12} n=2^{e:<2} success {:.2} measurements {:>9.1} rounds {:.2}",
                row.scheme, row.success_rate, row.mean_measurements, row.mean_rounds
            );
            rows.push(row);
        }
    }
    match out {
        Some(path) => write_csv(&rows, path.as_ref()),
        None => emit_csv(&rows, std::io::stdout().lock()),
    }
}
