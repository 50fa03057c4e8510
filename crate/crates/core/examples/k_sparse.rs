//! Adaptive k-sparse recovery, level by level.
//!
//!     cargo run --release --example k_sparse [n] [k]

use adaptive_sparse::harness::{generate_signal, Model};
use adaptive_sparse::ksparse::{recover_k_sparse_traced, RoundSchedule};
use adaptive_sparse::signal::tail_error;
use adaptive_sparse::{Constants, MeasurementOracle, Norm, Seeds};

fn main() -> adaptive_sparse::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1 << 16);
    let k: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(8);
    let (eps, delta) = (0.5, 0.2);

    let schedule = RoundSchedule::new(k, eps, delta)?;
    println!(
        "schedule for k={k}: r={} levels, {} run",
        schedule.len(),
        schedule.active_levels().count()
    );
    for l in schedule.levels() {
        println!(
            "  eps={:.4} delta={:.4} log2 f={} log2 k={:.3}",
            l.eps, l.delta, l.log2_f, l.log2_k
        );
    }

    let planted = generate_signal(Model::GaussianTail, n, k, 10.0, Seeds::new(1))?;
    let x = planted.signal.values().to_vec();
    let mut o = MeasurementOracle::new(planted.signal);
    let (result, levels) =
        recover_k_sparse_traced(&mut o, k, eps, delta, &Constants::default(), Seeds::new(2))?;
    for (i, lv) in levels.iter().enumerate() {
        let r = &lv.recovery;
        println!(
            "level {i}: {} samples, {} search rounds, {} candidates, kept {}",
            r.samples,
            r.search_rounds,
            r.candidates,
            r.selected.len()
        );
    }
    let err = result.l2_error(&x);
    let tail = tail_error(&x, k, Norm::L2).sqrt();
    println!(
        "|T|={} error {err:.4} vs (1+eps) * tail {:.4}; {} measurements ({} direct) in {} rounds",
        result.estimate.len(),
        (1.0 + eps) * tail,
        result.metering.measurements,
        result.metering.direct_observations,
        result.metering.rounds
    );
    Ok(())
}
