//! Adaptive 1-sparse recovery on a spike over gaussian noise, with the
//! shrink schedule it follows.
//!
//!     cargo run --release --example one_sparse [n] [spike-ratio]

use adaptive_sparse::harness::{generate_signal, Model};
use adaptive_sparse::onesparse::{recover_one_sparse, OneSparseSchedule};
use adaptive_sparse::{Constants, MeasurementOracle, Seeds};

fn main() -> adaptive_sparse::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1 << 16);
    let ratio: f64 = args
        .next()
        .and_then(|a| a.parse().ok())
        .unwrap_or(Constants::default().heavy_c);
    let c = Constants::default();

    let schedule = OneSparseSchedule::for_dimension(n);
    println!(
        "n={n}: {} shrink steps, sum of deltas {:.4}",
        schedule.len(),
        schedule.delta_sum()
    );
    for (i, step) in schedule.steps().iter().enumerate() {
        let p = schedule.params(i, c.shrink_c);
        println!(
            "  step {i}: B=2^{:.3} delta={:.4} D={}",
            step.log2_noise_factor, step.delta, p.buckets
        );
    }

    let mut hits = 0;
    let trials = 20;
    for t in 0..trials {
        let planted = generate_signal(Model::GaussianTail, n, 1, ratio, Seeds::new(t))?;
        let mut o = MeasurementOracle::new(planted.signal);
        let all: Vec<usize> = (0..n).collect();
        let got = recover_one_sparse(&mut o, &all, c.shrink_c, Seeds::new(1000 + t));
        let ok = got == Ok(planted.spikes[0]);
        hits += usize::from(ok);
        println!(
            "trial {t:>2}: spike at {:>6}, got {:?}, {} measurements in {} rounds",
            planted.spikes[0],
            got,
            o.measurements_used(),
            o.rounds_used()
        );
    }
    println!("{hits}/{trials} recovered at |x_j| = {ratio} * ||tail||");
    Ok(())
}
