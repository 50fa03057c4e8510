//! Two-round recovery: reduce to dimension N, find heavy buckets, then
//! identify the coordinate behind each.
//!
//!     cargo run --release --example two_round [n] [k]

use adaptive_sparse::harness::{generate_signal, Model};
use adaptive_sparse::signal::tail_error;
use adaptive_sparse::tworound::two_round_recover_traced;
use adaptive_sparse::{Constants, MeasurementOracle, Norm, Seeds};

fn main() -> adaptive_sparse::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1 << 16);
    let k: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4);
    let eps = 0.5;
    let c = Constants::default();
    let mut wins = 0;
    let trials = 10;
    for t in 0..trials {
        let planted = generate_signal(Model::GaussianTail, n, k, 10.0, Seeds::new(t))?;
        let x = planted.signal.values().to_vec();
        let mut o = MeasurementOracle::new(planted.signal);
        let (r, rep) = two_round_recover_traced(&mut o, k, eps, &c, Seeds::new(100 + t))?;
        let ratio = r.l2_error(&x) / tail_error(&x, k, Norm::L2).sqrt();
        wins += usize::from(ratio <= 1.0 + eps);
        println!(
            "N={} round 1: {} measurements, round 2: {} over {} buckets ({} unidentified); error ratio {ratio:.3}",
            rep.reduced_dimension,
            rep.round_one.measurements,
            rep.round_two.measurements,
            rep.heavy_buckets,
            rep.unidentified
        );
    }
    println!("{wins}/{trials} within (1+eps)");
    Ok(())
}
