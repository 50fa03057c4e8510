//! The nonadaptive baseline: one round of CountSketch.
//!
//!     cargo run --release --example countsketch [n] [k]

use adaptive_sparse::countsketch::{countsketch_recover, sketch_shape};
use adaptive_sparse::harness::{generate_signal, Model};
use adaptive_sparse::signal::tail_error;
use adaptive_sparse::{Constants, MeasurementOracle, Norm, Seeds};

fn main() -> adaptive_sparse::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1 << 16);
    let k: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(8);
    let (eps, delta) = (0.5, 0.1);
    let c = Constants::default();
    let (w, d) = sketch_shape(n, k, eps, delta, &c);
    println!("width {w} x depth {d} = {} measurements", w * d);

    for model in [Model::GaussianTail, Model::FlatTail, Model::PowerLaw(1.5)] {
        let planted = generate_signal(model, n, k, 10.0, Seeds::new(4))?;
        let x = planted.signal.values().to_vec();
        let mut o = MeasurementOracle::new(planted.signal);
        let r = countsketch_recover(&mut o, k, eps, delta, &c, Seeds::new(5))?;
        let ratio = r.l2_error(&x) / tail_error(&x, k, Norm::L2).sqrt();
        println!(
            "{model:<14} error ratio {ratio:.3} (contract: <= {:.1})",
            1.0 + eps
        );
    }
    Ok(())
}
