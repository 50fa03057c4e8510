//! Calibration sweep for the unspecified constants.
//!
//! Each constant is swept over a grid on a fixed scenario. A setting meets a
//! target when the lower end of the 95% Wilson interval of its success rate
//! clears it. Heaviness constants take the smallest grid value meeting the
//! target; cost constants (sketch shapes, subsample counts, repetitions) take
//! the cheapest setting meeting it. The shrink bucket constant `C'` is chosen
//! jointly with the k-adaptive sampling constants by end-to-end cost, among
//! settings where a single recursion level also meets its own contract.
//! Prints a `key=value` block usable with `sparse-bench --constants`.
//!
//! Sections not named on the command line keep their defaults.
//!
//!     cargo run --release --example calibrate [trials-scale] [section...]
//!
//! Sections: locator, k-adaptive, heaviness, countsketch, identifier,
//! two-round, duplicate.

use adaptive_sparse::harness::{generate_signal, run_experiment, ExperimentSpec, Model, Scheme};
use adaptive_sparse::ksparse::{recover_partial, PartialParams};
use adaptive_sparse::onesparse::locate_pair;
use adaptive_sparse::signal::tail_error;
use adaptive_sparse::tworound::{bucket_identify, BucketView};
use adaptive_sparse::{Constants, MeasurementOracle, Norm, Seeds, Signal};
use rand::Rng;
use rand_distr::StandardNormal;

fn scaled(base: usize, scale: f64) -> usize {
    ((base as f64 * scale).round() as usize).max(10)
}

/// Success rate of the two-measurement locator on `n'` coordinates when the
/// spike is exactly `c * n' / sqrt(delta) * ||tail||`.
fn locate_rate(c: f64, trials: usize) -> f64 {
    let n = 64;
    let delta: f64 = 0.25;
    let mut rng = Seeds::new(7).rng();
    let mut tail: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    tail[10] = 0.0;
    let norm = tail.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x: Vec<f64> = tail.iter().map(|v| v * 0.3 / norm).collect();
    x[10] = c * n as f64 / delta.sqrt() * 0.3;
    let active: Vec<usize> = (0..n).collect();
    let hits = (0..trials as u64)
        .filter(|&s| {
            let mut o = MeasurementOracle::new(Signal::new(x.clone()).unwrap());
            locate_pair(&mut o, &active, Seeds::new(s).seed()) == Ok(10)
        })
        .count();
    hits as f64 / trials as f64
}

/// Lower end of the 95% Wilson interval for `rate` over `trials` must clear
/// `target`.
fn meets(rate: f64, trials: usize, target: f64) -> bool {
    let z = 1.96f64;
    let n = trials as f64;
    let centre = rate + z * z / (2.0 * n);
    let spread = z * (rate * (1.0 - rate) / n + z * z / (4.0 * n * n)).sqrt();
    (centre - spread) / (1.0 + z * z / n) >= target
}

/// Success rate of the round-2 identifier on a bucket holding the whole
/// domain of `p` coordinates. The planted coordinate is a lone spike, or with
/// `dominant` carries ten times the squared mass of a gaussian rest.
fn identify_rate(p: usize, dominant: bool, fail: f64, constants: &Constants, trials: usize) -> f64 {
    let pre: Vec<usize> = (0..p).collect();
    let hits = (0..trials as u64)
        .filter(|&t| {
            let mut rng = Seeds::new(t).child(1).rng();
            let mut x: Vec<f64> = if dominant {
                (0..p).map(|_| rng.sample(StandardNormal)).collect()
            } else {
                vec![0.0; p]
            };
            let top = rng.random_range(0..p);
            x[top] = 0.0;
            let mass: f64 = x.iter().map(|v| v * v).sum();
            x[top] = if dominant { (10.0 * mass).sqrt() } else { 2.5 };
            let mut o = MeasurementOracle::new(Signal::new(x).unwrap());
            let b = BucketView {
                index: 0,
                preimage: &pre,
            };
            bucket_identify(&mut o, &b, fail, constants, Seeds::new(t).child(2)) == Ok(top)
        })
        .count();
    hits as f64 / trials as f64
}

/// Fraction of single recursion levels meeting
/// `err(x off T, fk) <= (1 + eps) err(x, k)` at k=4, eps=0.5, f=1/32,
/// delta=0.1, n=2^14, on 4 spikes of ratio 10 over a gaussian tail.
fn level_rate(constants: &Constants, trials: usize) -> f64 {
    let (n, k) = (1usize << 14, 4usize);
    let params = PartialParams {
        k: k as f64,
        eps: 0.5,
        f: 1.0 / 32.0,
        delta: 0.1,
    };
    let all: Vec<usize> = (0..n).collect();
    let hits = (0..trials as u64)
        .filter(|&t| {
            let planted =
                generate_signal(Model::GaussianTail, n, k, 10.0, Seeds::new(t).child(1)).unwrap();
            let x = planted.signal.values().to_vec();
            let mut o = MeasurementOracle::new(planted.signal);
            let rec =
                recover_partial(&mut o, &all, params, constants, Seeds::new(t).child(2)).unwrap();
            let mut off = x.clone();
            for &(i, _) in &rec.selected {
                off[i] = 0.0;
            }
            let fk = (params.f * params.k).floor() as usize;
            tail_error(&off, fk, Norm::L2) <= (1.0 + params.eps) * tail_error(&x, k, Norm::L2)
        })
        .count();
    hits as f64 / trials as f64
}

fn rate(spec: &ExperimentSpec) -> (f64, f64) {
    let row = run_experiment(spec).expect("valid spec");
    (row.success_rate, row.mean_measurements)
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scale: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let only = &args[args.len().min(1)..];
    let wanted = |section: &str| only.is_empty() || only.iter().any(|s| s == section);
    let mut chosen = Constants::default();

    if wanted("locator") {
        println!(
            "# locator C: spike = C * n'/sqrt(delta) * ||tail||, n'=64, delta=1/4, target 0.75"
        );
        let grid = [
            1.0 / 64.0,
            1.0 / 32.0,
            1.0 / 16.0,
            1.0 / 8.0,
            1.0 / 4.0,
            1.0 / 2.0,
            1.0,
        ];
        let mut pick = None;
        for &c in &grid {
            let r = locate_rate(c, scaled(1000, scale));
            println!("C={c:<10} success={r:.3}");
            if pick.is_none() && meets(r, scaled(1000, scale), 0.75) {
                pick = Some(c);
            }
        }
        chosen.locate_c = pick.unwrap_or(1.0);
    }

    if wanted("k-adaptive") {
        println!("\n# k-adaptive C', c_sub, c_m: one level at k=4, eps=0.5, f=1/32, delta=0.1, n=2^14, and end to end at k=8, eps=0.5, n=2^16, delta=0.1; gaussian tail, target 0.9 for both");
        let mut best: Option<(f64, f64, f64, f64)> = None;
        for &cp in &[0.125, 0.25, 0.5] {
            for &cs in &[0.25, 0.5, 1.0] {
                for &cm in &[0.5, 0.75, 1.0, 1.5] {
                    let c = Constants {
                        shrink_c: cp,
                        c_m: cm,
                        c_sub: cs,
                        ..chosen.clone()
                    };
                    let trials = scaled(300, scale);
                    let level = level_rate(&c, trials);
                    if !meets(level, trials, 0.9) {
                        println!("C'={cp:<6} c_sub={cs:<5} c_m={cm:<5} level={level:.3}");
                        continue;
                    }
                    let mut spec = ExperimentSpec::new(Scheme::KAdaptive, 1 << 16, 8);
                    spec.delta = 0.1;
                    spec.trials = scaled(200, scale);
                    spec.constants = c;
                    let (r, m) = rate(&spec);
                    println!("C'={cp:<6} c_sub={cs:<5} c_m={cm:<5} level={level:.3} success={r:.3} measurements={m:.0}");
                    if meets(r, spec.trials, 0.9) && best.is_none_or(|b| m < b.3) {
                        best = Some((cp, cs, cm, m));
                    }
                }
            }
        }
        if let Some((cp, cs, cm, _)) = best {
            chosen.shrink_c = cp;
            chosen.c_sub = cs;
            chosen.c_m = cm;
        }
    }

    if wanted("heaviness") {
        println!("\n# heaviness C: one-sparse, n=4096, spike C * ||tail||, target 0.75");
        let mut pick = None;
        for &c in &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0] {
            let mut spec = ExperimentSpec::new(Scheme::OneSparse, 4096, 1);
            spec.spike_ratio = c;
            spec.trials = scaled(1000, scale);
            spec.constants = chosen.clone();
            let (r, m) = rate(&spec);
            println!("C={c:<6} success={r:.3} measurements={m:.1}");
            if pick.is_none() && meets(r, spec.trials, 0.75) {
                pick = Some(c);
            }
        }
        chosen.heavy_c = pick.unwrap_or(128.0);
    }

    if wanted("countsketch") {
        println!("\n# CountSketch c_w, c_d: k=4, eps=0.5, n=2^12, delta=0.01, gaussian tail, target 0.99");
        let mut best: Option<(f64, f64, f64)> = None;
        for &cw in &[2.0, 4.0, 6.0, 8.0, 12.0] {
            for &cd in &[0.5, 1.0, 1.5] {
                let mut spec = ExperimentSpec::new(Scheme::CountSketch, 1 << 12, 4);
                spec.delta = 0.01;
                spec.trials = scaled(700, scale);
                spec.constants = Constants {
                    c_w: cw,
                    c_d: cd,
                    ..chosen.clone()
                };
                let (r, m) = rate(&spec);
                println!("c_w={cw:<4} c_d={cd:<4} success={r:.3} measurements={m:.0}");
                if meets(r, spec.trials, 0.99) && best.is_none_or(|b| m < b.2) {
                    best = Some((cw, cd, m));
                }
            }
        }
        if let Some((cw, cd, _)) = best {
            chosen.c_w = cw;
            chosen.c_d = cd;
        }
    }

    if wanted("identifier") {
        println!("\n# identifier c_w_id, c_d_id: whole-domain bucket of P coordinates, fail=1/16, exact and dominant spikes, target 1-fail");
        let fail = 1.0 / 16.0;
        let mut best: Option<(f64, f64, usize)> = None;
        for &cid in &[4.0, 8.0, 16.0, 32.0] {
            for &cdid in &[1.0, 1.5, 2.0, 3.0] {
                let c = Constants {
                    c_w_id: cid,
                    c_d_id: cdid,
                    ..chosen.clone()
                };
                let mut worst = 1.0f64;
                let mut trials = 0;
                for p in [1usize << 10, 1 << 14] {
                    for dominant in [false, true] {
                        trials = scaled(300, scale);
                        let r = identify_rate(p, dominant, fail, &c, trials);
                        worst = worst.min(r);
                    }
                }
                let cost = (cid.ceil() as usize)
                    * ((cdid * ((1usize << 20) as f64 / fail).ln()).ceil() as usize);
                println!(
                    "c_w_id={cid:<4} c_d_id={cdid:<4} worst_success={worst:.3} rows_at_2^20={cost}"
                );
                if meets(worst, trials, 1.0 - fail) && best.is_none_or(|b| cost < b.2) {
                    best = Some((cid, cdid, cost));
                }
            }
        }
        if let Some((cid, cdid, _)) = best {
            chosen.c_w_id = cid;
            chosen.c_d_id = cdid;
        }
    }

    if wanted("two-round") {
        println!("\n# two-round c_N: k=4, eps=0.5, n=2^12, gaussian tail, target 0.8");
        let mut pick = None;
        for &cn in &[0.25, 0.5, 1.0] {
            let mut spec = ExperimentSpec::new(Scheme::TwoRound, 1 << 12, 4);
            spec.trials = scaled(300, scale);
            spec.constants = Constants {
                c_n: cn,
                ..chosen.clone()
            };
            let (r, m) = rate(&spec);
            println!("c_N={cn:<5} success={r:.3} measurements={m:.0}");
            if pick.is_none() && meets(r, spec.trials, 0.8) {
                pick = Some(cn);
            }
        }
        chosen.c_n = pick.unwrap_or(1.0);
    }

    if wanted("duplicate") {
        println!("\n# duplicate finder dup_reps: n=2^12, delta=0.25, shuffled and all-same streams, target 0.75");
        let mut pick = None;
        for &reps in &[1usize, 2, 4] {
            let mut worst = 1.0f64;
            let mut trials = 0;
            for model in [Model::Shuffled, Model::AllSame] {
                let mut spec = ExperimentSpec::new(Scheme::Duplicate, 1 << 12, 1);
                spec.delta = 0.25;
                spec.model = model;
                spec.trials = scaled(300, scale);
                spec.constants = Constants {
                    dup_reps: reps,
                    ..chosen.clone()
                };
                let row = run_experiment(&spec).expect("valid spec");
                println!(
                    "dup_reps={reps} {model:<9} success={:.3} passes={:.2}",
                    row.success_rate, row.mean_rounds
                );
                worst = worst.min(row.success_rate);
                trials = spec.trials;
            }
            if pick.is_none() && meets(worst, trials, 0.75) {
                pick = Some(reps);
            }
        }
        chosen.dup_reps = pick.unwrap_or(4);
    }

    println!("\n# chosen constants");
    print!("{}", chosen.to_config());
}
