//! Brute-force reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Squared l2 mass outside the k largest magnitudes, by full sort.
pub fn tail_sq(x: &[f64], k: usize) -> f64 {
    let mut sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    sq.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sq[k.min(sq.len())..].iter().sum()
}

pub fn l2_dist(x: &[f64], est: &BTreeMap<usize, f64>) -> f64 {
    let mut dense = vec![0.0; x.len()];
    for (&i, &v) in est {
        dense[i] = v;
    }
    x.iter()
        .zip(&dense)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `k` spikes of magnitude `spike` at random positions, random signs, over a
/// gaussian tail of l2 norm `tail` (spike positions zero in the tail).
pub fn spikes_over_gaussian(
    n: usize,
    k: usize,
    spike: f64,
    tail: f64,
    seed: u64,
) -> (Vec<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let mut pos: Vec<usize> = (0..n).collect();
    pos.shuffle(&mut r);
    pos.truncate(k);
    let mut x: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    for &p in &pos {
        x[p] = 0.0;
    }
    let norm = l2(&x);
    for v in x.iter_mut() {
        *v *= tail / norm;
    }
    for &p in &pos {
        x[p] = if r.random::<bool>() { spike } else { -spike };
    }
    (x, pos)
}

/// Frequency vector `x_i = count(i) - 1` over labels `1..=n-1`, index 0
/// holding label 1.
pub fn brute_frequencies(items: &[usize]) -> Vec<f64> {
    let n = items.len();
    let mut x = vec![-1.0; n - 1];
    for &it in items {
        x[it - 1] += 1.0;
    }
    x
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Random sparse query terms over `indices`, each kept with probability `p`.
pub fn random_terms<R: Rng>(
    r: &mut R,
    indices: std::ops::Range<usize>,
    p: f64,
    coef: f64,
) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for i in indices {
        if r.random_bool(p) {
            out.push((i, r.random_range(-coef..coef)));
        }
    }
    out
}
