mod common;

use adaptive_sparse::duplicates::{find_duplicate, meter_passes, MultiPassStream};
use adaptive_sparse::hashing::UnitUniforms;
use adaptive_sparse::onesparse::OneSparseSchedule;
use adaptive_sparse::{Constants, LinearQuery, QueryBatch, Seeds};
use rand::seq::SliceRandom;
use rand::Rng;

fn shuffled_one_duplicate(n: usize, seed: u64) -> (Vec<usize>, usize) {
    let mut r = common::rng(seed);
    let d = r.random_range(1..n);
    let mut items: Vec<usize> = (1..n).collect();
    items.push(d);
    items.shuffle(&mut r);
    (items, d)
}

#[test]
fn stream_measure_matches_brute_force() {
    let mut r = common::rng(17);
    for inst in 0..200 {
        let n = r.random_range(2..500);
        let items: Vec<usize> = (0..n).map(|_| r.random_range(1..n)).collect();
        let x = common::brute_frequencies(&items);
        let mut s = MultiPassStream::new(items).unwrap();
        let terms: Vec<(usize, f64)> = common::random_terms(&mut r, 1..n, 0.5, 2.0);
        let expect: f64 = terms.iter().map(|&(i, c)| c * x[i - 1]).sum();
        let got = s
            .stream_measure(&QueryBatch::new(vec![LinearQuery::new(terms).unwrap()]).unwrap())
            .unwrap();
        assert!(common::rel_close(got[0], expect, 1e-9), "instance {inst}");
        assert_eq!(s.passes_used(), 1);
    }
}

#[test]
fn scaled_measurements_match_brute_force_z() {
    let n = 1 << 10;
    let (items, _) = shuffled_one_duplicate(n, 3);
    let x = common::brute_frequencies(&items);
    let t = UnitUniforms::new(4, n as u64, 99).unwrap();
    let mut s = MultiPassStream::new(items).unwrap();
    for i in (1..n).step_by(37) {
        let ti = t.eval(i as u64).unwrap();
        let got = s
            .stream_measure(&QueryBatch::new(vec![LinearQuery::singleton(i, 1.0 / ti)]).unwrap())
            .unwrap();
        assert!(common::rel_close(got[0], x[i - 1] / ti, 1e-9));
    }
}

#[test]
fn all_same_stream_returns_its_item() {
    let delta = 0.05;
    let trials = 200;
    let mut found = 0;
    for t in 0..trials {
        let mut s = MultiPassStream::new(vec![1usize; 1 << 10]).unwrap();
        let run = find_duplicate(&mut s, delta, &Constants::default(), Seeds::new(t)).unwrap();
        assert!(matches!(run.found, None | Some(1)));
        found += usize::from(run.found.is_some());
    }
    assert!(
        found as f64 >= (1.0 - delta) * trials as f64,
        "{found}/{trials}"
    );
}

#[test]
fn one_duplicate_found_and_never_unsound() {
    let n = 1 << 12;
    let trials = 100;
    let mut found = 0;
    for t in 0..trials {
        let (items, d) = shuffled_one_duplicate(n, 300 + t);
        let x = common::brute_frequencies(&items);
        let mut s = MultiPassStream::new(items).unwrap();
        let run = find_duplicate(&mut s, 0.25, &Constants::default(), Seeds::new(t)).unwrap();
        if let Some(i) = run.found {
            assert!(x[i - 1] > 0.0);
            assert_eq!(i, d);
            found += 1;
        }
        let (passes, words) = meter_passes(&run);
        assert_eq!(passes, s.passes_used());
        assert!(passes <= OneSparseSchedule::for_dimension(n).len() as u64 + 2);
        let parts = run.repetitions * run.parts_per_repetition;
        assert!(words <= parts * 2 + parts * Constants::default().dup_candidates + parts * 4);
    }
    assert!(found as f64 >= 0.75 * trials as f64, "{found}/{trials}");
}

/// Pr[ ||z off its top m||_2 > sqrt(m)/20 * ||x||_1 ] on one-duplicate
/// streams with 4-wise uniform scalings.
/// Fraction of 1000 random streams on which the scaled vector's tail beyond
/// its top `m` exceeds `sqrt(m) / 20 * ||x||_1`.
fn large_tail_fraction(m: usize) -> f64 {
    let n = 1usize << 12;
    let draws = 1000;
    let mut r = common::rng(11);
    let mut large = 0;
    for s in 0..draws {
        let items: Vec<usize> = (0..n).map(|_| r.random_range(1..n)).collect();
        let x = common::brute_frequencies(&items);
        let t = UnitUniforms::new(4, n as u64, s).unwrap();
        let z: Vec<f64> = (1..n)
            .map(|i| x[i - 1] / t.eval(i as u64).unwrap())
            .collect();
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        if common::tail_sq(&z, m).sqrt() > (m as f64).sqrt() / 20.0 * l1 {
            large += 1;
        }
    }
    large as f64 / draws as f64
}

#[test]
#[ignore = "fails: at m = 8 the bound is exceeded on every random stream, even with fully independent uniforms"]
fn scaled_tail_is_rarely_large_at_m8() {
    let frac = large_tail_fraction(8);
    assert!(frac <= 0.1, "{frac}");
}

#[test]
fn scaled_tail_is_rarely_large_at_m32() {
    let frac = large_tail_fraction(32);
    assert!(frac <= 0.1, "{frac}");
}

#[test]
fn text_fixture_round_trip() {
    let (items, _) = shuffled_one_duplicate(64, 1);
    let s = MultiPassStream::new(items.clone()).unwrap();
    let mut buf = Vec::new();
    s.write_text(&mut buf).unwrap();
    let back = MultiPassStream::read_text(&buf[..]).unwrap();
    assert_eq!(back.items(), &items[..]);
}
