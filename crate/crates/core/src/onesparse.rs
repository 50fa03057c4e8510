//! Adaptive 1-sparse recovery with `O(log log n)` measurements.
//!
//! The building block is a pair of measurements `a = sum s(i) x_i` and
//! `b = sum (offset + pos(i)) s(i) x_i`: if one coordinate dominates,
//! `b / a - offset` rounds to its position. [`shrink`] applies that test to
//! random buckets of the active set instead of single coordinates, cutting
//! the candidate set while the survivor's signal-to-noise ratio grows by the
//! factor `B`. Iterating with `B_{i+1} = B_i^{3/2}` isolates the heavy
//! coordinate after `ceil(log_{3/2} log2 n)` shrinks.
//!
//! Recoveries are written as small state machines ([`OneSparseRecovery`]) so
//! that many of them can advance through the same adaptive rounds; see
//! [`run_lockstep`].

use crate::error::{Error, Result};
use crate::hashing::{KWiseHash, SignHash};
use crate::oracle::{LinearQuery, Measure, QueryBatch};
use crate::seed::{tag, Seeds};

/// Relative guard below which `a` is treated as zero.
pub const SIGNAL_GUARD: f64 = 1e-12;

/// Largest bucket count a shrink step will use. Beyond this the rounding of
/// `b / a - D` starts to lose integer resolution in double precision.
pub const MAX_BUCKETS: u64 = 1 << 40;

/// One entry `(B_i, delta_i)` of the shrink schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleStep {
    /// `log2 B_i = (3/2)^i`.
    pub log2_noise_factor: f64,
    pub delta: f64,
}

impl ScheduleStep {
    pub fn noise_factor(&self) -> f64 {
        self.log2_noise_factor.exp2()
    }
}

/// `B_0 = 2`, `B_{i+1} = B_i^{3/2}`, `delta_i = 2^{-i} / 4`, truncated at the
/// first `r` with `B_r >= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneSparseSchedule {
    steps: Vec<ScheduleStep>,
    dimension: usize,
}

impl OneSparseSchedule {
    pub fn for_dimension(n: usize) -> Self {
        let target = (n.max(1) as f64).log2();
        let mut steps = Vec::new();
        let mut log2_b = 1.0f64;
        let mut delta = 0.25f64;
        while log2_b < target {
            steps.push(ScheduleStep {
                log2_noise_factor: log2_b,
                delta,
            });
            log2_b *= 1.5;
            delta /= 2.0;
        }
        OneSparseSchedule {
            steps,
            dimension: n,
        }
    }

    /// `r`, the number of shrink iterations.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[ScheduleStep] {
        &self.steps
    }

    pub fn delta_sum(&self) -> f64 {
        self.steps.iter().map(|s| s.delta).sum()
    }

    /// `log2 B_r` for the returned `r`, i.e. `(3/2)^r`.
    pub fn final_log2_noise_factor(&self) -> f64 {
        1.5f64.powi(self.steps.len() as i32)
    }

    /// `ceil(log_{3/2} log2 n) + 2`, an upper bound on [`Self::len`].
    pub fn iteration_bound(n: usize) -> usize {
        if n <= 2 {
            return 2;
        }
        ((n as f64).log2().ln() / 1.5f64.ln()).ceil() as usize + 2
    }

    /// Shrink parameters for iteration `i`.
    pub fn params(&self, i: usize, shrink_c: f64) -> ShrinkParams {
        let s = self.steps[i];
        let b_squared = (2.0 * s.log2_noise_factor).exp2();
        let mut params = ShrinkParams::from_squared(b_squared, s.delta, shrink_c);
        params.noise_factor = s.noise_factor();
        params
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
}

/// Parameters of one shrink: noise-reduction factor `B`, failure
/// probability `delta` and the bucket count `D` they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkParams {
    pub noise_factor: f64,
    pub delta: f64,
    pub buckets: u64,
}

impl ShrinkParams {
    /// `D = ceil(C' * 4 B^2 / delta)`, clamped to `[2, MAX_BUCKETS]`.
    pub fn from_step(noise_factor: f64, delta: f64, shrink_c: f64) -> Self {
        Self::from_squared(noise_factor * noise_factor, delta, shrink_c)
    }

    fn from_squared(b_squared: f64, delta: f64, shrink_c: f64) -> Self {
        let d = (shrink_c * 4.0 * b_squared / delta).ceil();
        let buckets = if d.is_finite() {
            (d as u64).clamp(2, MAX_BUCKETS)
        } else {
            MAX_BUCKETS
        };
        ShrinkParams {
            noise_factor: b_squared.sqrt(),
            delta,
            buckets,
        }
    }

    pub fn with_buckets(buckets: u64) -> Result<Self> {
        if buckets < 2 {
            return Err(Error::invalid("a shrink needs at least 2 buckets"));
        }
        Ok(ShrinkParams {
            noise_factor: f64::NAN,
            delta: f64::NAN,
            buckets,
        })
    }
}

/// Rounds `b / a - offset` to a 1-based position in `[1, limit]`.
pub(crate) fn decode_position(
    a: f64,
    b: f64,
    offset: f64,
    limit: u64,
    a_scale: f64,
) -> Result<u64> {
    if a == 0.0 || a.abs() < SIGNAL_GUARD * a_scale {
        return Err(Error::NoSignal);
    }
    let pos = (b / a - offset).round();
    if !pos.is_finite() || pos < 1.0 || pos > limit as f64 {
        return Err(Error::OutOfRange {
            position: pos as i64,
            limit: limit as usize,
        });
    }
    Ok(pos as u64)
}

/// The hash functions of one shrink step, over the ambient index domain.
#[derive(Debug, Clone)]
pub struct ShrinkHashes {
    bucket: KWiseHash,
    item_sign: SignHash,
    bucket_sign: SignHash,
    buckets: u64,
}

impl ShrinkHashes {
    pub fn draw(dimension: usize, buckets: u64, seeds: Seeds) -> Result<Self> {
        let domain = dimension.max(1) as u64;
        Ok(ShrinkHashes {
            bucket: KWiseHash::new(2, domain, buckets, seeds.child(tag::SHRINK_H).seed())?,
            item_sign: SignHash::new(2, domain, seeds.child(tag::SHRINK_S1).seed())?,
            bucket_sign: SignHash::new(2, buckets, seeds.child(tag::SHRINK_S2).seed())?,
            buckets,
        })
    }

    pub fn buckets(&self) -> u64 {
        self.buckets
    }

    /// 0-based bucket of coordinate `i`.
    #[inline]
    pub fn bucket_of(&self, i: usize) -> u64 {
        self.bucket.at(i)
    }

    /// `(bucket, a-coefficient, b-coefficient)` for coordinate `i`.
    #[inline]
    pub fn coefficients(&self, i: usize) -> (u64, f64, f64) {
        let h = self.bucket.at(i);
        let sign = self.item_sign.at(i) * self.bucket_sign.at(h as usize);
        (h, sign, sign * (self.buckets + 1 + h) as f64)
    }

    pub fn queries(&self, active: &[usize]) -> [LinearQuery; 2] {
        let mut a = Vec::with_capacity(active.len());
        let mut b = Vec::with_capacity(active.len());
        for &i in active {
            let (_, ca, cb) = self.coefficients(i);
            a.push((i, ca));
            b.push((i, cb));
        }
        [LinearQuery::from_distinct(a), LinearQuery::from_distinct(b)]
    }

    /// Bucket selected by the measured pair, 0-based.
    pub fn decode(&self, a: f64, b: f64, active_len: usize) -> Result<u64> {
        let pos = decode_position(
            a,
            b,
            self.buckets as f64,
            self.buckets,
            (active_len as f64).sqrt(),
        )?;
        Ok(pos - 1)
    }
}

/// Two non-adaptive measurements locating a dominant coordinate of `active`.
///
/// Positions are relabelled `1..=n'` with `n' = |active|`; the returned value
/// is the element of `active` at the decoded position.
pub fn locate_pair<M: Measure>(measure: &mut M, active: &[usize], sign_seed: u64) -> Result<usize> {
    let n = active.len();
    if n == 0 {
        return Err(Error::EmptySelection);
    }
    let signs = SignHash::new(2, n as u64, sign_seed)?;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for (p, &i) in active.iter().enumerate() {
        let s = signs.at(p);
        a.push((i, s));
        b.push((i, (n + p + 1) as f64 * s));
    }
    let batch = QueryBatch::new(vec![LinearQuery::new(a)?, LinearQuery::new(b)?])?;
    let ans = measure.measure(batch)?;
    let pos = decode_position(ans[0], ans[1], n as f64, n as u64, (n as f64).sqrt())?;
    Ok(active[pos as usize - 1])
}

/// One shrink: a 2-measurement round returning the coordinates of `active`
/// that fall into the decoded bucket.
pub fn shrink<M: Measure>(
    measure: &mut M,
    active: &[usize],
    params: ShrinkParams,
    seeds: Seeds,
) -> Result<Vec<usize>> {
    if active.is_empty() {
        return Err(Error::EmptySelection);
    }
    let hashes = ShrinkHashes::draw(measure.dimension(), params.buckets, seeds)?;
    let ans = measure.measure(QueryBatch::new(hashes.queries(active).to_vec())?)?;
    let chosen = hashes.decode(ans[0], ans[1], active.len())?;
    let survivors: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&i| hashes.bucket_of(i) == chosen)
        .collect();
    if survivors.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(survivors)
}

#[derive(Debug, Clone)]
enum Pending {
    Idle,
    Shrink(ShrinkHashes),
    Singletons,
}

/// Resumable adaptive 1-sparse recovery over a fixed active set.
///
/// Call [`next_queries`](Self::next_queries) to get the next round's
/// queries (or `None` once finished) and [`absorb`](Self::absorb) with their
/// answers.
#[derive(Debug, Clone)]
pub struct OneSparseRecovery {
    dimension: usize,
    active: Vec<usize>,
    buckets: Vec<u64>,
    step: usize,
    seeds: Seeds,
    pending: Pending,
    outcome: Option<Result<usize>>,
}

impl OneSparseRecovery {
    pub fn new(dimension: usize, active: Vec<usize>, shrink_c: f64, seeds: Seeds) -> Self {
        let schedule = OneSparseSchedule::for_dimension(active.len());
        let cap = schedule
            .len()
            .min(OneSparseSchedule::iteration_bound(active.len()) + 2);
        let buckets = (0..cap)
            .map(|i| schedule.params(i, shrink_c).buckets)
            .collect();
        OneSparseRecovery {
            dimension,
            active,
            buckets,
            step: 0,
            seeds,
            pending: Pending::Idle,
            outcome: None,
        }
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Shrink iterations performed so far.
    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn outcome(&self) -> Option<&Result<usize>> {
        self.outcome.as_ref()
    }

    pub fn into_outcome(self) -> Option<Result<usize>> {
        self.outcome
    }

    pub fn is_finished(&self) -> bool {
        self.outcome.is_some()
    }

    fn pending_len(&self) -> usize {
        match self.pending {
            Pending::Idle => 0,
            Pending::Shrink(_) => 2,
            Pending::Singletons => self.active.len(),
        }
    }

    /// Queries for the next round, or `None` when the recovery has finished.
    pub fn next_queries(&mut self) -> Option<Vec<LinearQuery>> {
        if self.outcome.is_some() {
            return None;
        }
        match self.active.len() {
            0 => {
                self.outcome = Some(Err(Error::EmptySelection));
                None
            }
            1 => {
                self.outcome = Some(Ok(self.active[0]));
                None
            }
            2 => {
                self.pending = Pending::Singletons;
                Some(
                    self.active
                        .iter()
                        .map(|&i| LinearQuery::singleton(i, 1.0))
                        .collect(),
                )
            }
            len if self.step >= self.buckets.len() => {
                self.outcome = Some(Err(Error::Unresolved(len)));
                None
            }
            _ => {
                let seeds = self.seeds.child(self.step as u64);
                match ShrinkHashes::draw(self.dimension, self.buckets[self.step], seeds) {
                    Ok(h) => {
                        let qs = h.queries(&self.active).to_vec();
                        self.pending = Pending::Shrink(h);
                        Some(qs)
                    }
                    Err(e) => {
                        self.outcome = Some(Err(e));
                        None
                    }
                }
            }
        }
    }

    pub fn absorb(&mut self, answers: &[f64]) {
        match std::mem::replace(&mut self.pending, Pending::Idle) {
            Pending::Idle => {}
            Pending::Singletons => {
                let best = self
                    .active
                    .iter()
                    .zip(answers)
                    .max_by(|(i, u), (j, v)| u.abs().total_cmp(&v.abs()).then(j.cmp(i)));
                self.outcome = Some(match best {
                    Some((&i, v)) if *v != 0.0 => Ok(i),
                    _ => Err(Error::NoSignal),
                });
            }
            Pending::Shrink(h) => {
                self.step += 1;
                match h.decode(answers[0], answers[1], self.active.len()) {
                    Ok(chosen) => {
                        self.active.retain(|&i| h.bucket_of(i) == chosen);
                        if self.active.is_empty() {
                            self.outcome = Some(Err(Error::EmptySelection));
                        }
                    }
                    Err(e) => self.outcome = Some(Err(e)),
                }
            }
        }
    }
}

/// Drives every recovery to completion, packing all queries of a round into
/// one adaptive round of `measure`. Returns the number of rounds used.
pub fn run_lockstep<M: Measure>(
    measure: &mut M,
    machines: &mut [OneSparseRecovery],
) -> Result<usize> {
    let mut rounds = 0;
    loop {
        let chunks = machines
            .iter_mut()
            .filter_map(|m| m.next_queries())
            .map(|qs| QueryBatch::new(qs).expect("active sets are never empty here"));
        let answers = measure.measure_round(chunks)?;
        if answers.is_empty() {
            return Ok(rounds);
        }
        rounds += 1;
        let mut offset = 0;
        for m in machines.iter_mut() {
            let len = m.pending_len();
            if len > 0 {
                m.absorb(&answers[offset..offset + len]);
                offset += len;
            }
        }
        debug_assert_eq!(offset, answers.len());
    }
}

/// Adaptive 1-sparse recovery on `active`; one round per shrink.
pub fn recover_one_sparse<M: Measure>(
    measure: &mut M,
    active: &[usize],
    shrink_c: f64,
    seeds: Seeds,
) -> Result<usize> {
    let mut machine = [OneSparseRecovery::new(
        measure.dimension(),
        active.to_vec(),
        shrink_c,
        seeds,
    )];
    run_lockstep(measure, &mut machine)?;
    let [machine] = machine;
    machine.into_outcome().unwrap_or(Err(Error::EmptySelection))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{MeasurementOracle, RoundRecord};
    use crate::signal::Signal;

    fn spike(n: usize, at: usize, value: f64) -> MeasurementOracle {
        let mut v = vec![0.0; n];
        v[at] = value;
        MeasurementOracle::new(Signal::new(v).unwrap())
    }

    #[test]
    fn schedule_identities() {
        for log_n in 1..=30u32 {
            let n = 1usize << log_n;
            let s = OneSparseSchedule::for_dimension(n);
            assert!(s.delta_sum() < 0.5);
            assert!(
                s.final_log2_noise_factor() >= log_n as f64,
                "B_r < n for n=2^{log_n}"
            );
            assert!(s.len() <= OneSparseSchedule::iteration_bound(n));
            if let Some(last) = s.steps().last() {
                assert!(
                    last.log2_noise_factor < log_n as f64,
                    "schedule not minimal"
                );
            }
        }
        // B_0..: 2, 2.83, 4.76, 10.4, 33.5, 194, 2705, 1.4e5
        assert_eq!(OneSparseSchedule::for_dimension(4096).len(), 7);
        assert_eq!(OneSparseSchedule::for_dimension(2).len(), 0);
    }

    #[test]
    fn first_shrink_uses_sixty_four_buckets() {
        let s = OneSparseSchedule::for_dimension(1 << 20);
        assert_eq!(s.params(0, 1.0).buckets, 64);
        assert_eq!(s.params(1, 1.0).buckets, 256);
        assert!(s.params(s.len() - 1, 1.0).buckets <= MAX_BUCKETS);
    }

    #[test]
    fn locate_exact_spike() {
        // position 7 of 16 carries the spike, so b/a - 16 = 7 exactly
        let mut o = spike(16, 6, 5.0);
        let active: Vec<usize> = (0..16).collect();
        assert_eq!(locate_pair(&mut o, &active, 3).unwrap(), 6);
        assert_eq!((o.measurements_used(), o.rounds_used()), (2, 1));
    }

    #[test]
    fn locate_zero_signal_is_no_signal() {
        let mut o = MeasurementOracle::new(Signal::zeros(8).unwrap());
        let active: Vec<usize> = (0..8).collect();
        assert_eq!(locate_pair(&mut o, &active, 1), Err(Error::NoSignal));
    }

    #[test]
    fn shrink_keeps_exact_spike() {
        for seed in 0..50 {
            let mut o = spike(300, 123, -2.5);
            let active: Vec<usize> = (0..300).collect();
            let params = ShrinkParams::with_buckets(2 + seed % 7).unwrap();
            let s = shrink(&mut o, &active, params, Seeds::new(seed)).unwrap();
            assert!(s.contains(&123));
            assert_eq!((o.measurements_used(), o.rounds_used()), (2, 1));
        }
    }

    #[test]
    fn recovers_exact_spike_within_schedule_budget() {
        let n = 1024;
        let bound = 2 * (OneSparseSchedule::iteration_bound(n) as u64);
        for seed in 0..200 {
            let mut o = spike(n, 3, 1.0);
            let active: Vec<usize> = (0..n).collect();
            assert_eq!(
                recover_one_sparse(&mut o, &active, 1.0, Seeds::new(seed)).unwrap(),
                3
            );
            assert!(o.measurements_used() <= bound);
        }
    }

    #[test]
    fn noiseless_recovery_is_deterministic_for_every_seed() {
        for seed in 0..300u64 {
            let n = 5000;
            let at = (seed as usize * 7919) % n;
            let mut o = spike(n, at, if seed % 2 == 0 { 3.0 } else { -0.01 });
            let active: Vec<usize> = (0..n).collect();
            assert_eq!(
                recover_one_sparse(&mut o, &active, 1.0, Seeds::new(seed)),
                Ok(at)
            );
        }
    }

    #[test]
    fn queries_stay_inside_the_active_set() {
        let n = 2000;
        let active: Vec<usize> = (0..n).filter(|i| i % 3 == 1).collect();
        let mut v = vec![0.5; n];
        v[601] = 1e6;
        let mut o = MeasurementOracle::recording(Signal::new(v).unwrap());
        let got = recover_one_sparse(&mut o, &active, 1.0, Seeds::new(9)).unwrap();
        assert_eq!(got, 601);
        for round in o.recorded_rounds() {
            let RoundRecord::Queries(qs) = round else {
                panic!("unexpected direct observation")
            };
            assert!(qs.len() <= 2);
            for q in qs {
                assert!(q.terms().iter().all(|(i, c)| i % 3 == 1 || *c == 0.0));
            }
        }
    }

    #[test]
    fn degenerate_sets() {
        let mut o = spike(10, 4, 2.0);
        assert_eq!(recover_one_sparse(&mut o, &[4], 1.0, Seeds::new(0)), Ok(4));
        assert_eq!(o.measurements_used(), 0);
        assert_eq!(
            recover_one_sparse(&mut o, &[9, 4], 1.0, Seeds::new(0)),
            Ok(4)
        );
        assert_eq!((o.measurements_used(), o.rounds_used()), (2, 1));
        assert_eq!(
            recover_one_sparse(&mut o, &[1, 2], 1.0, Seeds::new(0)),
            Err(Error::NoSignal)
        );
        assert_eq!(
            recover_one_sparse(&mut o, &[], 1.0, Seeds::new(0)),
            Err(Error::EmptySelection)
        );
    }

    #[test]
    fn zero_signal_fails_cleanly() {
        let mut o = MeasurementOracle::new(Signal::zeros(100).unwrap());
        let active: Vec<usize> = (0..100).collect();
        assert_eq!(
            recover_one_sparse(&mut o, &active, 1.0, Seeds::new(1)),
            Err(Error::NoSignal)
        );
    }

    #[test]
    fn lockstep_shares_rounds() {
        let n = 4096;
        let mut v = vec![0.0; n];
        v[10] = 1.0;
        v[3000] = -4.0;
        let mut o = MeasurementOracle::new(Signal::new(v).unwrap());
        let mut machines = vec![
            OneSparseRecovery::new(n, (0..2048).collect(), 1.0, Seeds::new(1)),
            OneSparseRecovery::new(n, (2048..n).collect(), 1.0, Seeds::new(2)),
        ];
        let rounds = run_lockstep(&mut o, &mut machines).unwrap();
        assert_eq!(machines[0].outcome(), Some(&Ok(10)));
        assert_eq!(machines[1].outcome(), Some(&Ok(3000)));
        assert_eq!(o.rounds_used() as usize, rounds);
        let max_steps = machines.iter().map(|m| m.steps_taken()).max().unwrap();
        assert!(rounds <= max_steps + 1);
    }
}
