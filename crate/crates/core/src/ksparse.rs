//! Adaptive k-sparse recovery by subsampling and recursion.
//!
//! Each level subsamples the residual coordinates many times at rate about
//! `eps_i / k_i`, runs adaptive 1-sparse recovery on every sample in
//! lockstep, directly observes the candidates and keeps the `k_i` largest.
//! The sparsity left for the next level shrinks as a power tower, so only a
//! handful of levels are ever needed.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::onesparse::{recover_one_sparse, run_lockstep, OneSparseRecovery};
use crate::oracle::{Measure, RecoveryResult};
use crate::seed::{tag, Seeds};

/// Parameters of one recursion level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub eps: f64,
    pub delta: f64,
    /// `log2 f_i`; `f_3` is already `2^-1024`, below the smallest normal double.
    pub log2_f: f64,
    /// `log2 k_i`.
    pub log2_k: f64,
}

impl Level {
    pub fn f(&self) -> f64 {
        self.log2_f.exp2()
    }

    pub fn k(&self) -> f64 {
        self.log2_k.exp2()
    }

    /// Number of coordinates kept at this level, `floor(k_i)`.
    pub fn keep(&self) -> usize {
        self.k().floor() as usize
    }
}

/// `eps_i = eps / (e 2^i)`, `delta_i = delta / 2^{i+1}`, `f_0 = 1/32`,
/// `f_{i+1} = 2^{-1 / (4^{i+1} f_i)}`, `k_i = k prod_{j<i} f_j`.
///
/// The schedule runs to the first `r` with `f_{r-1} < 1/k`; execution stops
/// earlier, as soon as `k_i < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSchedule {
    levels: Vec<Level>,
    k: usize,
    eps: f64,
    delta: f64,
}

impl RoundSchedule {
    pub fn new(k: usize, eps: f64, delta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(eps > 0.0 && eps <= 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!(
                "need eps in (0,1] and delta in (0,1), got {eps}, {delta}"
            )));
        }
        let log2_k_total = (k as f64).log2();
        let mut levels = Vec::new();
        let mut log2_f = -5.0f64;
        let mut log2_k = log2_k_total;
        let mut i = 0i32;
        loop {
            levels.push(Level {
                eps: eps / (std::f64::consts::E * 2f64.powi(i)),
                delta: delta / 2f64.powi(i + 1),
                log2_f,
                log2_k,
            });
            if log2_f < -log2_k_total {
                break;
            }
            log2_k += log2_f;
            i += 1;
            // 1 / (4^i f_{i-1}) = 2^{-2i - log2 f_{i-1}}
            log2_f = -(-2.0 * i as f64 - log2_f).exp2();
        }
        Ok(RoundSchedule {
            levels,
            k,
            eps,
            delta,
        })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// `r`.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Levels that actually run (`k_i >= 1`).
    pub fn active_levels(&self) -> impl Iterator<Item = &Level> {
        self.levels.iter().filter(|l| l.log2_k >= 0.0)
    }

    pub fn delta_sum(&self) -> f64 {
        self.levels.iter().map(|l| l.delta).sum()
    }

    pub fn eps_product(&self) -> f64 {
        self.levels.iter().map(|l| 1.0 + l.eps).product()
    }

    /// `sum_i floor(k_i)` over the running levels, the largest possible `|T|`.
    pub fn support_bound(&self) -> usize {
        self.active_levels().map(Level::keep).sum()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Inclusion probability `1 / (c_sub * sparsity)`, capped at 1.
pub fn subsample_rate(sparsity: f64, c_sub: f64) -> f64 {
    (1.0 / (c_sub * sparsity)).min(1.0)
}

/// Keeps each element of `active` independently with probability `rate`.
pub fn subsample<R: Rng>(active: &[usize], rate: f64, rng: &mut R) -> Vec<usize> {
    if rate >= 1.0 {
        return active.to_vec();
    }
    if rate <= 0.0 {
        return Vec::new();
    }
    let gap = Geometric::new(rate).expect("rate lies in (0, 1)");
    let mut out = Vec::with_capacity((active.len() as f64 * rate * 1.5) as usize + 4);
    let mut pos = gap.sample(rng);
    while pos < active.len() as u64 {
        out.push(active[pos as usize]);
        pos = pos.saturating_add(gap.sample(rng) + 1);
    }
    out
}

/// One subsample at rate `1 / (c_sub * sparsity)` followed by adaptive
/// 1-sparse recovery on it. The returned index is not verified.
pub fn sample_heavy<M: Measure>(
    measure: &mut M,
    active: &[usize],
    sparsity: f64,
    constants: &Constants,
    seeds: Seeds,
) -> Result<usize> {
    let sample = subsample(
        active,
        subsample_rate(sparsity, constants.c_sub),
        &mut seeds.child(tag::SUBSAMPLE).rng(),
    );
    if sample.is_empty() {
        return Err(Error::EmptySelection);
    }
    recover_one_sparse(
        measure,
        &sample,
        constants.shrink_c,
        seeds.child(tag::SCHEME),
    )
}

/// Parameters of [`recover_partial`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialParams {
    /// Sparsity `k`; may be fractional inside the recursion.
    pub k: f64,
    pub eps: f64,
    pub f: f64,
    pub delta: f64,
}

impl PartialParams {
    /// `m = ceil(c_m * (k / eps) * ln(1 / (f delta)))`.
    pub fn samples(&self, c_m: f64) -> usize {
        let ln = (1.0 / (self.f * self.delta)).ln().max(1.0);
        ((c_m * self.k / self.eps * ln).ceil() as usize).max(1)
    }

    fn from_level(level: &Level) -> Self {
        PartialParams {
            k: level.k(),
            eps: level.eps,
            f: level.f(),
            delta: level.delta,
        }
    }
}

/// Outcome of one recursion level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PartialRecovery {
    /// Kept coordinates with their directly observed values, largest first.
    pub selected: Vec<(usize, f64)>,
    /// Subsamples run.
    pub samples: usize,
    /// Distinct candidates observed directly.
    pub candidates: usize,
    /// Adaptive rounds spent on 1-sparse recovery (excluding the observation).
    pub search_rounds: usize,
}

impl PartialRecovery {
    pub fn indices(&self) -> BTreeSet<usize> {
        self.selected.iter().map(|&(i, _)| i).collect()
    }
}

/// Runs `m` subsampled 1-sparse recoveries in shared rounds, directly
/// observes the distinct candidates and keeps the `floor(k)` largest nonzero
/// ones.
pub fn recover_partial<M: Measure>(
    measure: &mut M,
    active: &[usize],
    params: PartialParams,
    constants: &Constants,
    seeds: Seeds,
) -> Result<PartialRecovery> {
    if !(params.f > 0.0 && params.f < 1.0)
        || params.eps.is_nan()
        || params.eps <= 0.0
        || !(params.delta > 0.0 && params.delta < 1.0)
    {
        return Err(Error::invalid(
            "recover_partial needs 0 < f < 1, eps > 0, 0 < delta < 1",
        ));
    }
    let keep = params.k.floor() as usize;
    let m = params.samples(constants.c_m);
    let rate = subsample_rate(params.k / params.eps, constants.c_sub);
    let dimension = measure.dimension();
    let mut machines = Vec::with_capacity(m);
    for s in 0..m {
        let sample_seeds = seeds.child2(tag::SUBSAMPLE, s as u64);
        let sample = subsample(active, rate, &mut sample_seeds.rng());
        if !sample.is_empty() {
            machines.push(OneSparseRecovery::new(
                dimension,
                sample,
                constants.shrink_c,
                sample_seeds.child(tag::SCHEME),
            ));
        }
    }
    let search_rounds = run_lockstep(measure, &mut machines)?;
    let found: BTreeSet<usize> = machines
        .into_iter()
        .filter_map(|m| m.into_outcome().and_then(|r| r.ok()))
        .collect();
    let observed = measure.observe_direct(&found)?;
    let mut ranked: Vec<(usize, f64)> = observed.into_iter().filter(|&(_, v)| v != 0.0).collect();
    ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    ranked.truncate(keep);
    Ok(PartialRecovery {
        selected: ranked,
        samples: m,
        candidates: found.len(),
        search_rounds,
    })
}

/// Per-level record of a k-sparse run.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub level: Level,
    pub recovery: PartialRecovery,
}

/// Adaptive k-sparse recovery. The estimate is `x_T` for `T` the union of
/// every level's kept coordinates, with values from direct observation.
pub fn recover_k_sparse<M: Measure>(
    measure: &mut M,
    k: usize,
    eps: f64,
    delta: f64,
    constants: &Constants,
    seeds: Seeds,
) -> Result<RecoveryResult> {
    recover_k_sparse_traced(measure, k, eps, delta, constants, seeds).map(|(r, _)| r)
}

/// [`recover_k_sparse`] that also returns what each level did.
pub fn recover_k_sparse_traced<M: Measure>(
    measure: &mut M,
    k: usize,
    eps: f64,
    delta: f64,
    constants: &Constants,
    seeds: Seeds,
) -> Result<(RecoveryResult, Vec<LevelReport>)> {
    let n = measure.dimension();
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds the dimension {n}")));
    }
    let schedule = RoundSchedule::new(k, eps, delta)?;
    let start = measure.metering();
    let mut estimate = BTreeMap::new();
    let mut active: Vec<usize> = (0..n).collect();
    let mut reports = Vec::new();
    for (i, level) in schedule.active_levels().enumerate() {
        if active.is_empty() {
            break;
        }
        let rec = recover_partial(
            measure,
            &active,
            PartialParams::from_level(level),
            constants,
            seeds.child2(tag::LEVEL, i as u64),
        )?;
        if !rec.selected.is_empty() {
            estimate.extend(rec.selected.iter().copied());
            active.retain(|i| !estimate.contains_key(i));
        }
        reports.push(LevelReport {
            level: *level,
            recovery: rec,
        });
    }
    let metering = measure.metering().since(&start);
    Ok((RecoveryResult { estimate, metering }, reports))
}
