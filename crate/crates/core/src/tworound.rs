//! Two-round sparse recovery.
//!
//! Coordinates are hashed with random signs into `N = poly(k/eps)` buckets,
//! giving `y_i = sum_{h(j) = i} sigma(j) x_j`. Round one runs CountSketch on
//! `y` to find the heavy buckets `S`; round two runs a small CountSketch
//! inside each heavy bucket to name its dominant coordinate `HH(j)`, which
//! receives the value `sigma(HH(j)) * y_hat_j`.

use std::collections::{BTreeMap, BTreeSet};

use crate::constants::Constants;
use crate::countsketch::CountSketchScheme;
use crate::error::{Error, Result};
use crate::hashing::{reduction_independence, KWiseHash, SignHash};
use crate::oracle::{LinearQuery, Measure, Metering, QueryBatch, RecoveryResult};
use crate::seed::{tag, Seeds};

/// The map `x -> y` together with the bucket preimages.
#[derive(Debug, Clone)]
pub struct HashReduction {
    hash: KWiseHash,
    sign: SignHash,
    reduced: usize,
    /// CSR layout: preimage of bucket `i` is `members[offsets[i]..offsets[i+1]]`.
    offsets: Vec<usize>,
    members: Vec<usize>,
    signs: Vec<f64>,
}

impl HashReduction {
    /// Draws `h: [n] -> [N]` and `sigma: [n] -> {-1, +1}`, both `t`-wise
    /// independent.
    pub fn new(n: usize, reduced: usize, t: usize, seeds: Seeds) -> Result<Self> {
        if n == 0 || reduced == 0 {
            return Err(Error::invalid("reduction needs n >= 1 and N >= 1"));
        }
        let hash = KWiseHash::new(
            t,
            n as u64,
            reduced as u64,
            seeds.child(tag::REDUCE_H).seed(),
        )?;
        let sign = SignHash::new(t, n as u64, seeds.child(tag::REDUCE_SIGMA).seed())?;
        let buckets: Vec<usize> = (0..n).map(|j| hash.at(j) as usize).collect();
        let signs: Vec<f64> = (0..n).map(|j| sign.at(j)).collect();
        let mut offsets = vec![0usize; reduced + 1];
        for &b in &buckets {
            offsets[b + 1] += 1;
        }
        for i in 0..reduced {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut members = vec![0usize; n];
        for (j, &b) in buckets.iter().enumerate() {
            members[fill[b]] = j;
            fill[b] += 1;
        }
        Ok(HashReduction {
            hash,
            sign,
            reduced,
            offsets,
            members,
            signs,
        })
    }

    pub fn reduced_dimension(&self) -> usize {
        self.reduced
    }

    pub fn dimension(&self) -> usize {
        self.members.len()
    }

    pub fn bucket_of(&self, j: usize) -> usize {
        self.hash.at(j) as usize
    }

    pub fn sign_of(&self, j: usize) -> f64 {
        self.signs[j]
    }

    pub fn hash(&self) -> &KWiseHash {
        &self.hash
    }

    pub fn sign_hash(&self) -> &SignHash {
        &self.sign
    }

    pub fn bucket(&self, i: usize) -> BucketView<'_> {
        BucketView {
            index: i,
            preimage: &self.members[self.offsets[i]..self.offsets[i + 1]],
        }
    }

    pub fn buckets(&self) -> impl Iterator<Item = BucketView<'_>> {
        (0..self.reduced).map(move |i| self.bucket(i))
    }

    /// `y` computed directly from `x`; for tests and the harness.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.reduced];
        for (j, &v) in x.iter().enumerate() {
            y[self.bucket_of(j)] += self.signs[j] * v;
        }
        y
    }
}

/// Bucket `j` of a reduction and its preimage `h^{-1}(j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketView<'a> {
    pub index: usize,
    pub preimage: &'a [usize],
}

/// Pulls a query on `y` back to `x`: the coefficient on `x_j` is
/// `sigma(j) * c_{h(j)}`.
pub fn reduce_queries(red: &HashReduction, query: &LinearQuery) -> Result<LinearQuery> {
    if let Some(max) = query.max_index() {
        if max >= red.reduced {
            return Err(Error::IndexOutOfRange {
                index: max,
                dimension: red.reduced,
            });
        }
    }
    let mut terms = Vec::new();
    for &(i, c) in query.terms() {
        if c == 0.0 {
            continue;
        }
        for &j in red.bucket(i).preimage {
            terms.push((j, red.signs[j] * c));
        }
    }
    Ok(LinearQuery::from_distinct(terms))
}

/// A view of an oracle as an oracle on `y`. Every round on the view is one
/// round on the underlying oracle.
pub struct ReducedOracle<'a, M> {
    inner: &'a mut M,
    reduction: &'a HashReduction,
}

impl<'a, M: Measure> ReducedOracle<'a, M> {
    pub fn new(inner: &'a mut M, reduction: &'a HashReduction) -> Self {
        ReducedOracle { inner, reduction }
    }
}

impl<M: Measure> Measure for ReducedOracle<'_, M> {
    fn dimension(&self) -> usize {
        self.reduction.reduced
    }

    fn measure_round<I>(&mut self, chunks: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = QueryBatch>,
    {
        // Validate on y first; pullbacks are built lazily so only one chunk
        // over x is alive at a time.
        let chunks: Vec<QueryBatch> = chunks.into_iter().collect();
        let reduced = self.reduction.reduced;
        for q in chunks.iter().flat_map(|c| c.queries()) {
            q.check_range(reduced)?;
        }
        let red = self.reduction;
        self.inner
            .measure_round(chunks.into_iter().map(move |chunk| {
                let qs = chunk
                    .queries()
                    .iter()
                    .map(|q| reduce_queries(red, q).expect("validated above"))
                    .collect();
                QueryBatch::new(qs).expect("chunks are nonempty")
            }))
    }

    /// Direct observation of `y` is not a linear measurement of single
    /// coordinates of `x`; it is served as one round of singleton queries.
    fn observe_direct(&mut self, indices: &BTreeSet<usize>) -> Result<BTreeMap<usize, f64>> {
        if indices.is_empty() {
            return Ok(BTreeMap::new());
        }
        let qs: Vec<LinearQuery> = indices
            .iter()
            .map(|&i| LinearQuery::singleton(i, 1.0))
            .collect();
        let ans = self.measure_round(std::iter::once(QueryBatch::new(qs)?))?;
        Ok(indices.iter().copied().zip(ans).collect())
    }

    fn metering(&self) -> Metering {
        self.inner.metering()
    }
}

/// `N = next_pow2(ceil((c_N k / eps)^4))`, at least 2.
pub fn reduced_dimension(k: usize, eps: f64, constants: &Constants) -> usize {
    let target = (constants.c_n * k as f64 / eps).powi(4).ceil().max(2.0);
    (target as usize).next_power_of_two()
}

/// Second-round CountSketch for one bucket: `s_out = 1`, width
/// `ceil(c_w_id)`, depth `ceil(c_d_id ln(n / fail))` for ambient dimension `n`.
pub fn bucket_scheme(
    n: usize,
    fail: f64,
    constants: &Constants,
    seeds: Seeds,
) -> Result<CountSketchScheme> {
    let depth = ((constants.c_d_id * (n as f64 / fail).ln()).ceil() as usize).max(1);
    let width = (constants.c_w_id.ceil() as usize).max(1);
    CountSketchScheme::new(n, width, depth, 1, seeds)
}

/// The coordinate with the largest estimate in a bucket's second-round
/// sketch, given that sketch's answers.
fn bucket_winner(
    scheme: &CountSketchScheme,
    answers: &[f64],
    bucket: &BucketView<'_>,
) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &i in bucket.preimage {
        let v = scheme.estimate(answers, i).abs();
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::OutOfRange {
        position: 0,
        limit: bucket.preimage.len(),
    })
}

/// One bucket's second-round identification in its own round.
pub fn bucket_identify<M: Measure>(
    measure: &mut M,
    bucket: &BucketView<'_>,
    fail: f64,
    constants: &Constants,
    seeds: Seeds,
) -> Result<usize> {
    if bucket.preimage.is_empty() {
        return Err(Error::EmptySelection);
    }
    let scheme = bucket_scheme(measure.dimension(), fail, constants, seeds)?;
    let answers = measure.measure_round(scheme.row_batches(bucket.preimage))?;
    bucket_winner(&scheme, &answers, bucket)
}

/// Measurements spent in each round of a two-round run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoRoundReport {
    pub reduced_dimension: usize,
    pub round_one: Metering,
    pub round_two: Metering,
    /// `|S|`, the heavy buckets passed to round two.
    pub heavy_buckets: usize,
    /// Buckets whose identification came back empty.
    pub unidentified: usize,
}

pub fn two_round_recover<M: Measure>(
    measure: &mut M,
    k: usize,
    eps: f64,
    constants: &Constants,
    seeds: Seeds,
) -> Result<RecoveryResult> {
    two_round_recover_traced(measure, k, eps, constants, seeds).map(|(r, _)| r)
}

pub fn two_round_recover_traced<M: Measure>(
    measure: &mut M,
    k: usize,
    eps: f64,
    constants: &Constants,
    seeds: Seeds,
) -> Result<(RecoveryResult, TwoRoundReport)> {
    if k == 0 || !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(
            "two-round recovery needs k >= 1 and eps in (0, 1]",
        ));
    }
    let n = measure.dimension();
    let big_n = reduced_dimension(k, eps, constants);
    let t = if constants.t_reduction == 0 {
        reduction_independence(big_n as u64)
    } else {
        constants.t_reduction
    };
    let reduction = HashReduction::new(n, big_n, t, seeds)?;
    let start = measure.metering();

    let first = CountSketchScheme::with_guarantee(
        big_n,
        k,
        eps / 5.0,
        0.01,
        constants,
        seeds.child(tag::ROUND_ONE),
    )?;
    let y_support: Vec<usize> = (0..big_n).collect();
    let y_hat = first.recover_on(&mut ReducedOracle::new(measure, &reduction), &y_support)?;
    let after_one = measure.metering();

    let fail = 1.0 / (constants.c_fail * k as f64);
    let heavy: Vec<(usize, f64)> = y_hat.into_iter().collect();
    let mut schemes = Vec::with_capacity(heavy.len());
    for &(j, _) in &heavy {
        schemes.push(bucket_scheme(
            n,
            fail,
            constants,
            seeds.child2(tag::ROUND_TWO, j as u64),
        )?);
    }
    let answers = measure.measure_round(
        heavy
            .iter()
            .zip(&schemes)
            .flat_map(|(&(j, _), s)| s.row_batches(reduction.bucket(j).preimage)),
    )?;

    let mut estimate = BTreeMap::new();
    let mut unidentified = 0;
    let mut offset = 0;
    for (&(j, y_j), scheme) in heavy.iter().zip(&schemes) {
        let len = scheme.measurements();
        let bucket = reduction.bucket(j);
        match bucket_winner(scheme, &answers[offset..offset + len], &bucket) {
            Ok(i) => {
                estimate.insert(i, reduction.sign_of(i) * y_j);
            }
            Err(_) => unidentified += 1,
        }
        offset += len;
    }
    let end = measure.metering();
    let report = TwoRoundReport {
        reduced_dimension: big_n,
        round_one: after_one.since(&start),
        round_two: end.since(&after_one),
        heavy_buckets: heavy.len(),
        unidentified,
    };
    Ok((
        RecoveryResult {
            estimate,
            metering: end.since(&start),
        },
        report,
    ))
}

/// Checks the implication: if `|w_1|^p > 0.9 ||w||_p^p` and
/// `||w - w_hat||_p^p <= 2 ||w off its top entry||_p^p`, then
/// `|w_hat_1|^p > (3/5) ||w||_p^p` and every other `|w_hat_j|^p` is below
/// that threshold. `w` must be sorted by decreasing magnitude. Returns
/// `true` when the hypotheses fail.
pub fn check_bittest_property(w: &[f64], w_hat: &[f64], p: u32) -> bool {
    assert_eq!(w.len(), w_hat.len(), "vectors must have equal length");
    if w.is_empty() {
        return true;
    }
    let pow = |v: f64| v.abs().powi(p as i32);
    let total: f64 = w.iter().copied().map(pow).sum();
    let rest: f64 = w[1..].iter().copied().map(pow).sum();
    let diff: f64 = w.iter().zip(w_hat).map(|(a, b)| pow(a - b)).sum();
    if !(pow(w[0]) > 0.9 * total && diff <= 2.0 * rest) {
        return true;
    }
    let threshold = 0.6 * total;
    pow(w_hat[0]) > threshold && w_hat[1..].iter().all(|&v| pow(v) < threshold)
}

/// `(||y off {h(top k of x)}||_1, ||x off top k||_1)`; the first never
/// exceeds the second.
pub fn l1_contraction(red: &HashReduction, x: &[f64], k: usize) -> (f64, f64) {
    let top = crate::signal::top_k_support(x, k);
    let hit: BTreeSet<usize> = top.iter().map(|&j| red.bucket_of(j)).collect();
    let y = red.apply(x);
    let lhs = y
        .iter()
        .enumerate()
        .filter(|(i, _)| !hit.contains(i))
        .map(|(_, v)| v.abs())
        .sum();
    let rhs = x
        .iter()
        .enumerate()
        .filter(|(j, _)| !top.contains(j))
        .map(|(_, v)| v.abs())
        .sum();
    (lhs, rhs)
}
