//! Multi-pass duplicate finding.
//!
//! A stream of `n` items from `{1, ..., n-1}` defines `x_i = count(i) - 1`,
//! whose entries sum to 1, so some `x_i > 0`. Each repetition rescales
//! `z_i = x_i / t_i` with `t_i` uniform in `(0, 1]`, splits the coordinates
//! into `4m` parts and runs adaptive 1-sparse recovery on every part, one
//! pass per shrink. A final pass counts the candidates exactly, so any
//! reported item really is a duplicate.
//!
//! Query coefficients are never stored: every pass recomputes them from the
//! hash seeds and each part's chain of chosen buckets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::hashing::{KWiseHash, UnitUniforms};
use crate::onesparse::{OneSparseSchedule, ShrinkHashes};
use crate::oracle::{Measure, Metering, QueryBatch};
use crate::seed::{tag, Seeds};

/// A replayable stream of `n >= 2` items, each in `[1, n-1]`.
///
/// Internally coordinate `c` stands for item `c + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPassStream {
    items: Vec<usize>,
    metering: Metering,
}

impl MultiPassStream {
    pub fn new(items: Vec<usize>) -> Result<Self> {
        let n = items.len();
        if n < 2 {
            return Err(Error::invalid("a stream needs at least 2 items"));
        }
        if let Some(&bad) = items.iter().find(|&&i| i == 0 || i >= n) {
            return Err(Error::invalid(format!("item {bad} outside [1, {}]", n - 1)));
        }
        Ok(MultiPassStream {
            items,
            metering: Metering::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    /// Always false.
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of distinct possible items, `n - 1`.
    pub fn universe(&self) -> usize {
        self.items.len() - 1
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn passes_used(&self) -> u64 {
        self.metering.rounds
    }

    /// `x` by direct counting, indexed by coordinate (`item - 1`).
    pub fn frequencies(&self) -> Vec<i64> {
        let mut x = vec![-1i64; self.universe()];
        for &i in &self.items {
            x[i - 1] += 1;
        }
        x
    }

    /// One pass: `visit(c, -1)` for every coordinate (the `x = -1` start),
    /// then `visit(item - 1, +1)` for each item in stream order.
    /// `functionals` is the number of linear functionals the pass computes.
    pub fn pass<F: FnMut(usize, f64)>(&mut self, functionals: u64, mut visit: F) {
        for c in 0..self.universe() {
            visit(c, -1.0);
        }
        for &i in &self.items {
            visit(i - 1, 1.0);
        }
        self.metering.rounds += 1;
        self.metering.measurements += functionals;
    }

    /// One pass evaluating every query of `batch`; indices are item labels
    /// in `[1, n-1]`.
    pub fn stream_measure(&mut self, batch: &QueryBatch) -> Result<Vec<f64>> {
        let n = self.items.len();
        for q in batch.queries() {
            if let Some(&(bad, _)) = q.terms().iter().find(|(i, _)| *i == 0 || *i >= n) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    dimension: n,
                });
            }
        }
        let mut by_item: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        for (qi, q) in batch.queries().iter().enumerate() {
            for &(i, c) in q.terms() {
                by_item.entry(i - 1).or_default().push((qi, c));
            }
        }
        let mut acc = vec![0.0; batch.len()];
        self.pass(batch.len() as u64, |c, w| {
            if let Some(terms) = by_item.get(&c) {
                for &(qi, coef) in terms {
                    acc[qi] += w * coef;
                }
            }
        });
        Ok(acc)
    }

    /// Newline-delimited integers; blank lines and `#` comments are skipped.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut items = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            items.push(t.parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("{e}"),
            })?);
        }
        MultiPassStream::new(items)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for i in &self.items {
            writeln!(w, "{i}")?;
        }
        Ok(())
    }
}

/// The stream as an oracle on `x` over coordinates `0..n-1`; each round is
/// one pass.
impl Measure for MultiPassStream {
    fn dimension(&self) -> usize {
        self.universe()
    }

    fn measure_round<I>(&mut self, chunks: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = QueryBatch>,
    {
        let d = self.universe();
        let queries: Vec<_> = chunks
            .into_iter()
            .flat_map(QueryBatch::into_queries)
            .collect();
        if queries.is_empty() {
            return Ok(Vec::new());
        }
        for q in &queries {
            q.check_range(d)?;
        }
        let shifted = queries
            .iter()
            .map(|q| {
                crate::oracle::LinearQuery::from_distinct(
                    q.terms().iter().map(|&(i, c)| (i + 1, c)).collect(),
                )
            })
            .collect();
        self.stream_measure(&QueryBatch::new(shifted)?)
    }

    fn observe_direct(&mut self, indices: &BTreeSet<usize>) -> Result<BTreeMap<usize, f64>> {
        let d = self.universe();
        if let Some(&index) = indices.iter().find(|&&i| i >= d) {
            return Err(Error::IndexOutOfRange {
                index,
                dimension: d,
            });
        }
        if indices.is_empty() {
            return Ok(BTreeMap::new());
        }
        let mut counts: BTreeMap<usize, f64> = indices.iter().map(|&i| (i, 0.0)).collect();
        self.pass(indices.len() as u64, |c, w| {
            if let Some(v) = counts.get_mut(&c) {
                *v += w;
            }
        });
        self.metering.direct_observations += indices.len() as u64;
        Ok(counts)
    }

    fn metering(&self) -> Metering {
        self.metering
    }
}

#[derive(Debug, Clone)]
enum PartStatus {
    Live,
    Done(Vec<usize>),
    Failed,
}

/// One part's 1-sparse recovery, held implicitly: the active set is every
/// coordinate of the part whose bucket under each earlier shrink hash matches
/// the recorded choice.
#[derive(Debug, Clone)]
struct Part {
    chain: Vec<(ShrinkHashes, u64)>,
    current: Option<ShrinkHashes>,
    status: PartStatus,
    a: f64,
    b: f64,
    count: usize,
    collected: Vec<usize>,
}

impl Part {
    fn new() -> Self {
        Part {
            chain: Vec::new(),
            current: None,
            status: PartStatus::Live,
            a: 0.0,
            b: 0.0,
            count: 0,
            collected: Vec::new(),
        }
    }

    #[inline]
    fn is_active(&self, c: usize) -> bool {
        self.chain
            .iter()
            .all(|(h, chosen)| h.bucket_of(c) == *chosen)
    }
}

#[derive(Debug, Clone)]
struct Repetition {
    uniforms: UnitUniforms,
    partition: KWiseHash,
    parts: Vec<Part>,
}

/// What a duplicate-finder run did.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplicateRun {
    /// A duplicated item (1-based label), verified by exact counting.
    pub found: Option<usize>,
    pub passes: u64,
    /// Largest per-pass count of linear accumulators plus stored candidates.
    pub max_state_words: usize,
    /// Largest per-pass total including set-size counters and the recorded
    /// bucket chains (two words per shrink: hash seed and chosen bucket).
    pub max_total_words: usize,
    pub repetitions: usize,
    pub parts_per_repetition: usize,
    /// Distinct candidates sent to verification.
    pub candidates: usize,
}

/// `(passes, max_state_words)`.
pub fn meter_passes(run: &DuplicateRun) -> (u64, usize) {
    (run.passes, run.max_state_words)
}

/// Repetitions used for failure probability `delta`:
/// `ceil(dup_reps * max(1, log2(1 / delta)))`.
pub fn repetitions(delta: f64, constants: &Constants) -> usize {
    (constants.dup_reps as f64 * (1.0 / delta).log2().max(1.0)).ceil() as usize
}

/// `m = ceil(log2(1 / dup_eps))`; the partition has `4m` parts.
pub fn part_multiplier(constants: &Constants) -> usize {
    ((1.0 / constants.dup_eps).log2().ceil() as usize).max(1)
}

/// Finds an item occurring at least twice, or `None`.
pub fn find_duplicate(
    stream: &mut MultiPassStream,
    delta: f64,
    constants: &Constants,
    seeds: Seeds,
) -> Result<DuplicateRun> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    let d = stream.universe();
    let start = stream.passes_used();
    let parts_per_rep = 4 * part_multiplier(constants);
    let cap = constants.dup_candidates;
    let schedule = OneSparseSchedule::for_dimension(d);
    let reps_n = repetitions(delta, constants);

    let mut reps = (0..reps_n as u64)
        .map(|r| {
            let rs = seeds.child2(tag::DUP_REPETITION, r);
            Ok(Repetition {
                uniforms: UnitUniforms::new(
                    constants.t_uniform,
                    d as u64,
                    rs.child(tag::DUP_UNIFORM).seed(),
                )?,
                partition: KWiseHash::new(
                    2,
                    d as u64,
                    parts_per_rep as u64,
                    rs.child(tag::DUP_PARTITION).seed(),
                )?,
                parts: vec![Part::new(); parts_per_rep],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut max_state = 0usize;
    let mut max_total = 0usize;
    let mut step = 0usize;
    loop {
        let mut live = 0usize;
        for (r, rep) in reps.iter_mut().enumerate() {
            for (p, part) in rep.parts.iter_mut().enumerate() {
                if !matches!(part.status, PartStatus::Live) {
                    continue;
                }
                if step >= schedule.len() {
                    part.status = PartStatus::Failed;
                    continue;
                }
                let ps = seeds
                    .child2(tag::DUP_PART, (r * parts_per_rep + p) as u64)
                    .child(step as u64);
                part.current = Some(ShrinkHashes::draw(
                    d,
                    schedule.params(step, constants.shrink_c).buckets,
                    ps,
                )?);
                part.a = 0.0;
                part.b = 0.0;
                part.count = 0;
                part.collected.clear();
                live += 1;
            }
        }
        if live == 0 {
            break;
        }

        stream.pass(2 * live as u64, |c, w| {
            for rep in reps.iter_mut() {
                let part = &mut rep.parts[rep.partition.at(c) as usize];
                if !matches!(part.status, PartStatus::Live) || !part.is_active(c) {
                    continue;
                }
                let z = w / rep.uniforms.at(c);
                let (_, ca, cb) = part
                    .current
                    .as_ref()
                    .expect("live parts have a current hash")
                    .coefficients(c);
                part.a += z * ca;
                part.b += z * cb;
                if w < 0.0 {
                    part.count += 1;
                    if part.collected.len() < cap {
                        part.collected.push(c);
                    }
                }
            }
        });

        let mut stored = 0usize;
        let mut counters = 0usize;
        let mut chains = 0usize;
        for rep in reps.iter_mut() {
            for part in rep.parts.iter_mut() {
                chains += 2 * part.chain.len();
                match part.status {
                    PartStatus::Live => {
                        counters += 1;
                        stored += part.collected.len();
                    }
                    PartStatus::Done(ref c) => {
                        stored += c.len();
                        continue;
                    }
                    PartStatus::Failed => continue,
                }
                let current = part.current.take().expect("live parts have a current hash");
                if part.count == 0 {
                    part.status = PartStatus::Failed;
                } else if part.count <= cap {
                    part.status = PartStatus::Done(std::mem::take(&mut part.collected));
                } else {
                    match current.decode(part.a, part.b, part.count) {
                        Ok(chosen) => part.chain.push((current, chosen)),
                        Err(_) => part.status = PartStatus::Failed,
                    }
                }
            }
        }
        max_state = max_state.max(2 * live + stored);
        max_total = max_total.max(2 * live + stored + counters + chains);
        step += 1;
    }

    let candidates: BTreeSet<usize> = reps
        .iter()
        .flat_map(|rep| rep.parts.iter())
        .filter_map(|p| match &p.status {
            PartStatus::Done(c) => Some(c.iter().copied()),
            _ => None,
        })
        .flatten()
        .collect();
    let counts = stream.observe_direct(&candidates)?;
    max_state = max_state.max(candidates.len());
    max_total = max_total.max(candidates.len());
    let found = counts.iter().find(|(_, &v)| v > 0.0).map(|(&c, _)| c + 1);

    Ok(DuplicateRun {
        found,
        passes: stream.passes_used() - start,
        max_state_words: max_state,
        max_total_words: max_total,
        repetitions: reps_n,
        parts_per_repetition: parts_per_rep,
        candidates: candidates.len(),
    })
}
