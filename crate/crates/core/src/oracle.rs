//! Linear queries and the metered measurement oracle.
//!
//! Recovery code never sees the signal. It submits [`QueryBatch`]es to
//! something implementing [`Measure`] and receives inner products back; one
//! call to [`Measure::measure_round`] is one adaptive round.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// One row of the measurement matrix, stored sparsely.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearQuery {
    terms: Vec<(usize, f64)>,
}

impl LinearQuery {
    /// Builds a query, rejecting repeated indices and non-finite coefficients.
    pub fn new(terms: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(pos) = terms.iter().position(|(_, c)| !c.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        let mut idx: Vec<usize> = terms.iter().map(|(i, _)| *i).collect();
        idx.sort_unstable();
        if let Some(w) = idx.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateIndex(w[0]));
        }
        Ok(LinearQuery { terms })
    }

    /// For callers that build terms over a set of distinct indices.
    pub(crate) fn from_distinct(terms: Vec<(usize, f64)>) -> Self {
        debug_assert!(LinearQuery::new(terms.clone()).is_ok());
        LinearQuery { terms }
    }

    pub fn singleton(index: usize, coefficient: f64) -> Self {
        LinearQuery {
            terms: vec![(index, coefficient)],
        }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|(i, _)| *i).max()
    }

    /// Inner product with a dense vector. Indices must be in range.
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum()
    }

    pub(crate) fn check_range(&self, dimension: usize) -> Result<()> {
        match self.terms.iter().find(|(i, _)| *i >= dimension) {
            Some(&(index, _)) => Err(Error::IndexOutOfRange { index, dimension }),
            None => Ok(()),
        }
    }
}

/// The queries of one adaptive round (or one chunk of a round).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryBatch {
    queries: Vec<LinearQuery>,
}

impl QueryBatch {
    pub fn new(queries: Vec<LinearQuery>) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::EmptyBatch);
        }
        Ok(QueryBatch { queries })
    }

    pub fn queries(&self) -> &[LinearQuery] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn into_queries(self) -> Vec<LinearQuery> {
        self.queries
    }
}

/// Cost of a recovery episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Metering {
    pub measurements: u64,
    pub rounds: u64,
    pub direct_observations: u64,
}

impl Metering {
    pub fn since(&self, earlier: &Metering) -> Metering {
        Metering {
            measurements: self.measurements - earlier.measurements,
            rounds: self.rounds - earlier.rounds,
            direct_observations: self.direct_observations - earlier.direct_observations,
        }
    }
}

/// Anything that answers rounds of linear queries on a hidden vector.
pub trait Measure {
    fn dimension(&self) -> usize;

    /// Answers one adaptive round supplied as a sequence of chunks, in order.
    /// An empty sequence consumes no round. If any chunk is rejected the
    /// whole round is rejected and no counter moves.
    fn measure_round<I>(&mut self, chunks: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = QueryBatch>;

    /// Exact coordinate values, metered as one round of `|indices|`
    /// measurements. The empty set is free.
    fn observe_direct(&mut self, indices: &BTreeSet<usize>) -> Result<BTreeMap<usize, f64>>;

    fn metering(&self) -> Metering;

    fn measure(&mut self, batch: QueryBatch) -> Result<Vec<f64>> {
        self.measure_round(std::iter::once(batch))
    }
}

/// What the oracle saw in one round, kept only when recording is enabled.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundRecord {
    Queries(Vec<LinearQuery>),
    Direct(Vec<usize>),
}

/// Holds the hidden signal and meters everything asked of it.
///
/// Counters only grow; a fresh oracle is a fresh recovery episode.
#[derive(Debug, Clone)]
pub struct MeasurementOracle {
    signal: Signal,
    metering: Metering,
    log: Option<Vec<RoundRecord>>,
}

impl MeasurementOracle {
    pub fn new(signal: Signal) -> Self {
        MeasurementOracle {
            signal,
            metering: Metering::default(),
            log: None,
        }
    }

    /// Like [`MeasurementOracle::new`] but keeps every round for inspection.
    pub fn recording(signal: Signal) -> Self {
        MeasurementOracle {
            signal,
            metering: Metering::default(),
            log: Some(Vec::new()),
        }
    }

    pub fn dimension(&self) -> usize {
        self.signal.len()
    }

    pub fn measurements_used(&self) -> u64 {
        self.metering.measurements
    }

    pub fn rounds_used(&self) -> u64 {
        self.metering.rounds
    }

    pub fn direct_observations(&self) -> u64 {
        self.metering.direct_observations
    }

    pub fn recorded_rounds(&self) -> &[RoundRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    /// Exact inner products of one batch; one round.
    pub fn measure(&mut self, batch: &QueryBatch) -> Result<Vec<f64>> {
        self.measure_round(std::iter::once(batch.clone()))
    }
}

impl Measure for MeasurementOracle {
    fn dimension(&self) -> usize {
        self.signal.len()
    }

    fn measure_round<I>(&mut self, chunks: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = QueryBatch>,
    {
        let n = self.signal.len();
        let x = self.signal.values();
        let mut answers = Vec::new();
        let mut recorded = self.log.as_ref().map(|_| Vec::new());
        for chunk in chunks {
            for q in chunk.queries() {
                q.check_range(n)?;
            }
            answers.extend(chunk.queries().iter().map(|q| q.dot(x)));
            if let Some(rec) = recorded.as_mut() {
                rec.extend(chunk.into_queries());
            }
        }
        if answers.is_empty() {
            return Ok(answers);
        }
        self.metering.measurements += answers.len() as u64;
        self.metering.rounds += 1;
        if let (Some(log), Some(rec)) = (self.log.as_mut(), recorded) {
            log.push(RoundRecord::Queries(rec));
        }
        Ok(answers)
    }

    fn observe_direct(&mut self, indices: &BTreeSet<usize>) -> Result<BTreeMap<usize, f64>> {
        let n = self.signal.len();
        if let Some(&index) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange {
                index,
                dimension: n,
            });
        }
        if indices.is_empty() {
            return Ok(BTreeMap::new());
        }
        let x = self.signal.values();
        let out: BTreeMap<usize, f64> = indices.iter().map(|&i| (i, x[i])).collect();
        let count = indices.len() as u64;
        self.metering.measurements += count;
        self.metering.direct_observations += count;
        self.metering.rounds += 1;
        if let Some(log) = self.log.as_mut() {
            log.push(RoundRecord::Direct(indices.iter().copied().collect()));
        }
        Ok(out)
    }

    fn metering(&self) -> Metering {
        self.metering
    }
}

/// A sparse estimate with the cost of producing it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecoveryResult {
    pub estimate: BTreeMap<usize, f64>,
    pub metering: Metering,
}

impl RecoveryResult {
    pub fn support(&self) -> BTreeSet<usize> {
        self.estimate.keys().copied().collect()
    }

    /// `||x - estimate||_2` against a ground-truth vector.
    pub fn l2_error(&self, x: &[f64]) -> f64 {
        crate::signal::l2_distance_sparse(x, &self.estimate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(v: &[f64]) -> MeasurementOracle {
        MeasurementOracle::new(Signal::new(v.to_vec()).unwrap())
    }

    fn batch(qs: Vec<LinearQuery>) -> QueryBatch {
        QueryBatch::new(qs).unwrap()
    }

    #[test]
    fn measures_inner_products_and_meters() {
        let mut o = oracle(&[1.0, 2.0, 3.0]);
        let q = LinearQuery::new(vec![(0, 1.0), (2, -1.0)]).unwrap();
        assert_eq!(o.measure(&batch(vec![q])).unwrap(), vec![-2.0]);
        assert_eq!((o.measurements_used(), o.rounds_used()), (1, 1));

        let mut o = oracle(&[1.0, 2.0, 3.0]);
        let singles = (0..3).map(|i| LinearQuery::singleton(i, 1.0)).collect();
        assert_eq!(o.measure(&batch(singles)).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!((o.measurements_used(), o.rounds_used()), (3, 1));
    }

    #[test]
    fn zero_functional_measures_zero() {
        let mut o = oracle(&[4.0, -7.5, 0.25]);
        let q = LinearQuery::new(vec![(0, 0.0), (1, 0.0), (2, 0.0)]).unwrap();
        assert_eq!(o.measure(&batch(vec![q])).unwrap(), vec![0.0]);
    }

    #[test]
    fn out_of_range_rejects_whole_round() {
        let mut o = oracle(&[1.0, 2.0]);
        let good = LinearQuery::singleton(0, 1.0);
        let bad = LinearQuery::singleton(5, 1.0);
        let err = o
            .measure_round(vec![batch(vec![good]), batch(vec![bad])])
            .unwrap_err();
        assert_eq!(
            err,
            Error::IndexOutOfRange {
                index: 5,
                dimension: 2
            }
        );
        assert_eq!(o.metering(), Metering::default());
    }

    #[test]
    fn chunked_round_counts_once() {
        let mut o = oracle(&[1.0, 2.0, 3.0, 4.0]);
        let chunks = (0..4).map(|i| batch(vec![LinearQuery::singleton(i, 2.0)]));
        assert_eq!(o.measure_round(chunks).unwrap(), vec![2.0, 4.0, 6.0, 8.0]);
        assert_eq!(
            o.metering(),
            Metering {
                measurements: 4,
                rounds: 1,
                direct_observations: 0
            }
        );
        assert!(o.measure_round(Vec::new()).unwrap().is_empty());
        assert_eq!(o.rounds_used(), 1);
    }

    #[test]
    fn direct_observation() {
        let mut o = oracle(&[5.0, 0.0, 7.0]);
        let got = o.observe_direct(&BTreeSet::from([0, 2])).unwrap();
        assert_eq!(got, BTreeMap::from([(0, 5.0), (2, 7.0)]));
        assert_eq!(
            o.metering(),
            Metering {
                measurements: 2,
                rounds: 1,
                direct_observations: 2
            }
        );

        assert!(o.observe_direct(&BTreeSet::new()).unwrap().is_empty());
        assert_eq!(o.rounds_used(), 1);

        let mut o = oracle(&[1.0, 2.0]);
        assert!(o.observe_direct(&BTreeSet::from([5])).is_err());
        assert_eq!(o.metering(), Metering::default());
    }

    #[test]
    fn query_validation() {
        assert_eq!(
            LinearQuery::new(vec![(1, 1.0), (1, 2.0)]),
            Err(Error::DuplicateIndex(1))
        );
        assert_eq!(
            LinearQuery::new(vec![(0, f64::NAN)]),
            Err(Error::NonFinite(0))
        );
        assert_eq!(QueryBatch::new(vec![]), Err(Error::EmptyBatch));
    }

    #[test]
    fn recording_keeps_rounds() {
        let mut o = MeasurementOracle::recording(Signal::new(vec![1.0, 1.0]).unwrap());
        o.measure(&batch(vec![LinearQuery::singleton(1, 3.0)]))
            .unwrap();
        o.observe_direct(&BTreeSet::from([0])).unwrap();
        assert_eq!(
            o.recorded_rounds(),
            &[
                RoundRecord::Queries(vec![LinearQuery::singleton(1, 3.0)]),
                RoundRecord::Direct(vec![0])
            ]
        );
    }
}
