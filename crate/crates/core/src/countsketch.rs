//! Nonadaptive CountSketch: `depth` rows, each hashing coordinates into
//! `width` signed buckets. A coordinate's estimate is the median over rows
//! of its signed bucket value.

use std::collections::BTreeMap;

use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::hashing::{KWiseHash, SignHash};
use crate::oracle::{LinearQuery, Measure, QueryBatch, RecoveryResult};
use crate::seed::{tag, Seeds};

#[derive(Debug, Clone)]
struct Row {
    bucket: KWiseHash,
    sign: SignHash,
}

/// A fixed CountSketch measurement design over coordinates `0..dimension`.
#[derive(Debug, Clone)]
pub struct CountSketchScheme {
    width: usize,
    rows: Vec<Row>,
    dimension: usize,
    s_out: usize,
}

impl CountSketchScheme {
    pub fn new(
        dimension: usize,
        width: usize,
        depth: usize,
        s_out: usize,
        seeds: Seeds,
    ) -> Result<Self> {
        if dimension == 0 || width == 0 || depth == 0 {
            return Err(Error::invalid(
                "CountSketch needs dimension, width and depth >= 1",
            ));
        }
        let rows = (0..depth as u64)
            .map(|r| {
                Ok(Row {
                    bucket: KWiseHash::new(
                        2,
                        dimension as u64,
                        width as u64,
                        seeds.child2(tag::SKETCH_ROW, r).seed(),
                    )?,
                    sign: SignHash::new(
                        2,
                        dimension as u64,
                        seeds.child2(tag::SKETCH_SIGN, r).seed(),
                    )?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CountSketchScheme {
            width,
            rows,
            dimension,
            s_out,
        })
    }

    /// Width `ceil(c_w k / eps)`, depth `ceil(c_d ln(n / delta))`, output
    /// sparsity `2k`.
    pub fn with_guarantee(
        n: usize,
        k: usize,
        eps: f64,
        delta: f64,
        constants: &Constants,
        seeds: Seeds,
    ) -> Result<Self> {
        if k == 0 || eps.is_nan() || eps <= 0.0 || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(
                "CountSketch needs k >= 1, eps > 0, delta in (0,1)",
            ));
        }
        let (width, depth) = sketch_shape(n, k, eps, delta, constants);
        CountSketchScheme::new(n, width, depth, 2 * k, seeds)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    pub fn s_out(&self) -> usize {
        self.s_out
    }

    pub fn measurements(&self) -> usize {
        self.width * self.rows.len()
    }

    /// One [`QueryBatch`] per row, restricted to `support` (coefficients of
    /// every other coordinate are zero). Buckets left empty still count as
    /// measurements.
    pub fn row_batches<'a>(
        &'a self,
        support: &'a [usize],
    ) -> impl Iterator<Item = QueryBatch> + 'a {
        self.rows.iter().map(move |row| {
            let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.width];
            for &i in support {
                buckets[row.bucket.at(i) as usize].push((i, row.sign.at(i)));
            }
            let queries = buckets
                .into_iter()
                .map(LinearQuery::from_distinct)
                .collect();
            QueryBatch::new(queries).expect("width >= 1")
        })
    }

    /// Median-of-rows estimate of coordinate `i` from the row answers.
    pub fn estimate(&self, answers: &[f64], i: usize) -> f64 {
        let mut vals: Vec<f64> = self
            .rows
            .iter()
            .enumerate()
            .map(|(r, row)| row.sign.at(i) * answers[r * self.width + row.bucket.at(i) as usize])
            .collect();
        median(&mut vals)
    }

    /// Measures `support` in one round and returns the `s_out` largest
    /// nonzero estimates.
    pub fn recover_on<M: Measure>(
        &self,
        measure: &mut M,
        support: &[usize],
    ) -> Result<BTreeMap<usize, f64>> {
        if let Some(&bad) = support.iter().find(|&&i| i >= self.dimension) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                dimension: self.dimension,
            });
        }
        let answers = measure.measure_round(self.row_batches(support))?;
        let mut est: Vec<(usize, f64)> = support
            .iter()
            .map(|&i| (i, self.estimate(&answers, i)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        let keep = self.s_out.min(est.len());
        if keep == 0 {
            return Ok(BTreeMap::new());
        }
        let order = |a: &(usize, f64), b: &(usize, f64)| {
            b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0))
        };
        if keep < est.len() {
            est.select_nth_unstable_by(keep - 1, order);
            est.truncate(keep);
        }
        Ok(est.into_iter().collect())
    }
}

/// `(ceil(c_w k / eps), ceil(c_d ln(n / delta)))`.
pub fn sketch_shape(
    n: usize,
    k: usize,
    eps: f64,
    delta: f64,
    constants: &Constants,
) -> (usize, usize) {
    let width = ((constants.c_w * k as f64 / eps).ceil() as usize).max(1);
    let depth = ((constants.c_d * (n as f64 / delta).ln()).ceil() as usize).max(1);
    (width, depth)
}

pub(crate) fn median(vals: &mut [f64]) -> f64 {
    vals.sort_by(f64::total_cmp);
    let m = vals.len();
    if m % 2 == 1 {
        vals[m / 2]
    } else {
        0.5 * (vals[m / 2 - 1] + vals[m / 2])
    }
}

/// CountSketch k-sparse recovery over all coordinates, one round.
pub fn countsketch_recover<M: Measure>(
    measure: &mut M,
    k: usize,
    eps: f64,
    delta: f64,
    constants: &Constants,
    seeds: Seeds,
) -> Result<RecoveryResult> {
    let n = measure.dimension();
    let scheme = CountSketchScheme::with_guarantee(n, k, eps, delta, constants, seeds)?;
    let start = measure.metering();
    let support: Vec<usize> = (0..n).collect();
    let estimate = scheme.recover_on(measure, &support)?;
    Ok(RecoveryResult {
        estimate,
        metering: measure.metering().since(&start),
    })
}
