//! The hidden signal and the ground-truth evaluators (top-k support, heavy
//! hitters, tail error) used to judge recovery.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// A finite real vector of dimension `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
}

/// Which norm an evaluator reports, as the p-th power (`|.|` or `|.|^2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn from_p(p: u32) -> Result<Self> {
        match p {
            1 => Ok(Norm::L1),
            2 => Ok(Norm::L2),
            _ => Err(Error::invalid(format!("p must be 1 or 2, got {p}"))),
        }
    }

    #[inline]
    pub fn power(self, v: f64) -> f64 {
        match self {
            Norm::L1 => v.abs(),
            Norm::L2 => v * v,
        }
    }
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Signal { values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Signal::new(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a signal has at least one coordinate.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn top_k_support(&self, k: usize) -> BTreeSet<usize> {
        top_k_support(&self.values, k)
    }

    pub fn heavy_hitters(&self, k: usize, eps: f64) -> BTreeSet<usize> {
        heavy_hitters(&self.values, k, eps)
    }

    pub fn tail_error(&self, k: usize, norm: Norm) -> f64 {
        tail_error(&self.values, k, norm)
    }

    /// Reads one float per line; blank lines and `#` comments are skipped.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let v: f64 = trimmed.parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("{e}"),
            })?;
            values.push(v);
        }
        Signal::new(values)
    }

    /// Writes one float per line using the shortest round-tripping form.
    pub fn write_text<W: Write>(&self, mut writer: W) -> Result<()> {
        for v in &self.values {
            writeln!(writer, "{v:?}")?;
        }
        Ok(())
    }
}

/// Order by magnitude descending, then index ascending.
#[inline]
fn rank_order(x: &[f64], a: usize, b: usize) -> Ordering {
    x[b].abs()
        .partial_cmp(&x[a].abs())
        .unwrap_or(Ordering::Equal)
        .then(a.cmp(&b))
}

/// Indices of the `min(k, n)` largest-magnitude entries; ties go to the
/// lowest index.
pub fn top_k_support(x: &[f64], k: usize) -> BTreeSet<usize> {
    top_k_indices(x, k).into_iter().collect()
}

/// Same selection as [`top_k_support`], returned in rank order.
pub fn top_k_indices(x: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(x.len());
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..x.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank_order(x, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable_by(|&a, &b| rank_order(x, a, b));
    idx
}

/// `{ j in H_k(x) : x_j^2 >= eps * ||x off H_k(x)||_2^2 }`.
pub fn heavy_hitters(x: &[f64], k: usize, eps: f64) -> BTreeSet<usize> {
    let top = top_k_support(x, k);
    let tail: f64 = x
        .iter()
        .enumerate()
        .filter(|(i, _)| !top.contains(i))
        .map(|(_, v)| v * v)
        .sum();
    top.into_iter()
        .filter(|&j| x[j] * x[j] >= eps * tail)
        .collect()
}

/// `||x off H_k(x)||_p^p`; for `Norm::L2` this is the squared tail error.
pub fn tail_error(x: &[f64], k: usize, norm: Norm) -> f64 {
    let top = top_k_support(x, k);
    x.iter()
        .enumerate()
        .filter(|(i, _)| !top.contains(i))
        .map(|(_, &v)| norm.power(v))
        .sum()
}

/// `||x - x_hat||_2` where `x_hat` is given sparsely.
pub fn l2_distance_sparse(x: &[f64], estimate: &std::collections::BTreeMap<usize, f64>) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, &v)| match estimate.get(&i) {
            Some(&e) => (v - e) * (v - e),
            None => v * v,
        })
        .sum::<f64>()
        .sqrt()
}
