//! Tunable constants of the schemes and their `key=value` config format.
//!
//! Defaults come from the calibration sweep in `examples/calibrate.rs`
//! (run at trials-scale 0.6). `c_fail`, `dup_eps` and the hash degrees are
//! fixed rather than swept.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Constants {
    /// Heaviness factor for the two-measurement locator:
    /// `|x_j| >= C * n / sqrt(delta) * ||rest||` suffices.
    pub locate_c: f64,
    /// Heaviness `|x_j| >= C * ||rest||` at which adaptive 1-sparse recovery
    /// succeeds with probability at least 1/2.
    pub heavy_c: f64,
    /// Scale on the shrink bucket count `D = C' * 4 B^2 / delta`.
    pub shrink_c: f64,
    /// Scale on the number of parallel subsamples per recursion level.
    pub c_m: f64,
    /// Subsampling rate is `1 / (c_sub * k')` for sparsity parameter `k'`.
    pub c_sub: f64,
    /// CountSketch width `ceil(c_w * k / eps)`.
    pub c_w: f64,
    /// CountSketch depth `ceil(c_d * ln(n / delta))`.
    pub c_d: f64,
    /// Width of the second-round per-bucket identifier sketch.
    pub c_w_id: f64,
    /// Identifier sketch depth `ceil(c_d_id * ln(n / fail))`.
    pub c_d_id: f64,
    /// Reduced dimension `N = next_pow2((c_N * k / eps)^4)`.
    pub c_n: f64,
    /// Independence of the reduction hashes; 0 selects `ceil(2 log2 N)`.
    pub t_reduction: usize,
    /// Independence of the duplicate finder's uniform scalings.
    pub t_uniform: usize,
    /// Per-bucket failure probability in the second round is `1 / (c_fail * k)`.
    pub c_fail: f64,
    /// Duplicate finder's small constant; `m = ceil(log2(1 / dup_eps))`.
    pub dup_eps: f64,
    /// Independent repetitions of the duplicate finder's inner procedure.
    pub dup_reps: usize,
    /// Largest candidate set a duplicate-finder part may hand to verification.
    pub dup_candidates: usize,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            locate_c: 1.0,
            heavy_c: 16.0,
            shrink_c: 0.125,
            c_m: 1.0,
            c_sub: 0.5,
            c_w: 6.0,
            c_d: 1.0,
            c_w_id: 4.0,
            c_d_id: 3.0,
            c_n: 0.5,
            t_reduction: 0,
            t_uniform: 4,
            c_fail: 4.0,
            dup_eps: 1.0 / 64.0,
            dup_reps: 1,
            dup_candidates: 4,
        }
    }
}

const KEYS: &[&str] = &[
    "C",
    "C_heavy",
    "C_prime",
    "c_m",
    "c_sub",
    "c_w",
    "c_d",
    "c_w_id",
    "c_d_id",
    "c_N",
    "t_reduction",
    "t_uniform",
    "c_fail",
    "dup_eps",
    "dup_reps",
    "dup_candidates",
];

impl Constants {
    /// Parses `key=value` lines over the defaults. `#` starts a comment.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut c = Constants::default();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            c.set(key.trim(), value.trim())
                .map_err(|e| err(e.to_string()))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let real = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("{key}: {e}")))
        };
        let int = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|e| Error::invalid(format!("{key}: {e}")))
        };
        match key {
            "C" => self.locate_c = real()?,
            "C_heavy" => self.heavy_c = real()?,
            "C_prime" => self.shrink_c = real()?,
            "c_m" => self.c_m = real()?,
            "c_sub" => self.c_sub = real()?,
            "c_w" => self.c_w = real()?,
            "c_d" => self.c_d = real()?,
            "c_w_id" => self.c_w_id = real()?,
            "c_d_id" => self.c_d_id = real()?,
            "c_N" => self.c_n = real()?,
            "t_reduction" => self.t_reduction = int()?,
            "t_uniform" => self.t_uniform = int()?,
            "c_fail" => self.c_fail = real()?,
            "dup_eps" => self.dup_eps = real()?,
            "dup_reps" => self.dup_reps = int()?,
            "dup_candidates" => self.dup_candidates = int()?,
            _ => {
                return Err(Error::invalid(format!(
                    "unknown constant {key:?}; known: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("C", self.locate_c),
            ("C_heavy", self.heavy_c),
            ("C_prime", self.shrink_c),
            ("c_m", self.c_m),
            ("c_sub", self.c_sub),
            ("c_w", self.c_w),
            ("c_d", self.c_d),
            ("c_w_id", self.c_w_id),
            ("c_d_id", self.c_d_id),
            ("c_N", self.c_n),
            ("c_fail", self.c_fail),
        ];
        if let Some((k, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(format!("{k} must be positive, got {v}")));
        }
        if !(self.dup_eps > 0.0 && self.dup_eps < 1.0) {
            return Err(Error::invalid("dup_eps must lie in (0, 1)"));
        }
        if self.t_uniform == 0 || self.dup_reps == 0 || self.dup_candidates == 0 {
            return Err(Error::invalid(
                "t_uniform, dup_reps and dup_candidates must be >= 1",
            ));
        }
        Ok(())
    }

    /// Renders the constants in the same format [`Constants::parse`] reads.
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "C={}", self.locate_c);
        let _ = writeln!(s, "C_heavy={}", self.heavy_c);
        let _ = writeln!(s, "C_prime={}", self.shrink_c);
        let _ = writeln!(s, "c_m={}", self.c_m);
        let _ = writeln!(s, "c_sub={}", self.c_sub);
        let _ = writeln!(s, "c_w={}", self.c_w);
        let _ = writeln!(s, "c_d={}", self.c_d);
        let _ = writeln!(s, "c_w_id={}", self.c_w_id);
        let _ = writeln!(s, "c_d_id={}", self.c_d_id);
        let _ = writeln!(s, "c_N={}", self.c_n);
        let _ = writeln!(s, "t_reduction={}", self.t_reduction);
        let _ = writeln!(s, "t_uniform={}", self.t_uniform);
        let _ = writeln!(s, "c_fail={}", self.c_fail);
        let _ = writeln!(s, "dup_eps={}", self.dup_eps);
        let _ = writeln!(s, "dup_reps={}", self.dup_reps);
        let _ = writeln!(s, "dup_candidates={}", self.dup_candidates);
        s
    }
}
