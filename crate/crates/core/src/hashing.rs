//! Seeded t-wise independent hash families over a prime field.
//!
//! A [`KWiseHash`] is a uniformly drawn polynomial of degree `t - 1` over
//! `GF(p)`, evaluated at the key and reduced modulo the range. Any `t`
//! distinct keys map to independent uniform field elements; the final
//! `mod range` step adds a bias of at most `ceil(p/D) / (p/D)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Range used to turn hash values into uniforms in `(0, 1]`.
pub const UNIT_RANGE: u64 = 1 << 31;

/// Smallest prime `>= m` (and `>= 2`).
pub fn next_prime(m: u64) -> u64 {
    let mut c = m.max(2);
    while !primal_check::miller_rabin(c) {
        c += 1;
    }
    c
}

/// Modulus used for a `(domain, range)` pair. When the range is larger than
/// the domain the prime is pushed to at least twice the range so reduction
/// bias stays below 2x.
pub fn modulus_for(domain: u64, range: u64) -> u64 {
    let floor = if range > domain {
        range.saturating_mul(2)
    } else {
        domain.max(range)
    };
    next_prime(floor)
}

#[inline]
fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KWiseHash {
    /// `a_0, a_1, ..., a_{t-1}`; the polynomial is `sum a_j i^j`.
    coefficients: Vec<u64>,
    modulus: u64,
    domain: u64,
    range: u64,
}

impl KWiseHash {
    /// Draws a degree-`t - 1` polynomial from `seed`.
    pub fn new(t: usize, domain: u64, range: u64, seed: u64) -> Result<Self> {
        if t == 0 || domain == 0 || range == 0 {
            return Err(Error::invalid(format!(
                "k-wise hash needs t, domain, range >= 1 (got {t}, {domain}, {range})"
            )));
        }
        let modulus = modulus_for(domain, range);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients = (0..t).map(|_| rng.random_range(0..modulus)).collect();
        Ok(KWiseHash {
            coefficients,
            modulus,
            domain,
            range,
        })
    }

    /// A specific member of the family; coefficients are reduced mod `modulus`.
    pub fn from_coefficients(
        coefficients: Vec<u64>,
        modulus: u64,
        domain: u64,
        range: u64,
    ) -> Result<Self> {
        if coefficients.is_empty() || range == 0 || domain == 0 {
            return Err(Error::invalid("empty polynomial or zero range/domain"));
        }
        if !primal_check::miller_rabin(modulus) || modulus < domain {
            return Err(Error::invalid(format!(
                "modulus {modulus} must be a prime >= domain {domain}"
            )));
        }
        let coefficients = coefficients.into_iter().map(|c| c % modulus).collect();
        Ok(KWiseHash {
            coefficients,
            modulus,
            domain,
            range,
        })
    }

    pub fn independence(&self) -> usize {
        self.coefficients.len()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    /// Polynomial value in `GF(p)`, before range reduction.
    #[inline]
    pub fn field_value(&self, i: u64) -> u64 {
        let p = self.modulus;
        let x = i % p;
        self.coefficients
            .iter()
            .rev()
            .fold(0u64, |acc, &c| (mul_mod(acc, x, p) + c) % p)
    }

    #[inline]
    pub(crate) fn at(&self, i: usize) -> u64 {
        self.field_value(i as u64) % self.range
    }

    pub fn eval(&self, i: u64) -> Result<u64> {
        if i >= self.domain {
            return Err(Error::IndexOutOfRange {
                index: i as usize,
                dimension: self.domain as usize,
            });
        }
        Ok(self.field_value(i) % self.range)
    }
}

/// A hash into `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignHash {
    inner: KWiseHash,
}

impl SignHash {
    pub fn new(t: usize, domain: u64, seed: u64) -> Result<Self> {
        Ok(SignHash {
            inner: KWiseHash::new(t, domain, 2, seed)?,
        })
    }

    #[inline]
    pub(crate) fn at(&self, i: usize) -> f64 {
        if self.inner.at(i) == 0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn eval(&self, i: u64) -> Result<f64> {
        self.inner.eval(i).map(|b| if b == 0 { -1.0 } else { 1.0 })
    }
}

/// t-wise independent uniforms in `(0, 1]`, one per key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitUniforms {
    inner: KWiseHash,
}

impl UnitUniforms {
    pub fn new(t: usize, domain: u64, seed: u64) -> Result<Self> {
        Ok(UnitUniforms {
            inner: KWiseHash::new(t, domain, UNIT_RANGE, seed)?,
        })
    }

    #[inline]
    pub(crate) fn at(&self, i: usize) -> f64 {
        (self.inner.at(i) + 1) as f64 / UNIT_RANGE as f64
    }

    pub fn eval(&self, i: u64) -> Result<f64> {
        self.inner
            .eval(i)
            .map(|v| (v + 1) as f64 / UNIT_RANGE as f64)
    }
}

/// One-off evaluation of the uniform family; build [`UnitUniforms`] for
/// repeated use.
pub fn uniform_unit(t: usize, domain: u64, seed: u64, i: u64) -> Result<f64> {
    UnitUniforms::new(t, domain, seed)?.eval(i)
}

/// Independence used for the dimension-reduction hashes: `ceil(2 log2 N)`,
/// at least 2.
pub fn reduction_independence(reduced_dim: u64) -> usize {
    ((2.0 * (reduced_dim.max(2) as f64).log2()).ceil() as usize).max(2)
}
