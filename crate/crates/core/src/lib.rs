//! Adaptive sparse recovery over a metered linear-measurement oracle.
//!
//! The hidden vector lives inside a [`MeasurementOracle`]; schemes only see
//! it through rounds of linear queries, and the oracle counts measurements,
//! rounds and direct observations.
//!
//! - [`onesparse`]: `O(log log n)` adaptive identification of a heavy coordinate.
//! - [`ksparse`]: adaptive k-sparse recovery by subsampling and recursion.
//! - [`countsketch`]: the nonadaptive baseline.
//! - [`tworound`]: a two-round scheme built on a hash reduction and CountSketch.
//! - [`duplicates`]: a multi-pass duplicate finder on an integer stream.
//! - [`harness`]: signal generators and Monte Carlo experiments.

pub mod constants;
pub mod countsketch;
pub mod duplicates;
pub mod error;
pub mod harness;
pub mod hashing;
pub mod ksparse;
pub mod onesparse;
pub mod oracle;
pub mod seed;
pub mod signal;
pub mod tworound;

pub use constants::Constants;
pub use error::{Error, Result};
pub use oracle::{LinearQuery, Measure, MeasurementOracle, Metering, QueryBatch, RecoveryResult};
pub use seed::Seeds;
pub use signal::{Norm, Signal};
