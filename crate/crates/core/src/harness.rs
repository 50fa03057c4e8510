//! Monte Carlo experiments: signal and stream generators, trial execution
//! and CSV output.
//!
//! This is the only module that reads the hidden signal, and only to judge
//! a finished trial.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::Constants;
use crate::countsketch::countsketch_recover;
use crate::duplicates::{find_duplicate, MultiPassStream};
use crate::error::{Error, Result};
use crate::ksparse::recover_k_sparse;
use crate::onesparse::recover_one_sparse;
use crate::oracle::{Measure, MeasurementOracle, RecoveryResult};
use crate::seed::{tag, Seeds};
use crate::signal::{tail_error, Norm, Signal};
use crate::tworound::two_round_recover;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    OneSparse,
    KAdaptive,
    TwoRound,
    CountSketch,
    Duplicate,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::OneSparse,
        Scheme::KAdaptive,
        Scheme::TwoRound,
        Scheme::CountSketch,
        Scheme::Duplicate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::OneSparse => "one-sparse",
            Scheme::KAdaptive => "k-adaptive",
            Scheme::TwoRound => "two-round",
            Scheme::CountSketch => "countsketch",
            Scheme::Duplicate => "duplicate",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scheme {s:?}")))
    }
}

/// Signal models for the recovery schemes and stream patterns for the
/// duplicate finder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// `k` spikes over a tail of equal-magnitude random-sign entries.
    FlatTail,
    /// `k` spikes over an i.i.d. Gaussian tail.
    GaussianTail,
    /// `|x|` sorted is `i^{-alpha}`, placed at random positions with random signs.
    PowerLaw(f64),
    /// `k` spikes and nothing else.
    ExactSparse,
    /// `1, 2, ..., n-1` followed by one repeated item.
    OneDuplicate,
    /// `n` copies of item 1.
    AllSame,
    /// The one-duplicate stream in seeded random order.
    Shuffled,
}

impl Model {
    pub fn is_stream(self) -> bool {
        matches!(self, Model::OneDuplicate | Model::AllSame | Model::Shuffled)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::FlatTail => f.write_str("flat-tail"),
            Model::GaussianTail => f.write_str("gaussian-tail"),
            Model::PowerLaw(a) => write!(f, "power-law:{a}"),
            Model::ExactSparse => f.write_str("exact-sparse"),
            Model::OneDuplicate => f.write_str("one-duplicate"),
            Model::AllSame => f.write_str("all-same"),
            Model::Shuffled => f.write_str("shuffled"),
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "flat-tail" => Model::FlatTail,
            "gaussian-tail" => Model::GaussianTail,
            "power-law" => Model::PowerLaw(1.5),
            "exact-sparse" => Model::ExactSparse,
            "one-duplicate" => Model::OneDuplicate,
            "all-same" => Model::AllSame,
            "shuffled" => Model::Shuffled,
            _ => match s.strip_prefix("power-law:") {
                Some(a) => {
                    let alpha: f64 = a
                        .parse()
                        .map_err(|e| Error::invalid(format!("power-law exponent: {e}")))?;
                    if !(alpha > 0.0 && alpha.is_finite()) {
                        return Err(Error::invalid("power-law exponent must be positive"));
                    }
                    Model::PowerLaw(alpha)
                }
                None => return Err(Error::invalid(format!("unknown model {s:?}"))),
            },
        })
    }
}

/// A generated signal and the positions of its planted spikes, largest
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub signal: Signal,
    pub spikes: Vec<usize>,
}

/// Draws a signal of dimension `n`: `k` spikes of magnitude `spike_ratio`
/// with random signs over a tail of unit l2 norm (except for the
/// exact-sparse and power-law models).
pub fn generate_signal(
    model: Model,
    n: usize,
    k: usize,
    spike_ratio: f64,
    seeds: Seeds,
) -> Result<Planted> {
    if n == 0 || k > n {
        return Err(Error::invalid(format!(
            "need 1 <= n and k <= n, got n={n}, k={k}"
        )));
    }
    let mut rng = seeds.rng();
    let mut x = vec![0.0; n];
    if let Model::PowerLaw(alpha) = model {
        let mut pos: Vec<usize> = (0..n).collect();
        pos.shuffle(&mut rng);
        for (rank, &i) in pos.iter().enumerate() {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            x[i] = sign * ((rank + 1) as f64).powf(-alpha);
        }
        let spikes = pos[..k].to_vec();
        return Ok(Planted {
            signal: Signal::new(x)?,
            spikes,
        });
    }
    let spikes: Vec<usize> = index::sample(&mut rng, n, k).into_vec();
    match model {
        Model::FlatTail => {
            let m = n - k;
            let scale = if m > 0 { 1.0 / (m as f64).sqrt() } else { 0.0 };
            for v in x.iter_mut() {
                *v = if rng.random::<bool>() { scale } else { -scale };
            }
        }
        Model::GaussianTail => {
            for v in x.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for &s in &spikes {
                x[s] = 0.0;
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                x.iter_mut().for_each(|v| *v /= norm);
            }
        }
        Model::ExactSparse => {}
        _ => {
            return Err(Error::invalid(format!(
                "{model} is a stream pattern, not a signal model"
            )))
        }
    }
    for &s in &spikes {
        x[s] = if rng.random::<bool>() {
            spike_ratio
        } else {
            -spike_ratio
        };
    }
    Ok(Planted {
        signal: Signal::new(x)?,
        spikes,
    })
}

/// Draws a stream of `n` items in `[1, n-1]`.
pub fn generate_stream(model: Model, n: usize, seeds: Seeds) -> Result<MultiPassStream> {
    if n < 2 {
        return Err(Error::invalid("streams need n >= 2"));
    }
    let mut rng = seeds.rng();
    let items = match model {
        Model::AllSame => vec![1; n],
        Model::OneDuplicate | Model::Shuffled => {
            let mut items: Vec<usize> = (1..n).collect();
            items.push(rng.random_range(1..n));
            if model == Model::Shuffled {
                items.shuffle(&mut rng);
            }
            items
        }
        _ => {
            return Err(Error::invalid(format!(
                "{model} is a signal model, not a stream pattern"
            )))
        }
    };
    MultiPassStream::new(items)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scheme: Scheme,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub model: Model,
    pub spike_ratio: f64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub constants: Constants,
}

impl ExperimentSpec {
    pub fn new(scheme: Scheme, n: usize, k: usize) -> Self {
        ExperimentSpec {
            scheme,
            n,
            k,
            eps: 0.5,
            delta: 0.2,
            trials: 100,
            seed: 0,
            model: if scheme == Scheme::Duplicate {
                Model::Shuffled
            } else {
                Model::GaussianTail
            },
            spike_ratio: 10.0,
            workers: 0,
            constants: Constants::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(m));
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.scheme == Scheme::Duplicate {
            if !self.model.is_stream() {
                return fail(format!(
                    "scheme duplicate needs a stream model, got {}",
                    self.model
                ));
            }
            if self.n < 2 {
                return fail("n must be >= 2".into());
            }
        } else {
            if self.model.is_stream() {
                return fail(format!(
                    "scheme {} needs a signal model, got {}",
                    self.scheme, self.model
                ));
            }
            if self.n == 0 || self.k == 0 || self.k > self.n {
                return fail(format!("need 1 <= k <= n, got k={}, n={}", self.k, self.n));
            }
            if self.scheme == Scheme::OneSparse && self.k != 1 {
                return fail("one-sparse runs use k = 1".into());
            }
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return fail(format!("eps must lie in (0, 1], got {}", self.eps));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.spike_ratio.is_finite() && self.spike_ratio > 0.0) {
            return fail("spike ratio must be positive".into());
        }
        self.constants.validate()
    }
}

/// What one trial measured.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialOutcome {
    pub success: bool,
    pub measurements: u64,
    /// Rounds, or passes for the duplicate finder.
    pub rounds: u64,
    pub direct_observations: u64,
    /// `||x - x_hat||_2 / sqrt(err(x, k))`; `NaN` where it does not apply.
    pub error_ratio: f64,
    pub support: usize,
    /// The duplicate finder reported an item that is not duplicated.
    pub unsound: bool,
}

fn judge(result: &RecoveryResult, x: &Signal, k: usize, eps: f64) -> TrialOutcome {
    let err = result.l2_error(x.values());
    let tail = tail_error(x.values(), k, Norm::L2).sqrt();
    let ratio = if err == 0.0 { 0.0 } else { err / tail };
    TrialOutcome {
        success: err <= (1.0 + eps) * tail,
        measurements: result.metering.measurements,
        rounds: result.metering.rounds,
        direct_observations: result.metering.direct_observations,
        error_ratio: ratio,
        support: result.estimate.len(),
        unsound: false,
    }
}

/// The stream trial number `trial` of `spec` runs on.
pub fn trial_stream(spec: &ExperimentSpec, trial: u64) -> Result<MultiPassStream> {
    generate_stream(
        spec.model,
        spec.n,
        Seeds::new(spec.seed).child(trial).child(tag::SIGNAL),
    )
}

/// Runs trial number `trial` of `spec`.
pub fn run_trial(spec: &ExperimentSpec, trial: u64) -> Result<TrialOutcome> {
    let seeds = Seeds::new(spec.seed).child(trial);
    let scheme_seeds = seeds.child(tag::SCHEME);
    let c = &spec.constants;
    if spec.scheme == Scheme::Duplicate {
        let mut stream = trial_stream(spec, trial)?;
        let x = stream.frequencies();
        let run = find_duplicate(&mut stream, spec.delta, c, scheme_seeds)?;
        let unsound = run.found.is_some_and(|i| x[i - 1] <= 0);
        return Ok(TrialOutcome {
            success: run.found.is_some() && !unsound,
            measurements: stream.metering().measurements,
            rounds: run.passes,
            direct_observations: stream.metering().direct_observations,
            error_ratio: f64::NAN,
            support: run.candidates,
            unsound,
        });
    }
    let planted = generate_signal(
        spec.model,
        spec.n,
        spec.k,
        spec.spike_ratio,
        seeds.child(tag::SIGNAL),
    )?;
    let mut oracle = MeasurementOracle::new(planted.signal.clone());
    let result = match spec.scheme {
        Scheme::OneSparse => {
            let all: Vec<usize> = (0..spec.n).collect();
            let got = recover_one_sparse(&mut oracle, &all, c.shrink_c, scheme_seeds);
            let m = oracle.metering();
            return match got {
                Ok(j) => Ok(TrialOutcome {
                    success: j == planted.spikes[0],
                    measurements: m.measurements,
                    rounds: m.rounds,
                    support: 1,
                    error_ratio: f64::NAN,
                    ..TrialOutcome::default()
                }),
                Err(e) if e.is_recovery_failure() => Ok(TrialOutcome {
                    measurements: m.measurements,
                    rounds: m.rounds,
                    error_ratio: f64::NAN,
                    ..TrialOutcome::default()
                }),
                Err(e) => Err(e),
            };
        }
        Scheme::KAdaptive => {
            recover_k_sparse(&mut oracle, spec.k, spec.eps, spec.delta, c, scheme_seeds)?
        }
        Scheme::TwoRound => two_round_recover(&mut oracle, spec.k, spec.eps, c, scheme_seeds)?,
        Scheme::CountSketch => {
            countsketch_recover(&mut oracle, spec.k, spec.eps, spec.delta, c, scheme_seeds)?
        }
        Scheme::Duplicate => unreachable!("handled above"),
    };
    Ok(judge(&result, &planted.signal, spec.k, spec.eps))
}

/// Aggregate of one experiment. Column order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scheme: String,
    pub model: String,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub spike_ratio: f64,
    pub success_rate: f64,
    pub mean_measurements: f64,
    pub median_measurements: f64,
    /// Rounds, or passes for the duplicate finder.
    pub mean_rounds: f64,
    pub median_rounds: f64,
    pub mean_direct_observations: f64,
    pub mean_error_ratio: f64,
    pub max_support: usize,
    pub unsound: usize,
}

fn median_u64(mut v: Vec<u64>) -> f64 {
    v.sort_unstable();
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2] as f64
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2]) as f64
    }
}

/// Aggregates trial outcomes in trial order.
pub fn aggregate(spec: &ExperimentSpec, outcomes: &[TrialOutcome]) -> ResultRow {
    let t = outcomes.len() as f64;
    let mean = |f: &dyn Fn(&TrialOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / t;
    ResultRow {
        scheme: spec.scheme.to_string(),
        model: spec.model.to_string(),
        n: spec.n,
        k: spec.k,
        eps: spec.eps,
        delta: spec.delta,
        trials: outcomes.len(),
        seed: spec.seed,
        spike_ratio: spec.spike_ratio,
        success_rate: outcomes.iter().filter(|o| o.success).count() as f64 / t,
        mean_measurements: mean(&|o| o.measurements as f64),
        median_measurements: median_u64(outcomes.iter().map(|o| o.measurements).collect()),
        mean_rounds: mean(&|o| o.rounds as f64),
        median_rounds: median_u64(outcomes.iter().map(|o| o.rounds).collect()),
        mean_direct_observations: mean(&|o| o.direct_observations as f64),
        mean_error_ratio: mean(&|o| o.error_ratio),
        max_support: outcomes.iter().map(|o| o.support).max().unwrap_or(0),
        unsound: outcomes.iter().filter(|o| o.unsound).count(),
    }
}

/// Runs every trial (in parallel on `spec.workers` threads) and aggregates.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultRow> {
    run_trials(spec).map(|o| aggregate(spec, &o))
}

/// Per-trial outcomes in trial order.
pub fn run_trials(spec: &ExperimentSpec) -> Result<Vec<TrialOutcome>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..spec.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(spec, t))
            .collect()
    })
}

/// Writes a header and one line per row.
pub fn emit_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("no rows to write"));
    }
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    emit_csv(rows, std::io::BufWriter::new(file))
}
