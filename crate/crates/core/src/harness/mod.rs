//! Reproducible Monte Carlo experiments.
//!
//! Replicate `r` of an experiment draws from its own generator, seeded with
//! [`replicate_seed`]`(master_seed, r)`: the `(r + 1)`-th output of a
//! SplitMix64 sequence started at `master_seed`. That 64-bit seed is fed to
//! `ChaCha8Rng::seed_from_u64`. Replicates are independent, so any number of
//! workers gives the same per-replicate results; they are folded in
//! replicate order with integer-only accumulators, which makes a report
//! independent of scheduling.

mod emit;
mod scan;
mod tables;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{threshold_delta, ThresholdRegime};
use crate::dynamics::{drive, ModelVariant, Outcome, RunSummary};
use crate::error::{Error, Result};
use crate::graph::{sample_sbm, BlockParams};

pub use emit::{emit, parse_json, write_csv, write_json, Destination, OutputFormat, CSV_HEADER};
pub use scan::{crossing_interval, PhaseScan, ScanConfig, ScanPoint};
pub use tables::{table_specs, TableId};

/// Generator used for every replicate.
pub type SimRng = ChaCha8Rng;

/// Default cap on simulated days.
pub const DEFAULT_MAX_ROUNDS: u64 = 100_000;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate`: `splitmix64(master + (replicate + 1) * 0x9E3779B97F4A7C15)`.
pub fn replicate_seed(master_seed: u64, replicate: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(replicate.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn replicate_rng(master_seed: u64, replicate: u64) -> SimRng {
    SimRng::seed_from_u64(replicate_seed(master_seed, replicate))
}

/// How the initial bias is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    Explicit(i64),
    Threshold(ThresholdRegime),
}

/// One experiment: `replicates` independent runs from `n + delta` plus and
/// `n` minus vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub variant: ModelVariant,
    pub n: u64,
    pub delta_rule: DeltaRule,
    pub params: BlockParams,
    pub replicates: u64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u64,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_max_rounds() -> u64 {
    DEFAULT_MAX_ROUNDS
}

impl ExperimentSpec {
    pub fn delta(&self) -> Result<i64> {
        match self.delta_rule {
            DeltaRule::Explicit(d) => Ok(d),
            DeltaRule::Threshold(regime) => {
                threshold_delta(self.n, self.params.p(), self.params.q(), &regime)
            }
        }
    }

    /// `L` of the bias rule, when it has one.
    pub fn l(&self) -> Option<f64> {
        match self.delta_rule {
            DeltaRule::Explicit(_) => None,
            DeltaRule::Threshold(regime) => regime.l(),
        }
    }

    /// Checks the spec and returns the block sizes `(plus, minus)`.
    pub fn validate(&self) -> Result<(usize, usize)> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidArgument("max_rounds must be at least 1".into()));
        }
        let delta = self.delta()?;
        let plus = self.n as i64 + delta;
        if plus < 0 {
            return Err(Error::InvalidArgument(format!(
                "delta = {delta} leaves {plus} plus vertices"
            )));
        }
        if plus == 0 && self.n == 0 {
            return Err(Error::EmptyGraph);
        }
        Ok((plus as usize, self.n as usize))
    }
}

/// Which outcome a confidence interval refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    PlusWins,
    MinusWins,
    Halt,
    Timeout,
}

/// Aggregated statistics of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model: ModelVariant,
    pub n: u64,
    pub delta: i64,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub replicates: u64,
    pub max_rounds: u64,
    pub master_seed: u64,
    pub plus_wins: u64,
    pub minus_wins: u64,
    pub halts: u64,
    pub timeouts: u64,
    /// Mean last day over replicates that reached consensus.
    pub avg_last_day: Option<f64>,
    /// Most frequent outcome; the interval below is for its frequency.
    pub dominant: OutcomeKind,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Replicates in which some vertex ever went from `+` to `-`.
    pub plus_to_minus_runs: u64,
    pub plus_win_days: BTreeMap<u64, u64>,
    pub minus_win_days: BTreeMap<u64, u64>,
    pub halt_days: BTreeMap<u64, u64>,
}

impl ExperimentReport {
    pub fn plus_win_frequency(&self) -> f64 {
        self.plus_wins as f64 / self.replicates as f64
    }

    pub fn halt_frequency(&self) -> f64 {
        self.halts as f64 / self.replicates as f64
    }

    pub fn count(&self, kind: OutcomeKind) -> u64 {
        match kind {
            OutcomeKind::PlusWins => self.plus_wins,
            OutcomeKind::MinusWins => self.minus_wins,
            OutcomeKind::Halt => self.halts,
            OutcomeKind::Timeout => self.timeouts,
        }
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = Z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Integer accumulator over replicate outcomes.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    plus_win_days: BTreeMap<u64, u64>,
    minus_win_days: BTreeMap<u64, u64>,
    halt_days: BTreeMap<u64, u64>,
    timeouts: u64,
    consensus_day_sum: u64,
    plus_to_minus_runs: u64,
}

impl Accumulator {
    fn push(&mut self, run: &RunSummary) {
        match run.outcome {
            Outcome::PlusWins { day } => {
                *self.plus_win_days.entry(day).or_default() += 1;
                self.consensus_day_sum += day;
            }
            Outcome::MinusWins { day } => {
                *self.minus_win_days.entry(day).or_default() += 1;
                self.consensus_day_sum += day;
            }
            Outcome::Halt { day } => *self.halt_days.entry(day).or_default() += 1,
            Outcome::Timeout { .. } => self.timeouts += 1,
        }
        self.plus_to_minus_runs += run.any_plus_to_minus as u64;
    }

    fn finish(self, spec: &ExperimentSpec, delta: i64) -> ExperimentReport {
        let total = |m: &BTreeMap<u64, u64>| m.values().sum::<u64>();
        let plus_wins = total(&self.plus_win_days);
        let minus_wins = total(&self.minus_win_days);
        let halts = total(&self.halt_days);
        let consensus = plus_wins + minus_wins;
        let avg_last_day =
            (consensus > 0).then(|| self.consensus_day_sum as f64 / consensus as f64);
        let counts = [
            (OutcomeKind::PlusWins, plus_wins),
            (OutcomeKind::MinusWins, minus_wins),
            (OutcomeKind::Halt, halts),
            (OutcomeKind::Timeout, self.timeouts),
        ];
        let (dominant, top) = counts
            .iter()
            .copied()
            .fold(counts[0], |best, c| if c.1 > best.1 { c } else { best });
        let (ci_low, ci_high) = wilson_interval(top, spec.replicates);
        ExperimentReport {
            model: spec.variant,
            n: spec.n,
            delta,
            p: spec.params.p(),
            q: spec.params.q(),
            l: spec.l(),
            replicates: spec.replicates,
            max_rounds: spec.max_rounds,
            master_seed: spec.master_seed,
            plus_wins,
            minus_wins,
            halts,
            timeouts: self.timeouts,
            avg_last_day,
            dominant,
            ci_low,
            ci_high,
            plus_to_minus_runs: self.plus_to_minus_runs,
            plus_win_days: self.plus_win_days,
            minus_win_days: self.minus_win_days,
            halt_days: self.halt_days,
        }
    }
}

fn run_replicate(
    spec: &ExperimentSpec,
    plus: usize,
    minus: usize,
    replicate: u64,
) -> RunSummary {
    let mut rng = replicate_rng(spec.master_seed, replicate);
    let (graph, opinions) =
        sample_sbm(plus, minus, &spec.params, &mut rng).expect("validated block sizes");
    drive(
        spec.variant,
        graph,
        opinions,
        &spec.params,
        spec.max_rounds,
        &mut rng,
        None,
    )
}

/// Executes experiments on a fixed-size worker pool.
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    /// `workers = None` uses one worker per available core.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = workers {
            if w == 0 {
                return Err(Error::InvalidArgument("workers must be at least 1".into()));
            }
            builder = builder.num_threads(w);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn run_experiment(&self, spec: &ExperimentSpec) -> Result<ExperimentReport> {
        let (plus, minus) = spec.validate()?;
        let delta = spec.delta()?;
        log::info!(
            "{} n={} delta={} p={} q={} x{}",
            spec.variant,
            spec.n,
            delta,
            spec.params.p(),
            spec.params.q(),
            spec.replicates
        );
        let runs: Vec<RunSummary> = self.pool.install(|| {
            (0..spec.replicates)
                .into_par_iter()
                .map(|r| run_replicate(spec, plus, minus, r))
                .collect()
        });
        let mut acc = Accumulator::default();
        for run in &runs {
            acc.push(run);
        }
        Ok(acc.finish(spec, delta))
    }

    /// One report per configuration of a reference table, in table order.
    pub fn reproduce_table(
        &self,
        table: TableId,
        replicates: u64,
        master_seed: u64,
    ) -> Result<Vec<ExperimentReport>> {
        table_specs(table, replicates, master_seed)?
            .iter()
            .map(|spec| self.run_experiment(spec))
            .collect()
    }

    pub fn scan_phase(&self, config: &ScanConfig) -> Result<PhaseScan> {
        scan::run(self, config)
    }
}

/// Runs an experiment on the default worker pool.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    Runner::new(None)?.run_experiment(spec)
}

pub fn reproduce_table(
    table: TableId,
    replicates: u64,
    master_seed: u64,
) -> Result<Vec<ExperimentReport>> {
    Runner::new(None)?.reproduce_table(table, replicates, master_seed)
}

pub fn scan_phase(config: &ScanConfig) -> Result<PhaseScan> {
    Runner::new(None)?.scan_phase(config)
}
