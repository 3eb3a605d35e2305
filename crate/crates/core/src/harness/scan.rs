//! Sweeps of the bias parameter `L` and location of the 50% crossing.

use serde::{Deserialize, Serialize};

use super::{DeltaRule, ExperimentReport, ExperimentSpec, Runner, DEFAULT_MAX_ROUNDS};
use crate::analytics::ThresholdRegime;
use crate::dynamics::ModelVariant;
use crate::error::{Error, Result};
use crate::graph::BlockParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub variant: ModelVariant,
    pub n: u64,
    pub params: BlockParams,
    #[serde(rename = "L_grid")]
    pub l_grid: Vec<f64>,
    pub replicates: u64,
    #[serde(default = "super::default_max_rounds")]
    pub max_rounds: u64,
    #[serde(default)]
    pub master_seed: u64,
}

impl ScanConfig {
    pub fn new(variant: ModelVariant, n: u64, params: BlockParams, l_grid: Vec<f64>, replicates: u64) -> Self {
        Self {
            variant,
            n,
            params,
            l_grid,
            replicates,
            max_rounds: DEFAULT_MAX_ROUNDS,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    #[serde(rename = "L")]
    pub l: f64,
    pub delta: i64,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    /// Points in increasing `L`.
    pub points: Vec<ScanPoint>,
    /// First closed interval `[L_i, L_{i+1}]` over which the `+` win
    /// frequency crosses one half.
    pub crossing: Option<(f64, f64)>,
}

/// First adjacent pair of `(L, frequency)` points, sorted by `L`, that lie on
/// different sides of one half (a frequency of exactly one half counts as
/// above).
pub fn crossing_interval(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    points
        .windows(2)
        .find(|w| (w[0].1 >= 0.5) != (w[1].1 >= 0.5))
        .map(|w| (w[0].0, w[1].0))
}

pub(super) fn run(runner: &Runner, config: &ScanConfig) -> Result<PhaseScan> {
    if config.l_grid.is_empty() {
        return Err(Error::InvalidArgument("empty L grid".into()));
    }
    if let Some(bad) = config.l_grid.iter().find(|l| !l.is_finite()) {
        return Err(Error::InvalidArgument(format!("L = {bad} is not finite")));
    }
    let mut grid = config.l_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut points = Vec::with_capacity(grid.len());
    for &l in &grid {
        let spec = ExperimentSpec {
            variant: config.variant,
            n: config.n,
            delta_rule: DeltaRule::Threshold(ThresholdRegime::Experiment { l }),
            params: config.params,
            replicates: config.replicates,
            max_rounds: config.max_rounds,
            master_seed: config.master_seed,
        };
        let report = runner.run_experiment(&spec)?;
        points.push(ScanPoint {
            l,
            delta: report.delta,
            report,
        });
    }
    let freqs: Vec<(f64, f64)> = points
        .iter()
        .map(|pt| (pt.l, pt.report.plus_win_frequency()))
        .collect();
    Ok(PhaseScan {
        crossing: crossing_interval(&freqs),
        points,
    })
}
