//! Majority dynamics on dynamic two-community stochastic block models.
//!
//! * [`graph`]: sampling and the two edge-evolution rules.
//! * [`dynamics`]: the synchronous majority update and the day loop.
//! * [`analytics`]: exact binomial numerics, closed-form constants and
//!   threshold formulas.
//! * [`oracle`]: exhaustive small-graph ground truth.
//! * [`harness`]: reproducible parallel experiments and output.

pub mod analytics;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod harness;
pub mod oracle;

pub use analytics::{ModelConstants, ThresholdRegime};
pub use dynamics::{
    classify_state, majority_step, run_dynamics, run_from, DayRecord, ModelVariant, Outcome,
    Trajectory,
};
pub use error::{Error, Result};
pub use graph::{
    neighbor_tally, resample_full, resample_touched, sample_sbm, BlockParams, GraphState, Opinion,
    OpinionVector,
};
pub use harness::{
    replicate_rng, replicate_seed, run_experiment, DeltaRule, ExperimentReport, ExperimentSpec,
    SimRng,
};
