//! Synchronous majority updates and the coupled graph/opinion day loop.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    resample_full_in_place, resample_touched_in_place, sample_sbm, BlockParams, GraphState,
    Opinion, OpinionVector, PairSampler,
};

/// How the graph evolves between days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// Every pair is redrawn each day.
    Markovian,
    /// Only pairs touching a vertex that just changed opinion are redrawn.
    NonMarkovian,
}

impl ModelVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::Markovian => "markovian",
            ModelVariant::NonMarkovian => "non-markovian",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markovian" => Ok(ModelVariant::Markovian),
            "non-markovian" | "nonmarkovian" => Ok(ModelVariant::NonMarkovian),
            other => Err(Error::InvalidArgument(format!("unknown model {other:?}"))),
        }
    }
}

/// Terminal classification of a run. Days count updates; day 0 is the
/// initial configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    PlusWins { day: u64 },
    MinusWins { day: u64 },
    /// A non-unanimous day on which nobody changed opinion; the
    /// non-Markovian dynamics is frozen from then on.
    Halt { day: u64 },
    Timeout { max_rounds: u64 },
}

impl Outcome {
    /// The day the run ended on.
    pub fn last_day(&self) -> u64 {
        match *self {
            Outcome::PlusWins { day } | Outcome::MinusWins { day } | Outcome::Halt { day } => day,
            Outcome::Timeout { max_rounds } => max_rounds,
        }
    }

    pub fn is_consensus(&self) -> bool {
        matches!(self, Outcome::PlusWins { .. } | Outcome::MinusWins { .. })
    }
}

/// Counts recorded for one day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayRecord {
    pub plus_count: usize,
    /// Vertices that went from `-` to `+` on this day.
    pub to_plus: usize,
    /// Vertices that went from `+` to `-` on this day.
    pub to_minus: usize,
}

/// Per-day records; entry `t` describes day `t`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub days: Vec<DayRecord>,
}

impl Trajectory {
    pub fn any_plus_to_minus(&self) -> bool {
        self.days.iter().any(|d| d.to_minus > 0)
    }

    pub fn plus_counts(&self) -> impl Iterator<Item = usize> + '_ {
        self.days.iter().map(|d| d.plus_count)
    }
}

/// Neighbour tallies for every vertex at once.
///
/// Row `i` of the triangular graph contributes its `+`/`-` neighbours above
/// `i` by popcount, and its bits are added into bit-sliced column counters
/// (one binary digit per slice) to credit the vertices above `i` with one
/// neighbour of `i`'s opinion.
pub(crate) struct Tally {
    vertices: usize,
    words: usize,
    slices: usize,
    plus_cols: Vec<u64>,
    minus_cols: Vec<u64>,
    plus: Vec<u32>,
    minus: Vec<u32>,
}

impl Tally {
    pub(crate) fn new(vertices: usize) -> Self {
        let words = vertices.div_ceil(64);
        let slices = (usize::BITS - vertices.max(1).leading_zeros()) as usize;
        Self {
            vertices,
            words,
            slices,
            plus_cols: vec![0; slices * words],
            minus_cols: vec![0; slices * words],
            plus: vec![0; vertices],
            minus: vec![0; vertices],
        }
    }

    #[inline]
    fn add(cols: &mut [u64], slices: usize, words: usize, w: usize, word: u64) {
        let mut carry = word;
        for s in 0..slices {
            let slot = &mut cols[s * words + w];
            let next = *slot & carry;
            *slot ^= carry;
            carry = next;
            if carry == 0 {
                return;
            }
        }
        debug_assert_eq!(carry, 0, "column counter overflow");
    }

    fn column(cols: &[u64], slices: usize, words: usize, v: usize) -> u32 {
        let (w, b) = (v / 64, v % 64);
        (0..slices).fold(0, |acc, s| acc | ((((cols[s * words + w] >> b) & 1) as u32) << s))
    }

    pub(crate) fn compute(&mut self, graph: &GraphState, opinions: &OpinionVector) {
        debug_assert_eq!(graph.vertex_count(), self.vertices);
        self.plus_cols.fill(0);
        self.minus_cols.fill(0);
        let plus_words = opinions.words();
        for i in 0..self.vertices {
            let (mut up, mut um) = (0u32, 0u32);
            let cols = if opinions.is_plus(i) {
                &mut self.plus_cols
            } else {
                &mut self.minus_cols
            };
            for (w, &word) in graph.row(i).iter().enumerate().skip((i + 1) / 64) {
                if word == 0 {
                    continue;
                }
                up += (word & plus_words[w]).count_ones();
                um += (word & !plus_words[w]).count_ones();
                Self::add(cols, self.slices, self.words, w, word);
            }
            self.plus[i] = up;
            self.minus[i] = um;
        }
        for v in 0..self.vertices {
            self.plus[v] += Self::column(&self.plus_cols, self.slices, self.words, v);
            self.minus[v] += Self::column(&self.minus_cols, self.slices, self.words, v);
        }
    }

    /// Applies the majority rule; ties, including isolated vertices, keep
    /// their opinion.
    pub(crate) fn step_into(
        &mut self,
        graph: &GraphState,
        opinions: &OpinionVector,
        out: &mut OpinionVector,
    ) {
        self.compute(graph, opinions);
        out.words_mut().copy_from_slice(opinions.words());
        for v in 0..self.vertices {
            match self.plus[v].cmp(&self.minus[v]) {
                std::cmp::Ordering::Greater => out.set(v, Opinion::Plus),
                std::cmp::Ordering::Less => out.set(v, Opinion::Minus),
                std::cmp::Ordering::Equal => {}
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn counts(&self, v: usize) -> (u32, u32) {
        (self.plus[v], self.minus[v])
    }
}

/// One synchronous majority update of every vertex.
pub fn majority_step(graph: &GraphState, opinions: &OpinionVector) -> Result<OpinionVector> {
    if graph.vertex_count() != opinions.len() {
        return Err(Error::SizeMismatch {
            expected: graph.vertex_count(),
            actual: opinions.len(),
        });
    }
    let mut out = opinions.clone();
    Tally::new(opinions.len()).step_into(graph, opinions, &mut out);
    Ok(out)
}

/// Terminal outcome reached on `day`, if any.
///
/// Unanimity ends either variant. A non-unanimous day with no flips ends the
/// non-Markovian model (nothing is redrawn, so nothing changes again); the
/// Markovian graph is redrawn regardless, so such a day is not terminal.
pub fn classify_state(
    opinions: &OpinionVector,
    flips_this_day: usize,
    variant: ModelVariant,
    day: u64,
) -> Option<Outcome> {
    match opinions.unanimous() {
        Some(Opinion::Plus) => Some(Outcome::PlusWins { day }),
        Some(Opinion::Minus) => Some(Outcome::MinusWins { day }),
        None if flips_this_day == 0 && variant == ModelVariant::NonMarkovian => {
            Some(Outcome::Halt { day })
        }
        None => None,
    }
}

/// Summary of a run without the per-day records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RunSummary {
    pub outcome: Outcome,
    pub any_plus_to_minus: bool,
}

pub(crate) fn drive<R: RngCore + ?Sized>(
    variant: ModelVariant,
    mut graph: GraphState,
    mut opinions: OpinionVector,
    params: &BlockParams,
    max_rounds: u64,
    rng: &mut R,
    mut trajectory: Option<&mut Trajectory>,
) -> RunSummary {
    let sampler = PairSampler::new(params);
    let vertices = opinions.len();
    let mut tally = Tally::new(vertices);
    let mut next = opinions.clone();
    let mut changed = vec![0u64; opinions.words().len()];
    let mut any_plus_to_minus = false;

    if let Some(t) = trajectory.as_deref_mut() {
        t.days.push(DayRecord {
            plus_count: opinions.plus_count(),
            to_plus: 0,
            to_minus: 0,
        });
    }
    // no update has happened yet, so only unanimity can end day 0
    if let Some(winner) = opinions.unanimous() {
        let outcome = match winner {
            Opinion::Plus => Outcome::PlusWins { day: 0 },
            Opinion::Minus => Outcome::MinusWins { day: 0 },
        };
        return RunSummary {
            outcome,
            any_plus_to_minus,
        };
    }

    for day in 1..=max_rounds {
        tally.step_into(&graph, &opinions, &mut next);
        let (to_plus, to_minus) = opinions.flips_to(&next);
        any_plus_to_minus |= to_minus > 0;
        if let Some(t) = trajectory.as_deref_mut() {
            t.days.push(DayRecord {
                plus_count: next.plus_count(),
                to_plus,
                to_minus,
            });
        }
        if let Some(outcome) = classify_state(&next, to_plus + to_minus, variant, day) {
            return RunSummary {
                outcome,
                any_plus_to_minus,
            };
        }
        match variant {
            ModelVariant::Markovian => resample_full_in_place(&mut graph, &next, &sampler, rng),
            ModelVariant::NonMarkovian => {
                for ((c, a), b) in changed.iter_mut().zip(opinions.words()).zip(next.words()) {
                    *c = a ^ b;
                }
                resample_touched_in_place(&mut graph, &next, &changed, &sampler, rng);
            }
        }
        std::mem::swap(&mut opinions, &mut next);
    }
    RunSummary {
        outcome: Outcome::Timeout { max_rounds },
        any_plus_to_minus,
    }
}

fn check_rounds(max_rounds: u64) -> Result<()> {
    if max_rounds == 0 {
        Err(Error::InvalidArgument("max_rounds must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Runs the dynamics from a fresh two-community graph with `plus` vertices
/// holding `+` and `minus` holding `-`, until consensus, a halt, or
/// `max_rounds` updates.
pub fn run_dynamics<R: RngCore + ?Sized>(
    variant: ModelVariant,
    plus: usize,
    minus: usize,
    params: &BlockParams,
    max_rounds: u64,
    rng: &mut R,
) -> Result<(Outcome, Trajectory)> {
    check_rounds(max_rounds)?;
    let (graph, opinions) = sample_sbm(plus, minus, params, rng)?;
    let mut trajectory = Trajectory::default();
    let summary = drive(
        variant,
        graph,
        opinions,
        params,
        max_rounds,
        rng,
        Some(&mut trajectory),
    );
    Ok((summary.outcome, trajectory))
}

/// Runs the dynamics from a caller-supplied day-0 graph and opinions.
pub fn run_from<R: RngCore + ?Sized>(
    variant: ModelVariant,
    graph: GraphState,
    opinions: OpinionVector,
    params: &BlockParams,
    max_rounds: u64,
    rng: &mut R,
) -> Result<(Outcome, Trajectory)> {
    check_rounds(max_rounds)?;
    if opinions.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if graph.vertex_count() != opinions.len() {
        return Err(Error::SizeMismatch {
            expected: graph.vertex_count(),
            actual: opinions.len(),
        });
    }
    let mut trajectory = Trajectory::default();
    let summary = drive(
        variant,
        graph,
        opinions,
        params,
        max_rounds,
        rng,
        Some(&mut trajectory),
    );
    Ok((summary.outcome, trajectory))
}
