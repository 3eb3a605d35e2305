//! Exhaustive ground truth on graphs of at most seven vertices.
//!
//! A kernel row enumerates every labelled graph on `N` vertices, weights it
//! by its two-community probability for a split of `j` plus and `N - j`
//! minus vertices, applies one majority update and accumulates the joint law
//! of the two flip counts. Vertices are exchangeable inside a community, so
//! the number of `+` vertices is a Markov chain for the Markovian model and
//! the rows below are its transition kernel.
//!
//! The majority rule is re-derived here from adjacency bitmasks and does not
//! call into [`crate::dynamics`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::check_probability;

/// Largest vertex count accepted by the enumerators (2^21 graphs per row).
pub const MAX_ENUMERATED_VERTICES: usize = 7;

/// One-day law from a state with `plus` vertices holding `+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub vertices: usize,
    pub plus: usize,
    /// `next[k]` is the probability of `k` plus vertices after one update.
    pub next: Vec<f64>,
    /// `flips[a][b]`: probability of `a` minus-to-plus and `b` plus-to-minus flips.
    pub flips: Vec<Vec<f64>>,
}

impl KernelRow {
    /// Probability that nobody changes opinion.
    pub fn no_flip(&self) -> f64 {
        self.flips[0][0]
    }
}

fn check_vertices(vertices: usize) -> Result<()> {
    if vertices == 0 {
        return Err(Error::EmptyGraph);
    }
    if vertices > MAX_ENUMERATED_VERTICES {
        return Err(Error::EnumerationTooLarge {
            requested: vertices,
            max: MAX_ENUMERATED_VERTICES,
        });
    }
    Ok(())
}

/// Enumerates one kernel row. Vertices `0..plus` hold `+`.
pub fn enumerate_day_kernel_row(plus: usize, vertices: usize, p: f64, q: f64) -> Result<KernelRow> {
    check_vertices(vertices)?;
    check_probability("p", p)?;
    check_probability("q", q)?;
    if plus > vertices {
        return Err(Error::InvalidArgument(format!(
            "{plus} plus vertices out of {vertices}"
        )));
    }
    let minus = vertices - plus;
    let is_plus = |v: usize| v < plus;

    // pair index e <-> (a, b); per-vertex masks of incident pairs by the
    // other endpoint's opinion
    let mut plus_pairs = vec![0u32; vertices];
    let mut minus_pairs = vec![0u32; vertices];
    let mut same_mask = 0u32;
    let mut e = 0;
    for a in 0..vertices {
        for b in (a + 1)..vertices {
            let bit = 1u32 << e;
            if is_plus(b) {
                plus_pairs[a] |= bit;
            } else {
                minus_pairs[a] |= bit;
            }
            if is_plus(a) {
                plus_pairs[b] |= bit;
            } else {
                minus_pairs[b] |= bit;
            }
            if is_plus(a) == is_plus(b) {
                same_mask |= bit;
            }
            e += 1;
        }
    }
    let pairs = e;
    let same_total = same_mask.count_ones() as usize;
    let cross_total = pairs - same_total;
    let powers = |prob: f64, total: usize| -> Vec<f64> {
        (0..=total)
            .map(|k| prob.powi(k as i32) * (1.0 - prob).powi((total - k) as i32))
            .collect()
    };
    let same_weight = powers(p, same_total);
    let cross_weight = powers(q, cross_total);

    let mut flips = vec![vec![0.0; plus + 1]; minus + 1];
    for graph in 0u32..(1u32 << pairs) {
        let s = (graph & same_mask).count_ones() as usize;
        let c = (graph & !same_mask).count_ones() as usize;
        let weight = same_weight[s] * cross_weight[c];
        if weight == 0.0 {
            continue;
        }
        let (mut to_plus, mut to_minus) = (0, 0);
        for v in 0..vertices {
            let up = (graph & plus_pairs[v]).count_ones();
            let down = (graph & minus_pairs[v]).count_ones();
            if is_plus(v) && down > up {
                to_minus += 1;
            } else if !is_plus(v) && up > down {
                to_plus += 1;
            }
        }
        flips[to_plus][to_minus] += weight;
    }

    let mut next = vec![0.0; vertices + 1];
    for (a, row) in flips.iter().enumerate() {
        for (b, &w) in row.iter().enumerate() {
            next[plus + a - b] += w;
        }
    }
    Ok(KernelRow {
        vertices,
        plus,
        next,
        flips,
    })
}

/// Transition kernel of the `+` count under the Markovian model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionKernel {
    pub vertices: usize,
    /// `rows[j][k]`: probability of moving from `j` to `k` plus vertices.
    pub rows: Vec<Vec<f64>>,
}

impl TransitionKernel {
    pub fn build(vertices: usize, p: f64, q: f64) -> Result<Self> {
        let rows = (0..=vertices)
            .map(|j| enumerate_day_kernel_row(j, vertices, p, q).map(|r| r.next))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { vertices, rows })
    }

    /// States from which `0` or `vertices` can be reached.
    pub fn can_absorb(&self) -> Vec<bool> {
        let n = self.vertices;
        let mut reach = vec![false; n + 1];
        reach[0] = true;
        reach[n] = true;
        loop {
            let mut changed = false;
            for j in 1..n {
                if !reach[j] && (0..=n).any(|k| reach[k] && self.rows[j][k] > 0.0) {
                    reach[j] = true;
                    changed = true;
                }
            }
            if !changed {
                return reach;
            }
        }
    }
}

/// Result of the exact absorption computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorption {
    /// Probability that `+` eventually wins; `None` when the start state
    /// cannot reach either unanimous state.
    pub prob_plus_wins: Option<f64>,
    /// Probability of reaching either unanimous state at all.
    pub prob_absorbed: Option<f64>,
    pub absorbing_reachable: bool,
}

/// Solves the absorption system for the Markovian chain started from
/// `n + delta` plus and `n` minus vertices.
pub fn exact_absorption(n: usize, delta: usize, p: f64, q: f64) -> Result<Absorption> {
    let vertices = 2 * n + delta;
    check_vertices(vertices)?;
    let start = n + delta;
    let kernel = TransitionKernel::build(vertices, p, q)?;
    if start == vertices || start == 0 {
        let win = if start == vertices { 1.0 } else { 0.0 };
        return Ok(Absorption {
            prob_plus_wins: Some(win),
            prob_absorbed: Some(1.0),
            absorbing_reachable: true,
        });
    }
    let reach = kernel.can_absorb();
    if !reach[start] {
        return Ok(Absorption {
            prob_plus_wins: None,
            prob_absorbed: None,
            absorbing_reachable: false,
        });
    }
    // unknowns: transient states that can still be absorbed; trapped states
    // never reach either end and contribute zero
    let states: Vec<usize> = (1..vertices).filter(|&j| reach[j]).collect();
    let m = states.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut to_top = DVector::<f64>::zeros(m);
    let mut to_any = DVector::<f64>::zeros(m);
    for (r, &j) in states.iter().enumerate() {
        for (c, &k) in states.iter().enumerate() {
            a[(r, c)] -= kernel.rows[j][k];
        }
        to_top[r] = kernel.rows[j][vertices];
        to_any[r] = kernel.rows[j][vertices] + kernel.rows[j][0];
    }
    let lu = a.lu();
    let win = lu.solve(&to_top).ok_or(Error::SingularSystem)?;
    let absorbed = lu.solve(&to_any).ok_or(Error::SingularSystem)?;
    let idx = states.iter().position(|&j| j == start).expect("start is transient");
    Ok(Absorption {
        prob_plus_wins: Some(win[idx]),
        prob_absorbed: Some(absorbed[idx]),
        absorbing_reachable: true,
    })
}

/// Probability that the first update changes nobody's opinion, starting
/// from `n + delta` plus and `n > 0` minus vertices on a fresh graph. The
/// same for both model variants.
pub fn exact_halt_day1(n: usize, delta: usize, p: f64, q: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "need at least one minus vertex".into(),
        ));
    }
    let vertices = 2 * n + delta;
    Ok(enumerate_day_kernel_row(n + delta, vertices, p, q)?.no_flip())
}

/// Normal-approximation comparison of a Monte Carlo frequency with an exact
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub z_score: f64,
    pub pass: bool,
}

/// Largest accepted `|z|`.
pub const AGREEMENT_Z: f64 = 4.0;

pub fn mc_agreement(successes: u64, replicates: u64, exact: f64) -> Result<Agreement> {
    if replicates < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 replicates, got {replicates}"
        )));
    }
    check_probability("exact", exact)?;
    if successes > replicates {
        return Err(Error::InvalidArgument("more successes than replicates".into()));
    }
    let freq = successes as f64 / replicates as f64;
    let se = (exact * (1.0 - exact) / replicates as f64).sqrt();
    let z_score = if se == 0.0 {
        if freq == exact {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (freq - exact) / se
    };
    Ok(Agreement {
        z_score,
        pass: z_score.abs() <= AGREEMENT_Z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanimous_rows_are_point_masses() {
        for n in 1..=5 {
            let row = enumerate_day_kernel_row(n, n, 0.4, 0.7).unwrap();
            assert!((row.next[n] - 1.0).abs() < 1e-15);
            let row = enumerate_day_kernel_row(0, n, 0.4, 0.7).unwrap();
            assert!((row.next[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_vertices_never_move() {
        for &q in &[0.0, 0.3, 1.0] {
            let row = enumerate_day_kernel_row(1, 2, 0.5, q).unwrap();
            assert!((row.next[1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn three_vertex_row() {
        let row = enumerate_day_kernel_row(2, 3, 0.5, 0.5).unwrap();
        let want = [0.0, 0.125, 0.5, 0.375];
        for (got, want) in row.next.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_rows_sum_to_one_and_mirror() {
        for vertices in 1..=6 {
            for &(p, q) in &[(0.5, 0.3), (0.8, 0.5), (0.3, 0.8), (1.0, 0.2)] {
                let k = TransitionKernel::build(vertices, p, q).unwrap();
                for j in 0..=vertices {
                    let s: f64 = k.rows[j].iter().sum();
                    assert!((s - 1.0).abs() < 1e-12);
                    for jj in 0..=vertices {
                        let a = k.rows[j][jj];
                        let b = k.rows[vertices - j][vertices - jj];
                        assert!((a - b).abs() < 1e-12, "N={vertices} {j}->{jj}");
                    }
                }
                assert!((k.rows[0][0] - 1.0).abs() < 1e-12);
                assert!((k.rows[vertices][vertices] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn absorption_examples() {
        let a = exact_absorption(1, 1, 0.5, 0.5).unwrap();
        assert!((a.prob_plus_wins.unwrap() - 0.8).abs() < 1e-12);
        assert!((a.prob_absorbed.unwrap() - 1.0).abs() < 1e-12);

        let a = exact_absorption(0, 4, 0.3, 0.2).unwrap();
        assert_eq!(a.prob_plus_wins, Some(1.0));

        let a = exact_absorption(1, 0, 0.5, 0.5).unwrap();
        assert!(!a.absorbing_reachable);
        assert_eq!(a.prob_plus_wins, None);

        assert!(matches!(
            exact_absorption(3, 2, 0.5, 0.5),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn balanced_start_is_fair() {
        for &(p, q) in &[(0.5, 0.3), (0.8, 0.8)] {
            let a = exact_absorption(2, 0, p, q).unwrap();
            let w = a.prob_plus_wins.unwrap();
            assert!((w - 0.5 * a.prob_absorbed.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn halt_day1_examples() {
        assert!((exact_halt_day1(2, 1, 0.6, 0.0).unwrap() - 1.0).abs() < 1e-15);
        for &p in &[0.0, 0.3, 1.0] {
            assert!((exact_halt_day1(1, 1, p, 0.5).unwrap() - 0.25).abs() < 1e-15);
        }
        assert_eq!(exact_halt_day1(1, 1, 0.0, 1.0).unwrap(), 0.0);
        assert!(exact_halt_day1(0, 3, 0.5, 0.5).is_err());
        assert!(exact_halt_day1(3, 2, 0.5, 0.5).is_err());
    }

    #[test]
    fn no_flip_is_part_of_no_change() {
        let row = enumerate_day_kernel_row(3, 5, 0.6, 0.4).unwrap();
        assert!(row.no_flip() <= row.next[3] + 1e-15);
        let balanced: f64 = (0..row.flips.len().min(row.flips[0].len()))
            .map(|a| row.flips[a][a])
            .sum();
        assert!((balanced - row.next[3]).abs() < 1e-15);
    }

    #[test]
    fn agreement_examples() {
        let a = mc_agreement(80_000, 100_000, 0.8).unwrap();
        assert!(a.z_score.abs() < 1e-9 && a.pass);
        assert!(!mc_agreement(0, 100_000, 0.8).unwrap().pass);
        let a = mc_agreement(8_100, 10_000, 0.8).unwrap();
        assert!((a.z_score - 2.5).abs() < 1e-9 && a.pass);
        assert!(mc_agreement(5, 50, 0.1).is_err());
        assert!(mc_agreement(100, 100, 1.0).unwrap().pass);
    }
}
