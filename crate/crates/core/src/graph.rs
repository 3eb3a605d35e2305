//! Two-community random graphs and the two edge-evolution rules.
//!
//! Graphs are stored as dense upper-triangular bit rows: row `i` holds the
//! bits of the columns `j > i`, so every unordered pair lives in exactly one
//! place. Vertex indices are zero-based.
//!
//! Every resample walks the pairs row-major over `i < j`, 64 columns at a
//! time, and draws the random words for one 64-pair block before moving on to
//! the next. Blocks with no pair to resample consume no randomness, so a run
//! is reproducible bit-for-bit from the generator state.

use std::fmt;
use std::ops::Neg;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn word_count(vertices: usize) -> usize {
    vertices.div_ceil(WORD)
}

/// Mask of the valid columns of word `w` in a row of `vertices` bits.
#[inline]
fn valid_mask(vertices: usize, w: usize) -> u64 {
    let start = w * WORD;
    let remaining = vertices.saturating_sub(start);
    if remaining >= WORD {
        !0
    } else {
        (1u64 << remaining) - 1
    }
}

/// Mask of the columns `j > i` inside word `w`.
#[inline]
fn above_mask(vertices: usize, i: usize, w: usize) -> u64 {
    let first = i + 1;
    let first_word = first / WORD;
    let mask = match w.cmp(&first_word) {
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => !0u64 << (first % WORD),
        std::cmp::Ordering::Greater => !0,
    };
    mask & valid_mask(vertices, w)
}

/// Intra-community edge probability `p` and inter-community probability `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBlockParams")]
pub struct BlockParams {
    p: f64,
    q: f64,
}

#[derive(Deserialize)]
struct RawBlockParams {
    p: f64,
    q: f64,
}

impl TryFrom<RawBlockParams> for BlockParams {
    type Error = Error;

    fn try_from(raw: RawBlockParams) -> Result<Self> {
        BlockParams::new(raw.p, raw.q)
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

impl BlockParams {
    /// Validates both probabilities. `q >= p` is accepted with a warning.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        if q >= p {
            log::warn!("q = {q} >= p = {p}: outside the assortative regime q < p");
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// A binary opinion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Opinion {
    Plus,
    Minus,
}

impl Opinion {
    pub fn sign(self) -> i8 {
        match self {
            Opinion::Plus => 1,
            Opinion::Minus => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            1 => Some(Opinion::Plus),
            -1 => Some(Opinion::Minus),
            _ => None,
        }
    }
}

impl Neg for Opinion {
    type Output = Opinion;

    fn neg(self) -> Opinion {
        match self {
            Opinion::Plus => Opinion::Minus,
            Opinion::Minus => Opinion::Plus,
        }
    }
}

/// Per-vertex opinions, packed one bit per vertex (set = `+`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OpinionVector {
    len: usize,
    plus: Vec<u64>,
}

impl OpinionVector {
    /// `plus` vertices holding `+` followed by `minus` vertices holding `-`.
    pub fn from_counts(plus: usize, minus: usize) -> Self {
        let len = plus + minus;
        let mut words = vec![0u64; word_count(len)];
        for (w, word) in words.iter_mut().enumerate() {
            let start = w * WORD;
            if plus >= start + WORD {
                *word = !0;
            } else if plus > start {
                *word = (1u64 << (plus - start)) - 1;
            }
        }
        Self { len, plus: words }
    }

    pub fn from_opinions(opinions: &[Opinion]) -> Self {
        let mut v = Self::from_counts(0, opinions.len());
        for (i, &o) in opinions.iter().enumerate() {
            v.set(i, o);
        }
        v
    }

    /// Builds from `+1` / `-1` values; any other value is rejected.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let opinions = signs
            .iter()
            .map(|&s| {
                Opinion::from_sign(s)
                    .ok_or_else(|| Error::InvalidArgument(format!("opinion {s} is not +1 or -1")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_opinions(&opinions))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> Opinion {
        assert!(i < self.len, "vertex {i} out of range");
        if self.is_plus(i) {
            Opinion::Plus
        } else {
            Opinion::Minus
        }
    }

    #[inline]
    pub(crate) fn is_plus(&self, i: usize) -> bool {
        (self.plus[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, opinion: Opinion) {
        assert!(i < self.len, "vertex {i} out of range");
        let bit = 1u64 << (i % WORD);
        match opinion {
            Opinion::Plus => self.plus[i / WORD] |= bit,
            Opinion::Minus => self.plus[i / WORD] &= !bit,
        }
    }

    pub fn plus_count(&self) -> usize {
        self.plus.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn minus_count(&self) -> usize {
        self.len - self.plus_count()
    }

    /// The shared opinion if every vertex agrees.
    pub fn unanimous(&self) -> Option<Opinion> {
        let plus = self.plus_count();
        if plus == self.len {
            Some(Opinion::Plus)
        } else if plus == 0 {
            Some(Opinion::Minus)
        } else {
            None
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Opinion> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_signs(&self) -> Vec<i8> {
        self.iter().map(Opinion::sign).collect()
    }

    /// Every opinion reversed.
    pub fn negated(&self) -> Self {
        let plus = self
            .plus
            .iter()
            .enumerate()
            .map(|(w, &word)| !word & valid_mask(self.len, w))
            .collect();
        Self { len: self.len, plus }
    }

    /// Counts of `- -> +` and `+ -> -` changes going from `self` to `next`.
    pub fn flips_to(&self, next: &OpinionVector) -> (usize, usize) {
        assert_eq!(self.len, next.len);
        self.plus
            .iter()
            .zip(&next.plus)
            .fold((0, 0), |(to_plus, to_minus), (&old, &new)| {
                (
                    to_plus + (!old & new).count_ones() as usize,
                    to_minus + (old & !new).count_ones() as usize,
                )
            })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.plus
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.plus
    }
}

impl fmt::Debug for OpinionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self
            .iter()
            .map(|o| if o == Opinion::Plus { '+' } else { '-' })
            .collect();
        write!(f, "OpinionVector({s})")
    }
}

/// Undirected simple graph on `vertex_count` vertices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GraphState {
    vertices: usize,
    words: usize,
    rows: Vec<u64>,
}

impl GraphState {
    pub fn empty(vertices: usize) -> Self {
        let words = word_count(vertices);
        Self {
            vertices,
            words,
            rows: vec![0; words * vertices],
        }
    }

    pub fn complete(vertices: usize) -> Self {
        let mut g = Self::empty(vertices);
        for i in 0..vertices {
            for w in 0..g.words {
                g.rows[i * g.words + w] = above_mask(vertices, i, w);
            }
        }
        g
    }

    /// Builds a graph from an edge list. Self-loops and out-of-range
    /// endpoints are rejected; duplicates collapse.
    pub fn from_edges<I>(vertices: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(vertices);
        for (a, b) in edges {
            g.check_vertex(a)?;
            g.check_vertex(b)?;
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {a}")));
            }
            g.set_edge(a, b, true);
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.vertices {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                vertex_count: self.vertices,
            })
        }
    }

    #[inline]
    fn slot(&self, a: usize, b: usize) -> (usize, u64) {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        (i * self.words + j / WORD, 1u64 << (j % WORD))
    }

    /// Whether `{a, b}` is an edge. Always false for `a == b`.
    #[inline]
    pub fn contains(&self, a: usize, b: usize) -> bool {
        assert!(a < self.vertices && b < self.vertices, "vertex out of range");
        if a == b {
            return false;
        }
        let (idx, bit) = self.slot(a, b);
        self.rows[idx] & bit != 0
    }

    pub fn set_edge(&mut self, a: usize, b: usize, present: bool) {
        assert!(a < self.vertices && b < self.vertices, "vertex out of range");
        assert_ne!(a, b, "self-loops are not allowed");
        let (idx, bit) = self.slot(a, b);
        if present {
            self.rows[idx] |= bit;
        } else {
            self.rows[idx] &= !bit;
        }
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degree(&self, v: usize) -> usize {
        assert!(v < self.vertices, "vertex out of range");
        (0..self.vertices).filter(|&u| self.contains(u, v)).count()
    }

    /// Edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertices).flat_map(move |i| {
            self.row(i).iter().enumerate().flat_map(move |(w, &word)| {
                BitIter(word).map(move |b| (i, w * WORD + b))
            })
        })
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }
}

impl fmt::Debug for GraphState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphState")
            .field("vertex_count", &self.vertices)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

#[derive(Debug, Clone, Copy)]
enum Threshold {
    Never,
    Always,
    /// Success iff a uniform 64-bit integer is below this value.
    Below(u64),
}

impl Threshold {
    fn new(prob: f64) -> Self {
        if prob <= 0.0 {
            Threshold::Never
        } else if prob >= 1.0 {
            Threshold::Always
        } else {
            // prob * 2^64 is exact (power-of-two scaling); the cast floors.
            Threshold::Below((prob * 18_446_744_073_709_551_616.0) as u64)
        }
    }

    fn bits(self) -> u64 {
        match self {
            Threshold::Below(t) => t,
            _ => 0,
        }
    }
}

/// Draws 64 Bernoulli variables at once by comparing 64 bit-sliced uniform
/// integers against per-lane thresholds, most significant bit first. Lanes
/// in `same` use `p`, the others `q`. About `log2(64) + 2` random words are
/// consumed per call when all lanes are random.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairSampler {
    same: Threshold,
    cross: Threshold,
}

impl PairSampler {
    pub(crate) fn new(params: &BlockParams) -> Self {
        Self {
            same: Threshold::new(params.p),
            cross: Threshold::new(params.q),
        }
    }

    #[inline]
    pub(crate) fn draw<R: RngCore + ?Sized>(&self, rng: &mut R, lanes: u64, same: u64) -> u64 {
        let mut result = 0u64;
        let mut undecided = lanes;
        match self.same {
            Threshold::Always => {
                result |= undecided & same;
                undecided &= !same;
            }
            Threshold::Never => undecided &= !same,
            Threshold::Below(_) => {}
        }
        match self.cross {
            Threshold::Always => {
                result |= undecided & !same;
                undecided &= same;
            }
            Threshold::Never => undecided &= same,
            Threshold::Below(_) => {}
        }
        let tp = self.same.bits();
        let tq = self.cross.bits();
        let mut bit = 63u32;
        while undecided != 0 {
            let r = rng.next_u64();
            let t = (same & spread(tp, bit)) | (!same & spread(tq, bit));
            // first differing bit decides: uniform < threshold iff r = 0, t = 1
            result |= undecided & t & !r;
            undecided &= !(r ^ t);
            if bit == 0 {
                // uniform == threshold on every bit: not below
                break;
            }
            bit -= 1;
        }
        result
    }
}

#[inline]
fn spread(x: u64, bit: u32) -> u64 {
    0u64.wrapping_sub((x >> bit) & 1)
}

/// Mask of vertices sharing vertex `i`'s opinion, word `w`.
#[inline]
fn same_mask(opinions: &OpinionVector, i: usize, w: usize) -> u64 {
    let word = opinions.words()[w];
    if opinions.is_plus(i) {
        word
    } else {
        !word
    }
}

/// Overwrites `graph` with a fresh two-community graph for `opinions`.
pub(crate) fn resample_full_in_place<R: RngCore + ?Sized>(
    graph: &mut GraphState,
    opinions: &OpinionVector,
    sampler: &PairSampler,
    rng: &mut R,
) {
    let n = graph.vertices;
    let words = graph.words;
    for i in 0..n {
        let first_word = (i + 1) / WORD;
        let row = &mut graph.rows[i * words..(i + 1) * words];
        row[..first_word.min(words)].fill(0);
        for (w, slot) in row.iter_mut().enumerate().skip(first_word) {
            let lanes = above_mask(n, i, w);
            *slot = if lanes == 0 {
                0
            } else {
                sampler.draw(rng, lanes, same_mask(opinions, i, w))
            };
        }
    }
}

/// Resamples every pair with at least one endpoint in `changed`, keeping all
/// other pairs.
pub(crate) fn resample_touched_in_place<R: RngCore + ?Sized>(
    graph: &mut GraphState,
    new_opinions: &OpinionVector,
    changed: &[u64],
    sampler: &PairSampler,
    rng: &mut R,
) {
    if changed.iter().all(|&w| w == 0) {
        return;
    }
    let n = graph.vertices;
    let words = graph.words;
    for i in 0..n {
        let row_changed = (changed[i / WORD] >> (i % WORD)) & 1 == 1;
        let first_word = (i + 1) / WORD;
        for (w, &changed_word) in changed.iter().enumerate().skip(first_word) {
            let above = above_mask(n, i, w);
            let lanes = if row_changed { above } else { above & changed_word };
            if lanes == 0 {
                continue;
            }
            let fresh = sampler.draw(rng, lanes, same_mask(new_opinions, i, w));
            let slot = &mut graph.rows[i * words + w];
            *slot = (*slot & !lanes) | fresh;
        }
    }
}

/// Samples a two-community graph with `plus` vertices holding `+` (indices
/// `0..plus`) and `minus` vertices holding `-`.
pub fn sample_sbm<R: RngCore + ?Sized>(
    plus: usize,
    minus: usize,
    params: &BlockParams,
    rng: &mut R,
) -> Result<(GraphState, OpinionVector)> {
    if plus + minus == 0 {
        return Err(Error::EmptyGraph);
    }
    let opinions = OpinionVector::from_counts(plus, minus);
    let graph = resample_full(&opinions, params, rng)?;
    Ok((graph, opinions))
}

/// A fresh graph drawn from the two-community law of the current opinions.
pub fn resample_full<R: RngCore + ?Sized>(
    opinions: &OpinionVector,
    params: &BlockParams,
    rng: &mut R,
) -> Result<GraphState> {
    if opinions.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut graph = GraphState::empty(opinions.len());
    resample_full_in_place(&mut graph, opinions, &PairSampler::new(params), rng);
    Ok(graph)
}

/// Keeps every pair whose endpoints both kept their opinion and redraws the
/// rest from the law of the new opinions.
pub fn resample_touched<R: RngCore + ?Sized>(
    graph: &GraphState,
    old_opinions: &OpinionVector,
    new_opinions: &OpinionVector,
    params: &BlockParams,
    rng: &mut R,
) -> Result<GraphState> {
    for len in [old_opinions.len(), new_opinions.len()] {
        if len != graph.vertex_count() {
            return Err(Error::SizeMismatch {
                expected: graph.vertex_count(),
                actual: len,
            });
        }
    }
    let changed: Vec<u64> = old_opinions
        .words()
        .iter()
        .zip(new_opinions.words())
        .map(|(a, b)| a ^ b)
        .collect();
    let mut next = graph.clone();
    resample_touched_in_place(
        &mut next,
        new_opinions,
        &changed,
        &PairSampler::new(params),
        rng,
    );
    Ok(next)
}

/// Numbers of `+` and `-` neighbours of `v`.
pub fn neighbor_tally(
    graph: &GraphState,
    opinions: &OpinionVector,
    v: usize,
) -> Result<(usize, usize)> {
    if opinions.len() != graph.vertex_count() {
        return Err(Error::SizeMismatch {
            expected: graph.vertex_count(),
            actual: opinions.len(),
        });
    }
    graph.check_vertex(v)?;
    let mut plus = 0;
    let mut minus = 0;
    // columns above v
    for (w, &word) in graph.row(v).iter().enumerate() {
        let p = opinions.words()[w];
        plus += (word & p).count_ones() as usize;
        minus += (word & !p).count_ones() as usize;
    }
    // rows below v
    for u in 0..v {
        if graph.contains(u, v) {
            if opinions.is_plus(u) {
                plus += 1;
            } else {
                minus += 1;
            }
        }
    }
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn params(p: f64, q: f64) -> BlockParams {
        BlockParams::new(p, q).unwrap()
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(BlockParams::new(1.2, 0.3).is_err());
        assert!(BlockParams::new(0.5, -0.1).is_err());
        assert!(BlockParams::new(f64::NAN, 0.1).is_err());
        // q >= p only warns
        assert!(BlockParams::new(0.3, 0.5).is_ok());
    }

    #[test]
    fn deterministic_extremes() {
        let (g, o) = sample_sbm(3, 2, &params(1.0, 0.0), &mut rng(1)).unwrap();
        assert_eq!(o.plus_count(), 3);
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 2), (3, 4)]);

        let (g, _) = sample_sbm(2, 2, &params(1.0, 1.0), &mut rng(1)).unwrap();
        assert_eq!(g, GraphState::complete(4));

        let (g, _) = sample_sbm(2, 2, &params(0.0, 0.0), &mut rng(1)).unwrap();
        assert_eq!(g.edge_count(), 0);

        assert!(matches!(
            sample_sbm(0, 0, &params(0.5, 0.5), &mut rng(1)),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn full_resample_extremes() {
        let o = OpinionVector::from_signs(&[1, -1, 1, -1, -1]).unwrap();
        let g = resample_full(&o, &params(1.0, 1.0), &mut rng(3)).unwrap();
        assert_eq!(g, GraphState::complete(5));

        let o = OpinionVector::from_signs(&[1, 1, -1]).unwrap();
        let g = resample_full(&o, &params(1.0, 0.0), &mut rng(3)).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn intra_pair_frequency_within_three_sigma() {
        let o = OpinionVector::from_signs(&[1, 1, -1, -1]).unwrap();
        let pr = params(0.5, 0.3);
        let mut r = rng(7);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| resample_full(&o, &pr, &mut r).unwrap().contains(0, 1))
            .count();
        let freq = hits as f64 / trials as f64;
        let sigma = (0.25f64 / trials as f64).sqrt();
        assert!((freq - 0.5).abs() <= 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn marginals_within_four_standard_errors() {
        // 70 vertices so rows span two words
        let signs: Vec<i8> = (0..70).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect();
        let o = OpinionVector::from_signs(&signs).unwrap();
        let pr = params(0.37, 0.11);
        let mut r = rng(11);
        let trials = 2_000;
        let (mut same_hits, mut same_total, mut cross_hits, mut cross_total) = (0u64, 0u64, 0u64, 0u64);
        for _ in 0..trials {
            let g = resample_full(&o, &pr, &mut r).unwrap();
            for i in 0..70 {
                for j in (i + 1)..70 {
                    let e = g.contains(i, j) as u64;
                    if signs[i] == signs[j] {
                        same_hits += e;
                        same_total += 1;
                    } else {
                        cross_hits += e;
                        cross_total += 1;
                    }
                }
            }
        }
        for (hits, total, prob) in [(same_hits, same_total, 0.37), (cross_hits, cross_total, 0.11)] {
            let freq = hits as f64 / total as f64;
            let se = (prob * (1.0 - prob) / total as f64).sqrt();
            assert!((freq - prob).abs() <= 4.0 * se, "freq {freq} vs {prob}");
        }
    }

    #[test]
    fn touched_extremes() {
        let mut r = rng(5);
        let pr = params(1.0, 0.0);
        let (g, old) = sample_sbm(3, 3, &params(0.5, 0.5), &mut r).unwrap();
        let same = resample_touched(&g, &old, &old, &pr, &mut r).unwrap();
        assert_eq!(same, g);

        // vertex 4 flips to +: it joins the + clique, the rest is untouched
        let mut new = old.clone();
        new.set(4, Opinion::Plus);
        let next = resample_touched(&g, &old, &new, &pr, &mut r).unwrap();
        for u in 0..6 {
            if u == 4 {
                continue;
            }
            assert_eq!(next.contains(u, 4), new.get(u) == Opinion::Plus);
            for v in 0..6 {
                if v != 4 && u != v {
                    assert_eq!(next.contains(u, v), g.contains(u, v));
                }
            }
        }

        let old = OpinionVector::from_signs(&[1, -1]).unwrap();
        let new = OpinionVector::from_signs(&[1, 1]).unwrap();
        let g = GraphState::empty(2);
        let next = resample_touched(&g, &old, &new, &params(1.0, 0.4), &mut r).unwrap();
        assert!(next.contains(0, 1));
    }

    #[test]
    fn touched_rejects_length_mismatch() {
        let g = GraphState::empty(3);
        let a = OpinionVector::from_counts(2, 1);
        let b = OpinionVector::from_counts(2, 2);
        assert!(matches!(
            resample_touched(&g, &a, &b, &params(0.5, 0.5), &mut rng(0)),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn tally_examples() {
        let o = OpinionVector::from_signs(&[1, 1, -1]).unwrap();
        assert_eq!(neighbor_tally(&GraphState::complete(3), &o, 2).unwrap(), (2, 0));
        assert_eq!(neighbor_tally(&GraphState::empty(3), &o, 1).unwrap(), (0, 0));

        let path = GraphState::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let o = OpinionVector::from_signs(&[1, -1, 1]).unwrap();
        assert_eq!(neighbor_tally(&path, &o, 1).unwrap(), (2, 0));
        assert!(matches!(
            neighbor_tally(&path, &o, 3),
            Err(Error::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn from_edges_rejects_loops() {
        assert!(GraphState::from_edges(3, [(1, 1)]).is_err());
        assert!(GraphState::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn opinion_vector_basics() {
        let v = OpinionVector::from_counts(65, 3);
        assert_eq!(v.len(), 68);
        assert_eq!(v.plus_count(), 65);
        assert_eq!(v.minus_count(), 3);
        assert_eq!(v.get(64), Opinion::Plus);
        assert_eq!(v.get(65), Opinion::Minus);
        let neg = v.negated();
        assert_eq!(neg.plus_count(), 3);
        assert_eq!(v.flips_to(&neg), (3, 65));
        assert_eq!(OpinionVector::from_counts(4, 0).unanimous(), Some(Opinion::Plus));
        assert!(OpinionVector::from_signs(&[1, 0]).is_err());
    }

    proptest! {
        #[test]
        fn touched_pairs_preserved(
            seed in any::<u64>(),
            signs in prop::collection::vec(prop::bool::ANY, 1..90),
            flips in prop::collection::vec(prop::bool::ANY, 90),
            p in 0.0f64..=1.0,
            q in 0.0f64..=1.0,
        ) {
            let n = signs.len();
            let old = OpinionVector::from_signs(
                &signs.iter().map(|&b| if b { 1 } else { -1 }).collect::<Vec<_>>(),
            ).unwrap();
            let mut new = old.clone();
            for (i, &flip) in flips.iter().enumerate().take(n) {
                if flip {
                    new.set(i, -old.get(i));
                }
            }
            let pr = params(p, q);
            let mut r = rng(seed);
            let g = resample_full(&old, &pr, &mut r).unwrap();
            let next = resample_touched(&g, &old, &new, &pr, &mut r).unwrap();
            for i in 0..n {
                for j in (i + 1)..n {
                    if !flips[i] && !flips[j] {
                        prop_assert_eq!(next.contains(i, j), g.contains(i, j));
                    }
                }
            }
        }

        #[test]
        fn tallies_sum_to_degree(
            seed in any::<u64>(),
            plus in 0usize..80,
            minus in 0usize..80,
        ) {
            prop_assume!(plus + minus > 0);
            let (g, o) = sample_sbm(plus, minus, &params(0.4, 0.2), &mut rng(seed)).unwrap();
            let mut total = 0;
            for v in 0..g.vertex_count() {
                let (a, b) = neighbor_tally(&g, &o, v).unwrap();
                prop_assert_eq!(a + b, g.degree(v));
                prop_assert!(!g.contains(v, v));
                total += a + b;
            }
            prop_assert_eq!(total % 2, 0);
            prop_assert_eq!(total, 2 * g.edge_count());
        }
    }
}
