//! Exact binomial numerics, model constants and the threshold formulas for
//! the initial bias.
//!
//! Everything here is pure. Probabilities that can underflow are available
//! as natural logarithms through the `ln_*` functions; the plain versions
//! simply exponentiate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::check_probability;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln(a + b)` given `ln a` and `ln b`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum(exp(x)))` over the iterator.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Stirling-series remainder `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        let nf = n as f64;
        let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        return ln_fact - (nf + 0.5) * nf.ln() + nf - 0.5 * LN_2PI;
    }
    let nf = n as f64;
    let nn = nf * nf;
    if n > 500 {
        (S0 - S1 / nn) / nf
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    }
}

/// Deviance term `x ln(x / m) + m - x`, accurate when `x` is close to `m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

fn check_k(n: u64, k: u64) -> Result<()> {
    if k > n {
        Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")))
    } else {
        Ok(())
    }
}

/// Log-pmf without argument checks (saddle-point form).
fn ln_pmf_unchecked(n: u64, p: f64, k: u64) -> f64 {
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if k == 0 {
        if n == 0 {
            return 0.0;
        }
        return if p < 0.1 { -bd0(nf, nf * q) - nf * p } else { nf * q.ln() };
    }
    if k == n {
        return if q < 0.1 { -bd0(nf, nf * p) - nf * q } else { nf * p.ln() };
    }
    let kf = k as f64;
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

/// `ln P[Bin(n, p) = k]`.
pub fn binom_log_pmf(n: u64, p: f64, k: u64) -> Result<f64> {
    check_probability("p", p)?;
    check_k(n, k)?;
    Ok(ln_pmf_unchecked(n, p, k))
}

/// `ln P[Bin(n, p) = k]` for every `k` in `0..=n`.
pub fn binom_log_pmf_table(n: u64, p: f64) -> Result<Vec<f64>> {
    check_probability("p", p)?;
    Ok((0..=n).map(|k| ln_pmf_unchecked(n, p, k)).collect())
}

/// `ln P[Bin(n, p) <= k]`, summing the lower tail directly.
pub fn binom_log_cdf(n: u64, p: f64, k: u64) -> Result<f64> {
    check_probability("p", p)?;
    check_k(n, k)?;
    Ok(log_sum_exp((0..=k).map(|i| ln_pmf_unchecked(n, p, i))))
}

/// `P[Bin(n, p) <= k]`.
pub fn binom_cdf(n: u64, p: f64, k: u64) -> Result<f64> {
    Ok(binom_log_cdf(n, p, k)?.exp().min(1.0))
}

/// `ln P[Bin(n, p) >= k]`; `k` may exceed `n`, giving `-inf`.
pub fn binom_log_upper_tail(n: u64, p: f64, k: u64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(log_sum_exp((k..=n).map(|i| ln_pmf_unchecked(n, p, i))))
}

/// Suffix sums: entry `j` is `ln P[X > j]` for `j` in `0..=n`.
fn log_strict_upper(pmf: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; pmf.len()];
    let mut acc = f64::NEG_INFINITY;
    for j in (0..pmf.len()).rev() {
        out[j] = acc;
        acc = log_add(acc, pmf[j]);
    }
    out
}

/// `ln P[Bin(big_n, big_p) > Bin(small_n, small_p)]` for independent binomials.
pub fn ln_prob_exceeds(big_n: u64, big_p: f64, small_n: u64, small_p: f64) -> Result<f64> {
    let upper = log_strict_upper(&binom_log_pmf_table(big_n, big_p)?);
    let small = binom_log_pmf_table(small_n, small_p)?;
    Ok(log_sum_exp(small.iter().enumerate().map(|(j, &lp)| {
        upper.get(j).map_or(f64::NEG_INFINITY, |&u| lp + u)
    })))
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    check_probability("p", p)?;
    check_probability("q", q)
}

fn block_sizes(n: u64, delta: i64) -> Result<(u64, u64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let plus = n as i64 + delta;
    if plus < 0 {
        return Err(Error::InvalidArgument(format!(
            "n + delta = {plus} is negative"
        )));
    }
    Ok((plus as u64, n))
}

/// `ln` of the chance that a `-` vertex turns `+` on a fresh graph with
/// `n + delta` plus and `n` minus vertices: `Bin(n + delta, q) > Bin(n - 1, p)`.
pub fn ln_flip_prob_minus_to_plus(n: u64, delta: i64, p: f64, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    let (plus, minus) = block_sizes(n, delta)?;
    ln_prob_exceeds(plus, q, minus - 1, p)
}

pub fn flip_prob_minus_to_plus(n: u64, delta: i64, p: f64, q: f64) -> Result<f64> {
    Ok(ln_flip_prob_minus_to_plus(n, delta, p, q)?.exp())
}

/// `ln` of the chance that a `+` vertex turns `-`: `Bin(n, q) > Bin(n + delta - 1, p)`.
pub fn ln_flip_prob_plus_to_minus(n: u64, delta: i64, p: f64, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    let (plus, minus) = block_sizes(n, delta)?;
    if plus == 0 {
        return Err(Error::InvalidArgument("no + vertex to flip".into()));
    }
    ln_prob_exceeds(minus, q, plus - 1, p)
}

pub fn flip_prob_plus_to_minus(n: u64, delta: i64, p: f64, q: f64) -> Result<f64> {
    Ok(ln_flip_prob_plus_to_minus(n, delta, p, q)?.exp())
}

/// `ln P[B <= A <= B + width]` with `A ~ Bin(n - 1, p)` and
/// `B ~ Bin(n + delta, q)` independent.
pub fn ln_interval_prob(n: u64, delta: i64, p: f64, q: f64, width: u64) -> Result<f64> {
    check_pq(p, q)?;
    let (plus, minus) = block_sizes(n, delta)?;
    let b = binom_log_pmf_table(plus, q)?;
    let a = binom_log_pmf_table(minus - 1, p)?;
    Ok(log_sum_exp(a.iter().enumerate().map(|(j, &la)| {
        let hi = j.min(b.len() - 1);
        let lo = j.saturating_sub(width as usize);
        if lo > hi {
            return f64::NEG_INFINITY;
        }
        la + log_sum_exp(b[lo..=hi].iter().copied())
    })))
}

pub fn interval_prob(n: u64, delta: i64, p: f64, q: f64, width: u64) -> Result<f64> {
    Ok(ln_interval_prob(n, delta, p, q, width)?.exp())
}

/// Bernoulli relative entropy `D(a || p)` in nats, with `0 ln 0 = 0`.
pub fn kl_divergence(a: f64, p: f64) -> f64 {
    fn term(x: f64, y: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    }
    term(a, p) + term(1.0 - a, 1.0 - p)
}

/// Closed-form constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    /// Coefficient of `sqrt(n ln n)` at the halt/consensus transition:
    /// `sqrt(p (2 - p - q)) / q`.
    pub h: f64,
    /// Tail exponent of a single binomial: `q^3 / (2 (1 - q) p^2)`.
    pub c: f64,
    /// Tail exponent of a binomial comparison: `q^2 / (2 p (2 - p - q))`.
    pub c_prime: f64,
}

/// `H`, `C` and `C'` for the given probabilities. Fails only when `q = 0`;
/// other vanishing denominators give `+inf`.
pub fn constants(p: f64, q: f64) -> Result<ModelConstants> {
    check_pq(p, q)?;
    if q == 0.0 {
        return Err(Error::InvalidArgument("constants are undefined at q = 0".into()));
    }
    let spread = p * (2.0 - p - q);
    Ok(ModelConstants {
        h: spread.sqrt() / q,
        c: q.powi(3) / (2.0 * (1.0 - q) * p * p),
        c_prime: q * q / (2.0 * spread),
    })
}

/// Distance `(p - q) n / q - delta` to the mean-field dominance threshold.
pub fn delta_prime(n: u64, delta: i64, p: f64, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    if q == 0.0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    Ok((p - q) / q * n as f64 - delta as f64)
}

/// Hoeffding bound `exp(-2 n (p - k/n)^2)` on `P[Bin(n, p) <= k]`, `k <= n p`.
pub fn hoeffding_upper(n: u64, p: f64, k: u64) -> Result<f64> {
    check_probability("p", p)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let nf = n as f64;
    if k as f64 > nf * p * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n p = {}", nf * p)));
    }
    let gap = p - k as f64 / nf;
    Ok((-2.0 * nf * gap * gap).exp())
}

/// Probability that a lazy nearest-neighbour walk from `start` hits `upper`
/// before `lower`, stepping right w.p. `p_right` and left w.p. `p_left`.
pub fn gamblers_ruin(p_right: f64, p_left: f64, start: i64, lower: i64, upper: i64) -> Result<f64> {
    check_probability("p_right", p_right)?;
    check_probability("p_left", p_left)?;
    if p_right + p_left > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument("p_right + p_left exceeds 1".into()));
    }
    if !(lower <= start && start <= upper) {
        return Err(Error::InvalidArgument(format!(
            "start {start} outside [{lower}, {upper}]"
        )));
    }
    if start == upper {
        return Ok(1.0);
    }
    if start == lower {
        return Ok(0.0);
    }
    if p_right == 0.0 && p_left == 0.0 {
        return Err(Error::InvalidArgument("walk never moves".into()));
    }
    if p_right == 0.0 {
        return Ok(0.0);
    }
    if p_left == 0.0 {
        return Ok(1.0);
    }
    let x = (start - lower) as f64;
    let y = (upper - lower) as f64;
    let ln_r = (p_left / p_right).ln();
    if ln_r == 0.0 {
        return Ok(x / y);
    }
    // (1 - r^x) / (1 - r^y), evaluated without overflow on either side of 1
    Ok(if ln_r < 0.0 {
        (x * ln_r).exp_m1() / (y * ln_r).exp_m1()
    } else {
        ((x - y) * ln_r).exp() * (-x * ln_r).exp_m1() / (-y * ln_r).exp_m1()
    })
}

/// Closed-form rules for the initial bias `delta(n)`.
///
/// `Unit*` variants are the sharp forms for `p = 1`, where the critical
/// coefficient is `sqrt(1 - q) / q`. All logarithms are natural.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum ThresholdRegime {
    /// Largest bias guaranteed to halt, given the value of a divergent
    /// sequence `d_n` at `n` (default `ln ln n`).
    Halt { divergent: Option<f64> },
    /// Smallest bias for a first-day win.
    FirstDay {
        #[serde(rename = "L")]
        l: f64,
    },
    /// Smallest bias for a second-day win, slack `delta` below `H`.
    SecondDay { delta: f64 },
    /// Smallest bias for a third-day win.
    ThirdDay {
        #[serde(rename = "L")]
        l: f64,
    },
    /// Largest bias that halts when `p = 1`.
    UnitHalt {
        #[serde(rename = "L")]
        l: f64,
    },
    /// Smallest second-day-win bias when `p = 1`.
    UnitSecondDay { delta: f64 },
    /// Smallest third-day-win bias when `p = 1`.
    UnitThirdDay {
        #[serde(rename = "L")]
        l: f64,
    },
    /// Conjectured sharp halting side for general `p`.
    SharpHalt {
        #[serde(rename = "L")]
        l: f64,
    },
    /// `ceil((p - q) n / q - L sqrt(n ln n))`, the sweep used in experiments.
    Experiment {
        #[serde(rename = "L")]
        l: f64,
    },
}

impl ThresholdRegime {
    pub fn name(&self) -> &'static str {
        match self {
            ThresholdRegime::Halt { .. } => "halt",
            ThresholdRegime::FirstDay { .. } => "first-day",
            ThresholdRegime::SecondDay { .. } => "second-day",
            ThresholdRegime::ThirdDay { .. } => "third-day",
            ThresholdRegime::UnitHalt { .. } => "unit-halt",
            ThresholdRegime::UnitSecondDay { .. } => "unit-second-day",
            ThresholdRegime::UnitThirdDay { .. } => "unit-third-day",
            ThresholdRegime::SharpHalt { .. } => "sharp-halt",
            ThresholdRegime::Experiment { .. } => "experiment",
        }
    }

    /// Builds a regime from its name and the optional `L` / `delta`
    /// parameters. `delta` doubles as `d_n` for `halt`.
    pub fn from_name(name: &str, l: Option<f64>, delta: Option<f64>) -> Result<Self> {
        let need_l = || {
            l.ok_or_else(|| Error::InvalidRegime(format!("regime {name} needs an L parameter")))
        };
        let need_delta = || {
            delta.ok_or_else(|| {
                Error::InvalidRegime(format!("regime {name} needs a delta parameter"))
            })
        };
        Ok(match name {
            "halt" => ThresholdRegime::Halt { divergent: delta },
            "first-day" => ThresholdRegime::FirstDay { l: need_l()? },
            "second-day" => ThresholdRegime::SecondDay { delta: need_delta()? },
            "third-day" => ThresholdRegime::ThirdDay { l: need_l()? },
            "unit-halt" => ThresholdRegime::UnitHalt { l: need_l()? },
            "unit-second-day" => ThresholdRegime::UnitSecondDay { delta: need_delta()? },
            "unit-third-day" => ThresholdRegime::UnitThirdDay { l: need_l()? },
            "sharp-halt" => ThresholdRegime::SharpHalt { l: need_l()? },
            "experiment" => ThresholdRegime::Experiment { l: need_l()? },
            other => return Err(Error::InvalidRegime(format!("unknown regime {other:?}"))),
        })
    }

    /// The `L` parameter, if the regime has one.
    pub fn l(&self) -> Option<f64> {
        match *self {
            ThresholdRegime::FirstDay { l }
            | ThresholdRegime::ThirdDay { l }
            | ThresholdRegime::UnitHalt { l }
            | ThresholdRegime::UnitThirdDay { l }
            | ThresholdRegime::SharpHalt { l }
            | ThresholdRegime::Experiment { l } => Some(l),
            _ => None,
        }
    }

    fn is_unit(&self) -> bool {
        matches!(
            self,
            ThresholdRegime::UnitHalt { .. }
                | ThresholdRegime::UnitSecondDay { .. }
                | ThresholdRegime::UnitThirdDay { .. }
        )
    }
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidRegime(format!("{name} must be positive, got {value}")))
    }
}

/// The real-valued bias of `regime` at `n`, before rounding.
pub fn threshold_value(n: u64, p: f64, q: f64, regime: &ThresholdRegime) -> Result<f64> {
    check_pq(p, q)?;
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    if q == 0.0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    if regime.is_unit() && p != 1.0 {
        return Err(Error::InvalidRegime(format!(
            "regime {} requires p = 1, got {p}",
            regime.name()
        )));
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let lnln = ln_n.ln();
    let lead = (p - q) / q * nf;
    let h = constants(p, q)?.h;
    let root = (nf * ln_n).sqrt();
    let loglog_window = (nf * lnln * lnln / ln_n).sqrt();
    Ok(match *regime {
        ThresholdRegime::Halt { divergent } => {
            let d = divergent.unwrap_or(lnln);
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidRegime(format!("d_n must be nonnegative, got {d}")));
            }
            lead - h
                * ((1.5 * nf * ln_n).sqrt()
                    + (25.0 * nf * lnln * lnln / (24.0 * ln_n)).sqrt()
                    + (nf * d / ln_n).sqrt())
        }
        ThresholdRegime::FirstDay { l } => lead + positive("L", l)? * root,
        ThresholdRegime::SecondDay { delta } => lead - (h - positive("delta", delta)?) * root,
        ThresholdRegime::ThirdDay { l } => {
            let l = positive("L", l)?;
            lead - h * (root - 1.5 * loglog_window - (l * nf / ln_n).sqrt())
        }
        ThresholdRegime::UnitHalt { l } => lead - h * root - positive("L", l)? * loglog_window,
        ThresholdRegime::UnitSecondDay { delta } => lead - (h - positive("delta", delta)?) * root,
        ThresholdRegime::UnitThirdDay { l } => {
            let l = positive("L", l)?;
            lead - h * (root - loglog_window - (l * nf / ln_n).sqrt())
        }
        ThresholdRegime::SharpHalt { l } => lead - h * root - positive("L", l)? * loglog_window,
        ThresholdRegime::Experiment { l } => {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidRegime(format!("L must be nonnegative, got {l}")));
            }
            lead - l * root
        }
    })
}

/// The bias of `regime` at `n`, rounded up.
pub fn threshold_delta(n: u64, p: f64, q: f64, regime: &ThresholdRegime) -> Result<i64> {
    Ok(threshold_value(n, p, q, regime)?.ceil() as i64)
}

/// `-ln P[Bin(n + delta, q) >= n p]` over its exponential core
/// `C delta'^2 (n + delta) / n^2`.
pub fn tail_rate_ratio(n: u64, delta: i64, p: f64, q: f64) -> Result<f64> {
    let (plus, _) = block_sizes(n, delta)?;
    let dp = delta_prime(n, delta, p, q)?;
    let c = constants(p, q)?.c;
    let k = (n as f64 * p).ceil() as u64;
    let ln_tail = binom_log_upper_tail(plus, q, k)?;
    let nf = n as f64;
    Ok(-ln_tail / (c * dp * dp * plus as f64 / (nf * nf)))
}

/// `-ln p_{-+}` over its exponential core `C' delta'^2 / n`.
pub fn flip_rate_ratio(n: u64, delta: i64, p: f64, q: f64) -> Result<f64> {
    let dp = delta_prime(n, delta, p, q)?;
    let c_prime = constants(p, q)?.c_prime;
    let ln_flip = ln_flip_prob_minus_to_plus(n, delta, p, q)?;
    Ok(-ln_flip / (c_prime * dp * dp / n as f64))
}
