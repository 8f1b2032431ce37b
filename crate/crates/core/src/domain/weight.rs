//! Predicate weights `E_{x∼D}[p(x)]`.
//!
//! Three oracles are tried in order: a closed form for conjunctions of
//! cubes, one range, a parity constraint and at most one hash component under
//! product distributions; exhaustive enumeration when the domain or support is
//! small; Monte Carlo otherwise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::distribution::{Distribution, DistributionKind};
use super::predicate::{Expr, HashCut, Predicate};
use super::row::width_mask;
use crate::hash::HashParams;
use crate::stats::{wilson_interval, Z95};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum WeightMethod {
    ExactAnalytic,
    ExactEnumeration,
    /// Wilson 95% interval `[low, high]` with half-width `half_width`.
    MonteCarlo {
        samples: u64,
        half_width: f64,
        low: f64,
        high: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightEstimate {
    pub value: f64,
    #[serde(flatten)]
    pub method: WeightMethod,
}

impl WeightEstimate {
    fn exact(value: f64, method: WeightMethod) -> Self {
        WeightEstimate {
            value: value.clamp(0.0, 1.0),
            method,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.method, WeightMethod::MonteCarlo { .. })
    }

    /// Confidence interval; degenerate for exact methods.
    pub fn interval(&self) -> (f64, f64) {
        match self.method {
            WeightMethod::MonteCarlo { low, high, .. } => (low, high),
            _ => (self.value, self.value),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightBudget {
    /// Largest domain size `2^d` enumerated exactly.
    pub enumeration_limit: u64,
    pub mc_samples: u64,
}

impl Default for WeightBudget {
    fn default() -> Self {
        WeightBudget {
            enumeration_limit: 1 << 24,
            mc_samples: 4096,
        }
    }
}

enum HashPart<'a> {
    Cut(&'a HashCut),
    Lift(&'a HashParams, &'a Predicate),
}

/// Inclusive range on the value, or on the number read from `over`.
struct Range<'a> {
    over: Option<&'a [u32]>,
    lo: u128,
    hi: u128,
}

/// Conjunction of a cube, a parity constraint, one range and one hash part.
#[derive(Default)]
struct Conj<'a> {
    care: u128,
    bits: u128,
    parity: Option<bool>,
    range: Option<Range<'a>>,
    hash: Option<HashPart<'a>>,
    empty: bool,
}

impl<'a> Conj<'a> {
    fn fix(&mut self, care: u128, bits: u128) {
        if (self.care & care) & (self.bits ^ bits) != 0 {
            self.empty = true;
        }
        self.care |= care;
        self.bits |= bits & care;
    }

    fn restrict(&mut self, over: Option<&'a [u32]>, lo: u128, hi: u128) -> bool {
        if lo > hi {
            self.empty = true;
            return true;
        }
        match &mut self.range {
            None => {
                self.range = Some(Range { over, lo, hi });
                true
            }
            Some(r) if r.over == over => {
                r.lo = r.lo.max(lo);
                r.hi = r.hi.min(hi);
                if r.lo > r.hi {
                    self.empty = true;
                }
                true
            }
            Some(_) => false,
        }
    }

    /// Adds `e` (or `¬e`) to the conjunction; false if not representable.
    fn absorb(&mut self, e: &'a Expr, width: u32, negated: bool) -> bool {
        let full = width_mask(width);
        match e {
            Expr::Not { arg } => self.absorb(arg, width, !negated),
            Expr::And { args } if !negated => args.iter().all(|a| self.absorb(a, width, false)),
            Expr::Or { args } if negated => args.iter().all(|a| self.absorb(a, width, true)),
            Expr::And { args } | Expr::Or { args } => {
                if args.len() == 1 {
                    self.absorb(&args[0], width, negated)
                } else if args.is_empty() {
                    // ¬true or ¬false: only the empty-false case is a conjunction
                    let value_true = matches!(e, Expr::And { .. });
                    if value_true == negated {
                        self.empty = true;
                    }
                    true
                } else {
                    false
                }
            }
            Expr::BitTest { index, bit } => {
                let m = 1u128 << (width - index);
                self.fix(m, if bit ^ negated { m } else { 0 });
                true
            }
            Expr::Pattern { pattern } => {
                if !negated {
                    self.fix(pattern.care(), pattern.bits());
                    true
                } else {
                    match pattern.fixed_count() {
                        0 => {
                            self.empty = true;
                            true
                        }
                        1 => {
                            self.fix(pattern.care(), pattern.bits() ^ pattern.care());
                            true
                        }
                        _ => false,
                    }
                }
            }
            Expr::Equality { value } => {
                if !negated {
                    self.fix(full, *value);
                    true
                } else if width == 1 {
                    self.fix(1, value ^ 1);
                    true
                } else {
                    false
                }
            }
            Expr::Threshold { bound, over } => {
                let len = over.as_ref().map_or(width, |p| p.len() as u32);
                let max = width_mask(len);
                let over = over.as_deref();
                if !negated {
                    if *bound == 0 {
                        self.empty = true;
                        true
                    } else {
                        self.restrict(over, 0, (bound - 1).min(max))
                    }
                } else if len < 128 && *bound > max {
                    self.empty = true;
                    true
                } else {
                    self.restrict(over, *bound, max)
                }
            }
            Expr::Interval { lo, hi } => {
                if !negated {
                    return self.restrict(None, *lo, *hi);
                }
                match (*lo == 0, *hi == full) {
                    (true, true) => {
                        self.empty = true;
                        true
                    }
                    (true, false) => self.restrict(None, hi + 1, full),
                    (false, true) => self.restrict(None, 0, lo - 1),
                    (false, false) => false,
                }
            }
            Expr::Parity => {
                let want = !negated;
                match self.parity {
                    Some(p) if p != want => self.empty = true,
                    _ => self.parity = Some(want),
                }
                true
            }
            Expr::HashThreshold(cut) if !negated && self.hash.is_none() => {
                self.hash = Some(HashPart::Cut(cut));
                true
            }
            Expr::HashLift { hash, inner } if !negated && self.hash.is_none() => {
                self.hash = Some(HashPart::Lift(hash, inner));
                true
            }
            Expr::HashThreshold(_) | Expr::HashLift { .. } => false,
        }
    }

    fn weight(&self, width: u32, p: f64) -> Option<f64> {
        if self.empty {
            return Some(0.0);
        }
        match &self.hash {
            Some(part) => self.hash_weight(part, width, p),
            None => Some(self.product_weight(width, p)),
        }
    }

    /// Under uniform bits the hash of the cube's free part is uniform on
    /// `m` bits exactly when the free bits' images span `GF(2)^m`.
    fn hash_weight(&self, part: &HashPart<'_>, width: u32, p: f64) -> Option<f64> {
        if p != 0.5 || self.range.is_some() || self.parity.is_some() {
            return None;
        }
        let params = match part {
            HashPart::Cut(c) => c.params(),
            HashPart::Lift(h, _) => *h,
        };
        let m = params.m();
        let free = (0..width).filter(|s| (self.care >> s) & 1 == 0);
        if span_rank(free.map(|s| params.linear_image(s, width)), m) < m {
            return None;
        }
        let inner = match part {
            HashPart::Cut(c) => c.admitted_count() * 0.5f64.powi(m as i32),
            HashPart::Lift(_, inner) => expr_weight(inner.expr(), inner.width(), 0.5)?,
        };
        Some(0.5f64.powi(self.care.count_ones() as i32) * inner)
    }

    #[allow(clippy::needless_range_loop)]
    fn product_weight(&self, width: u32, p: f64) -> f64 {
        let bit_prob = |b: bool| if b { p } else { 1.0 - p };
        // range positions as value-aligned shifts, most significant first
        let range_shifts: Vec<u32> = match &self.range {
            None => Vec::new(),
            Some(Range { over: None, .. }) => (0..width).rev().collect(),
            Some(Range { over: Some(pos), .. }) => pos.iter().map(|i| width - i).collect(),
        };
        // dp[tight_lo][tight_hi][parity]
        let mut dp = [[[0f64; 2]; 2]; 2];
        dp[1][1][0] = 1.0;
        if let Some(r) = &self.range {
            let len = range_shifts.len() as u32;
            for (j, &s) in range_shifts.iter().enumerate() {
                let k = len - 1 - j as u32;
                let lo_bit = (r.lo >> k) & 1 == 1;
                let hi_bit = (r.hi >> k) & 1 == 1;
                let forced;
                let choices: &[(bool, f64)] = if (self.care >> s) & 1 == 1 {
                    let b = (self.bits >> s) & 1 == 1;
                    forced = [(b, bit_prob(b))];
                    &forced
                } else {
                    &[(false, 1.0 - p), (true, p)]
                };
                let mut next = [[[0f64; 2]; 2]; 2];
                for tl in 0..2 {
                    for th in 0..2 {
                        for par in 0..2 {
                            let cur = dp[tl][th][par];
                            if cur == 0.0 {
                                continue;
                            }
                            for &(v, q) in choices {
                                if (tl == 1 && !v && lo_bit) || (th == 1 && v && !hi_bit) {
                                    continue;
                                }
                                let ntl = (tl == 1 && v == lo_bit) as usize;
                                let nth = (th == 1 && v == hi_bit) as usize;
                                next[ntl][nth][par ^ v as usize] += cur * q;
                            }
                        }
                    }
                }
                dp = next;
            }
        }
        let mut by_parity = [0f64; 2];
        for row in &dp {
            for cell in row {
                by_parity[0] += cell[0];
                by_parity[1] += cell[1];
            }
        }
        let range_mask = range_shifts.iter().fold(0u128, |m, &s| m | (1u128 << s));
        let rest = width_mask(width) & !range_mask;
        let fixed = rest & self.care;
        let fixed_prob: f64 = (0..width)
            .filter(|s| (fixed >> s) & 1 == 1)
            .map(|s| bit_prob((self.bits >> s) & 1 == 1))
            .product();
        match self.parity {
            None => (by_parity[0] + by_parity[1]) * fixed_prob,
            Some(want) => {
                let free = (rest & !self.care).count_ones() as i32;
                let bias = (1.0 - 2.0 * p).powi(free);
                let free_even = (1.0 + bias) / 2.0;
                let fixed_par = (self.bits & fixed).count_ones() & 1 == 1;
                let total: f64 = (0..2)
                    .map(|par| {
                        let need_odd_free = want ^ fixed_par ^ (par == 1);
                        let pf = if need_odd_free { 1.0 - free_even } else { free_even };
                        by_parity[par] * pf
                    })
                    .sum();
                total * fixed_prob
            }
        }
    }
}

/// Rank over GF(2) of the given vectors, stopping early at `target`.
fn span_rank(vectors: impl Iterator<Item = u128>, target: u32) -> u32 {
    let mut basis = [0u128; 128];
    let mut rank = 0;
    for mut v in vectors {
        while v != 0 {
            let top = 127 - v.leading_zeros() as usize;
            if basis[top] == 0 {
                basis[top] = v;
                rank += 1;
                break;
            }
            v ^= basis[top];
        }
        if rank >= target {
            break;
        }
    }
    rank
}

fn expr_weight(e: &Expr, width: u32, p: f64) -> Option<f64> {
    if let Expr::Not { arg } = e {
        return expr_weight(arg, width, p).map(|w| 1.0 - w);
    }
    let mut c = Conj::default();
    if c.absorb(e, width, false) {
        if let Some(w) = c.weight(width, p) {
            return Some(w);
        }
    }
    let mut c = Conj::default();
    if c.absorb(e, width, true) {
        return c.weight(width, p).map(|w| 1.0 - w);
    }
    None
}

/// Closed-form weight under a product distribution, when one is available.
pub fn analytic_weight(p: &Predicate, dist: &Distribution) -> Option<f64> {
    let bit = dist.bit_probability()?;
    if p.width() != dist.width() {
        return None;
    }
    expr_weight(p.expr(), p.width(), bit).map(|w| w.clamp(0.0, 1.0))
}

/// Exact weight by summing over the domain or the categorical support.
pub fn enumerate_weight(p: &Predicate, dist: &Distribution, limit: u64) -> Option<f64> {
    let d = dist.width();
    match dist.kind() {
        DistributionKind::Categorical {
            support,
            probabilities,
            ..
        } => Some(
            support
                .iter()
                .zip(probabilities)
                .filter(|(&v, _)| p.eval(v))
                .map(|(_, &q)| q)
                .sum(),
        ),
        DistributionKind::UniformBits { .. } if d < 64 && (1u64 << d) <= limit => {
            let hits = (0..1u128 << d).filter(|&x| p.eval(x)).count();
            Some(hits as f64 / (1u64 << d) as f64)
        }
        DistributionKind::BernoulliProduct { .. } if d < 64 && (1u64 << d) <= limit => Some(
            (0..1u128 << d)
                .filter(|&x| p.eval(x))
                .map(|x| dist.point_probability(x))
                .sum(),
        ),
        _ => None,
    }
}

pub fn monte_carlo_weight<R: Rng + ?Sized>(
    p: &Predicate,
    dist: &Distribution,
    samples: u64,
    rng: &mut R,
) -> WeightEstimate {
    let samples = samples.max(1);
    let hits = (0..samples).filter(|_| p.eval(dist.sample_value(rng))).count() as u64;
    let (low, high) = wilson_interval(hits, samples, Z95);
    WeightEstimate {
        value: hits as f64 / samples as f64,
        method: WeightMethod::MonteCarlo {
            samples,
            half_width: (high - low) / 2.0,
            low,
            high,
        },
    }
}

/// Best available weight estimate; `rng` is used only by the Monte Carlo fallback.
pub fn predicate_weight<R: Rng + ?Sized>(
    p: &Predicate,
    dist: &Distribution,
    budget: &WeightBudget,
    rng: &mut R,
) -> Result<WeightEstimate> {
    if p.width() != dist.width() {
        return Err(Error::input(format!(
            "{}-bit predicate weighed under a {}-bit distribution",
            p.width(),
            dist.width()
        )));
    }
    if let Some(w) = analytic_weight(p, dist) {
        return Ok(WeightEstimate::exact(w, WeightMethod::ExactAnalytic));
    }
    if let Some(w) = enumerate_weight(p, dist, budget.enumeration_limit) {
        return Ok(WeightEstimate::exact(w, WeightMethod::ExactEnumeration));
    }
    Ok(monte_carlo_weight(p, dist, budget.mc_samples, rng))
}
