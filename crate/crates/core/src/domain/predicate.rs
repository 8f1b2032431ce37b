//! Evaluable predicates over fixed-width rows.
//!
//! Bit positions are numbered from 1 at the most significant end, matching the
//! "first m bits" convention of [`crate::hash`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::row::{width_mask, Dataset, Row};
use crate::hash::HashParams;
use crate::{Error, Result};

#[inline]
fn bit_at(x: u128, width: u32, index: u32) -> bool {
    (x >> (width - index)) & 1 == 1
}

/// Per-bit template over `{0, 1, ⋆}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pattern {
    width: u32,
    /// Positions that are fixed (not ⋆), as a value-aligned mask.
    care: u128,
    /// Required bits at the fixed positions; zero elsewhere.
    bits: u128,
}

impl Pattern {
    pub fn new(width: u32, care: u128, bits: u128) -> Result<Self> {
        if width == 0 || width > 128 {
            return Err(Error::config(format!("pattern width {width} outside 1..=128")));
        }
        let mask = width_mask(width);
        if care & !mask != 0 || bits & !care != 0 {
            return Err(Error::input("pattern bits must lie inside its fixed positions"));
        }
        Ok(Pattern { width, care, bits })
    }

    /// Pattern fixing every position to `v`.
    pub fn exact(width: u32, v: u128) -> Result<Self> {
        Self::new(width, width_mask(width), v)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn care(&self) -> u128 {
        self.care
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn fixed_count(&self) -> u32 {
        self.care.count_ones()
    }

    /// MSB-first indices of the ⋆ positions.
    pub fn free_positions(&self) -> Vec<u32> {
        (1..=self.width)
            .filter(|&i| (self.care >> (self.width - i)) & 1 == 0)
            .collect()
    }

    #[inline]
    pub fn matches(&self, x: u128) -> bool {
        x & self.care == self.bits
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.width {
            let s = self.width - i;
            let c = if (self.care >> s) & 1 == 0 {
                '*'
            } else if (self.bits >> s) & 1 == 1 {
                '1'
            } else {
                '0'
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let width = s.chars().count() as u32;
        let (mut care, mut bits) = (0u128, 0u128);
        for c in s.chars() {
            care <<= 1;
            bits <<= 1;
            match c {
                '0' => care |= 1,
                '1' => {
                    care |= 1;
                    bits |= 1;
                }
                '*' | '⋆' => {}
                other => return Err(Error::Format(format!("bad pattern character {other:?}"))),
            }
        }
        Pattern::new(width, care, bits)
    }
}

impl Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A dyadic rational `num / 2^log2_den` in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DyadicRepr", into = "DyadicRepr")]
pub struct Dyadic {
    num: u128,
    log2_den: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DyadicRepr {
    Exact {
        #[serde(with = "crate::serde_hex")]
        num: u128,
        log2_den: u32,
    },
    Float(f64),
}

impl TryFrom<DyadicRepr> for Dyadic {
    type Error = Error;
    fn try_from(r: DyadicRepr) -> Result<Self> {
        match r {
            DyadicRepr::Exact { num, log2_den } => Dyadic::new(num, log2_den),
            DyadicRepr::Float(w) => Dyadic::from_f64(w),
        }
    }
}

impl From<Dyadic> for DyadicRepr {
    fn from(d: Dyadic) -> Self {
        DyadicRepr::Exact {
            num: d.num,
            log2_den: d.log2_den,
        }
    }
}

impl Dyadic {
    pub fn new(num: u128, log2_den: u32) -> Result<Self> {
        let over_one = log2_den < 128 && num > (1u128 << log2_den);
        if over_one {
            return Err(Error::parameter(format!(
                "bound {num}/2^{log2_den} exceeds 1"
            )));
        }
        Ok(Dyadic { num, log2_den }.normalized())
    }

    fn normalized(mut self) -> Self {
        if self.num == 0 {
            return Dyadic { num: 0, log2_den: 0 };
        }
        let tz = self.num.trailing_zeros().min(self.log2_den);
        self.num >>= tz;
        self.log2_den -= tz;
        self
    }

    /// Exact conversion of a binary64 value in `[0, 1]`.
    pub fn from_f64(w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::parameter(format!("bound {w} outside [0, 1]")));
        }
        if w == 0.0 {
            return Ok(Dyadic { num: 0, log2_den: 0 });
        }
        let bits = w.to_bits();
        let biased = ((bits >> 52) & 0x7FF) as i32;
        let frac = (bits & ((1u64 << 52) - 1)) as u128;
        let (mant, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u128 << 52), biased - 1075)
        };
        // w = mant · 2^exp with exp <= 0 because w <= 1
        Dyadic::new(mant, (-exp) as u32)
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn log2_denominator(&self) -> u32 {
        self.log2_den
    }

    pub fn to_f64(&self) -> f64 {
        let mut v = self.num as f64;
        let mut e = self.log2_den as i32;
        while e > 0 {
            let step = e.min(1000);
            v *= 2f64.powi(-step);
            e -= step;
        }
        v
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// 256-bit unsigned value as (high, low) halves.
#[derive(Clone, Copy)]
struct U256(u128, u128);

impl U256 {
    fn shl(v: u128, s: u32) -> U256 {
        match s {
            0 => U256(0, v),
            1..=127 => U256(v >> (128 - s), v << s),
            128 => U256(v, 0),
            _ => unreachable!("shift bounded by 128"),
        }
    }

    fn sub_small(self, v: u128) -> U256 {
        let (lo, borrow) = self.1.overflowing_sub(v);
        U256(self.0 - borrow as u128, lo)
    }

    /// Floor quotient by `2^e` (saturated to `u128`) and whether a remainder exists.
    fn div_pow2(self, e: u32) -> (u128, bool) {
        let U256(hi, lo) = self;
        match e {
            0 => (if hi != 0 { u128::MAX } else { lo }, false),
            1..=127 => {
                let q_hi = hi >> e;
                let q_lo = (lo >> e) | (hi << (128 - e));
                let q = if q_hi != 0 { u128::MAX } else { q_lo };
                (q, lo & ((1u128 << e) - 1) != 0)
            }
            128..=255 => {
                let s = e - 128;
                let rem_hi = if s == 0 { 0 } else { hi & ((1u128 << s) - 1) };
                (hi >> s, lo != 0 || rem_hi != 0)
            }
            _ => (0, hi != 0 || lo != 0),
        }
    }
}

/// `r(h(x)) ≤ bound` (or `<` when strict), with `r(y) = y / (2^m − 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "HashCutRepr", into = "HashCutRepr")]
pub struct HashCut {
    params: HashParams,
    bound: Dyadic,
    strict: bool,
    /// Largest admitted hash output; `None` admits nothing.
    max_admitted: Option<u128>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HashCutRepr {
    hash: HashParams,
    bound: Dyadic,
    strict: bool,
}

impl TryFrom<HashCutRepr> for HashCut {
    type Error = Error;
    fn try_from(r: HashCutRepr) -> Result<Self> {
        Ok(HashCut::new(r.hash, r.bound, r.strict))
    }
}

impl From<HashCut> for HashCutRepr {
    fn from(c: HashCut) -> Self {
        HashCutRepr {
            hash: c.params,
            bound: c.bound,
            strict: c.strict,
        }
    }
}

impl HashCut {
    pub fn new(params: HashParams, bound: Dyadic, strict: bool) -> Self {
        let m = params.m();
        let top = width_mask(m);
        // y/(2^m−1) ≤ num/2^e  ⇔  y ≤ num·(2^m−1)/2^e
        let scaled = U256::shl(bound.num, m).sub_small(bound.num);
        let (q, rem) = scaled.div_pow2(bound.log2_den);
        let max = if strict {
            if rem {
                Some(q)
            } else {
                q.checked_sub(1)
            }
        } else {
            Some(q)
        };
        HashCut {
            params,
            bound,
            strict,
            max_admitted: max.map(|v| v.min(top)),
        }
    }

    pub fn params(&self) -> &HashParams {
        &self.params
    }

    pub fn bound(&self) -> Dyadic {
        self.bound
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn max_admitted(&self) -> Option<u128> {
        self.max_admitted
    }

    /// Number of admitted hash outputs as a float.
    pub fn admitted_count(&self) -> f64 {
        self.max_admitted.map_or(0.0, |v| v as f64 + 1.0)
    }

    #[inline]
    pub fn admits(&self, y: u128) -> bool {
        self.max_admitted.is_some_and(|max| y <= max)
    }
}

/// Predicate syntax tree. Widths live on the enclosing [`Predicate`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    /// `x < bound`, or the bits at `over` (MSB first) read as a number `< bound`.
    Threshold {
        #[serde(with = "crate::serde_hex")]
        bound: u128,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        over: Option<Vec<u32>>,
    },
    BitTest {
        index: u32,
        bit: bool,
    },
    HashThreshold(HashCut),
    Equality {
        #[serde(with = "crate::serde_hex")]
        value: u128,
    },
    Pattern {
        pattern: Pattern,
    },
    /// `lo ≤ x ≤ hi`.
    Interval {
        #[serde(with = "crate::serde_hex")]
        lo: u128,
        #[serde(with = "crate::serde_hex")]
        hi: u128,
    },
    /// XOR of all bits.
    Parity,
    /// `inner(h(x))` for a predicate on `m`-bit hash outputs.
    HashLift {
        hash: HashParams,
        inner: Box<Predicate>,
    },
    And {
        args: Vec<Expr>,
    },
    Or {
        args: Vec<Expr>,
    },
    Not {
        arg: Box<Expr>,
    },
}

impl Expr {
    #[inline]
    pub fn eval(&self, x: u128, width: u32) -> bool {
        match self {
            Expr::Threshold { bound, over: None } => x < *bound,
            Expr::Threshold {
                bound,
                over: Some(pos),
            } => project(x, width, pos) < *bound,
            Expr::BitTest { index, bit } => bit_at(x, width, *index) == *bit,
            Expr::HashThreshold(cut) => cut.admits(cut.params.eval(x, width)),
            Expr::Equality { value } => x == *value,
            Expr::Pattern { pattern } => pattern.matches(x),
            Expr::Interval { lo, hi } => *lo <= x && x <= *hi,
            Expr::Parity => x.count_ones() & 1 == 1,
            Expr::HashLift { hash, inner } => inner.eval(hash.eval(x, width)),
            Expr::And { args } => args.iter().all(|e| e.eval(x, width)),
            Expr::Or { args } => args.iter().any(|e| e.eval(x, width)),
            Expr::Not { arg } => !arg.eval(x, width),
        }
    }

    fn validate(&self, width: u32) -> Result<()> {
        let mask = width_mask(width);
        let fits = |v: u128| v & !mask == 0;
        match self {
            Expr::Threshold { bound, over } => {
                let len = match over {
                    None => width,
                    Some(pos) => {
                        validate_positions(pos, width)?;
                        pos.len() as u32
                    }
                };
                if len < 128 && *bound > (1u128 << len) {
                    return Err(Error::input(format!(
                        "threshold {bound} exceeds 2^{len}"
                    )));
                }
            }
            Expr::BitTest { index, .. } => {
                if *index == 0 || *index > width {
                    return Err(Error::input(format!(
                        "bit index {index} outside 1..={width}"
                    )));
                }
            }
            Expr::HashThreshold(cut) => {
                if !cut.params.accepts(width) {
                    return Err(Error::input(format!(
                        "hash field of {} bits cannot take {width}-bit rows",
                        cut.params.field().bits()
                    )));
                }
            }
            Expr::Equality { value } => {
                if !fits(*value) {
                    return Err(Error::input(format!("{value:#x} wider than {width} bits")));
                }
            }
            Expr::Pattern { pattern } => {
                if pattern.width != width {
                    return Err(Error::input(format!(
                        "pattern of width {} in a {width}-bit predicate",
                        pattern.width
                    )));
                }
            }
            Expr::Interval { lo, hi } => {
                if lo > hi || !fits(*hi) {
                    return Err(Error::input(format!("bad interval [{lo:#x}, {hi:#x}]")));
                }
            }
            Expr::Parity => {}
            Expr::HashLift { hash, inner } => {
                if !hash.accepts(width) || inner.width != hash.m() {
                    return Err(Error::input(format!(
                        "hash lift from {width} bits to {} does not fit inner width {}",
                        hash.m(),
                        inner.width
                    )));
                }
                inner.expr.validate(inner.width)?;
            }
            Expr::And { args } | Expr::Or { args } => {
                for a in args {
                    a.validate(width)?;
                }
            }
            Expr::Not { arg } => arg.validate(width)?,
        }
        Ok(())
    }
}

fn validate_positions(pos: &[u32], width: u32) -> Result<()> {
    if pos.is_empty() || pos.len() > 128 {
        return Err(Error::input("projection needs 1..=128 positions"));
    }
    let mut seen = 0u128;
    for &i in pos {
        if i == 0 || i > width {
            return Err(Error::input(format!("bit index {i} outside 1..={width}")));
        }
        let b = 1u128 << (i - 1);
        if seen & b != 0 {
            return Err(Error::input(format!("bit index {i} repeated")));
        }
        seen |= b;
    }
    Ok(())
}

#[inline]
fn project(x: u128, width: u32, pos: &[u32]) -> u128 {
    pos.iter()
        .fold(0u128, |acc, &i| (acc << 1) | bit_at(x, width, i) as u128)
}

/// A predicate on `width`-bit rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PredicateRepr", into = "PredicateRepr")]
pub struct Predicate {
    width: u32,
    expr: Expr,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredicateRepr {
    width: u32,
    expr: Expr,
}

impl TryFrom<PredicateRepr> for Predicate {
    type Error = Error;
    fn try_from(r: PredicateRepr) -> Result<Self> {
        Predicate::new(r.width, r.expr)
    }
}

impl From<Predicate> for PredicateRepr {
    fn from(p: Predicate) -> Self {
        PredicateRepr {
            width: p.width,
            expr: p.expr,
        }
    }
}

impl Predicate {
    pub fn new(width: u32, expr: Expr) -> Result<Self> {
        if width == 0 || width > 128 {
            return Err(Error::config(format!("predicate width {width} outside 1..=128")));
        }
        expr.validate(width)?;
        Ok(Predicate { width, expr })
    }

    pub fn threshold(width: u32, bound: u128) -> Result<Self> {
        Self::new(width, Expr::Threshold { bound, over: None })
    }

    /// Threshold on the number formed by `positions` read MSB first.
    pub fn threshold_over(width: u32, positions: Vec<u32>, bound: u128) -> Result<Self> {
        Self::new(
            width,
            Expr::Threshold {
                bound,
                over: Some(positions),
            },
        )
    }

    pub fn bit_test(width: u32, index: u32, bit: bool) -> Result<Self> {
        Self::new(width, Expr::BitTest { index, bit })
    }

    pub fn hash_threshold(width: u32, cut: HashCut) -> Result<Self> {
        Self::new(width, Expr::HashThreshold(cut))
    }

    pub fn equality(width: u32, value: u128) -> Result<Self> {
        Self::new(width, Expr::Equality { value })
    }

    pub fn pattern(pattern: Pattern) -> Self {
        Predicate {
            width: pattern.width,
            expr: Expr::Pattern { pattern },
        }
    }

    pub fn interval(width: u32, lo: u128, hi: u128) -> Result<Self> {
        Self::new(width, Expr::Interval { lo, hi })
    }

    pub fn parity(width: u32) -> Result<Self> {
        Self::new(width, Expr::Parity)
    }

    pub fn hash_lift(width: u32, hash: HashParams, inner: Predicate) -> Result<Self> {
        Self::new(
            width,
            Expr::HashLift {
                hash,
                inner: Box::new(inner),
            },
        )
    }

    pub fn and(width: u32, parts: impl IntoIterator<Item = Predicate>) -> Result<Self> {
        Ok(Predicate {
            width,
            expr: Expr::And {
                args: Self::unwrap_parts(width, parts)?,
            },
        })
    }

    pub fn or(width: u32, parts: impl IntoIterator<Item = Predicate>) -> Result<Self> {
        Ok(Predicate {
            width,
            expr: Expr::Or {
                args: Self::unwrap_parts(width, parts)?,
            },
        })
    }

    fn unwrap_parts(width: u32, parts: impl IntoIterator<Item = Predicate>) -> Result<Vec<Expr>> {
        parts
            .into_iter()
            .map(|p| {
                if p.width == width {
                    Ok(p.expr)
                } else {
                    Err(Error::input(format!(
                        "cannot combine a {}-bit predicate into a {width}-bit one",
                        p.width
                    )))
                }
            })
            .collect()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Predicate {
            width: self.width,
            expr: Expr::Not {
                arg: Box::new(self.expr),
            },
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Evaluates on a raw value assumed to fit the predicate width.
    #[inline]
    pub fn eval(&self, x: u128) -> bool {
        self.expr.eval(x, self.width)
    }

    pub fn eval_row(&self, row: &Row) -> Result<bool> {
        if row.width() != self.width {
            return Err(Error::input(format!(
                "{}-bit row given to a {}-bit predicate",
                row.width(),
                self.width
            )));
        }
        Ok(self.eval(row.value()))
    }

    fn check_dataset(&self, x: &Dataset) -> Result<()> {
        if x.width() != self.width {
            return Err(Error::input(format!(
                "{}-bit dataset given to a {}-bit predicate",
                x.width(),
                self.width
            )));
        }
        Ok(())
    }

    /// `|x_p|`: rows of `x` satisfying the predicate.
    pub fn count_matches(&self, x: &Dataset) -> Result<usize> {
        self.check_dataset(x)?;
        Ok(x.rows().iter().filter(|&&r| self.eval(r)).count())
    }

    /// Index of the only matching row, if exactly one row matches.
    pub fn isolated_row(&self, x: &Dataset) -> Result<Option<usize>> {
        self.check_dataset(x)?;
        let mut found = None;
        for (i, &r) in x.rows().iter().enumerate() {
            if self.eval(r) {
                if found.is_some() {
                    return Ok(None);
                }
                found = Some(i);
            }
        }
        Ok(found)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, args: &[Expr], op: &str, empty: &str) -> fmt::Result {
            if args.is_empty() {
                return write!(f, "{empty}");
            }
            write!(f, "(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")
        }
        match self {
            Expr::Threshold { bound, over: None } => write!(f, "x<{bound:#x}"),
            Expr::Threshold {
                bound,
                over: Some(pos),
            } => write!(f, "x{pos:?}<{bound:#x}"),
            Expr::BitTest { index, bit } => write!(f, "x[{index}]={}", *bit as u8),
            Expr::HashThreshold(c) => write!(
                f,
                "r(h(x)){}{}",
                if c.strict { "<" } else { "<=" },
                c.bound
            ),
            Expr::Equality { value } => write!(f, "x={value:#x}"),
            Expr::Pattern { pattern } => write!(f, "x~{pattern}"),
            Expr::Interval { lo, hi } => write!(f, "x in [{lo:#x},{hi:#x}]"),
            Expr::Parity => write!(f, "parity(x)"),
            Expr::HashLift { inner, .. } => write!(f, "lift({})", inner.expr),
            Expr::And { args } => join(f, args, "&", "true"),
            Expr::Or { args } => join(f, args, "|", "false"),
            Expr::Not { arg } => write!(f, "!{arg}"),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}
