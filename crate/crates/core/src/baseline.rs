//! The baseline `B(n, w) = n·w·(1−w)^(n−1)` and the trivial hash adversary.
//!
//! `B(n, w)` is the probability that a fixed predicate of weight `w` isolates
//! a row of `n` i.i.d. samples. The trivial adversary reaches it without
//! looking at any release by cutting a random hash of the row at `w`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Distribution, DistributionKind, Dyadic, HashCut, Predicate};
use crate::gf2::FieldWidth;
use crate::hash::{sample_hash, HashParams};
use crate::{Error, Result};

/// Double-double arithmetic: an unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
mod dd {
    #[derive(Clone, Copy, Debug)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    const LN2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };

    #[inline]
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    #[inline]
    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }

    #[inline]
    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    impl Dd {
        pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

        pub fn from(x: f64) -> Dd {
            Dd { hi: x, lo: 0.0 }
        }

        pub fn to_f64(self) -> f64 {
            self.hi + self.lo
        }

        pub fn add(self, o: Dd) -> Dd {
            let (s, e) = two_sum(self.hi, o.hi);
            let (t, f) = two_sum(self.lo, o.lo);
            let (s, e) = quick_two_sum(s, e + t);
            let (hi, lo) = quick_two_sum(s, e + f);
            Dd { hi, lo }
        }

        pub fn neg(self) -> Dd {
            Dd {
                hi: -self.hi,
                lo: -self.lo,
            }
        }

        pub fn sub(self, o: Dd) -> Dd {
            self.add(o.neg())
        }

        pub fn mul(self, o: Dd) -> Dd {
            let (p, e) = two_prod(self.hi, o.hi);
            let e = e + (self.hi * o.lo + self.lo * o.hi);
            let (hi, lo) = quick_two_sum(p, e);
            Dd { hi, lo }
        }

        pub fn div(self, o: Dd) -> Dd {
            let q1 = self.hi / o.hi;
            let r = self.sub(o.mul(Dd::from(q1)));
            let q2 = r.hi / o.hi;
            let r = r.sub(o.mul(Dd::from(q2)));
            let q3 = r.hi / o.hi;
            let (hi, lo) = quick_two_sum(q1, q2);
            Dd { hi, lo }.add(Dd::from(q3))
        }

        fn ldexp(self, k: i32) -> Dd {
            let s = 2f64.powi(k);
            Dd {
                hi: self.hi * s,
                lo: self.lo * s,
            }
        }

        pub fn exp(self) -> Dd {
            if self.hi < -745.2 {
                return Dd::from(0.0);
            }
            // x = k·ln2 + r with |r| ≤ ln2/2, then exp(r) = exp(r/2^10)^(2^10)
            let k = (self.hi / LN2.hi).round();
            let r = self.sub(LN2.mul(Dd::from(k))).ldexp(-10);
            let mut term = Dd::ONE;
            let mut sum = Dd::ONE;
            for i in 1..=14 {
                term = term.mul(r).div(Dd::from(i as f64));
                sum = sum.add(term);
            }
            for _ in 0..10 {
                sum = sum.mul(sum);
            }
            // split the power of two so neither factor overflows
            let k = k as i32;
            sum.ldexp(k / 2).ldexp(k - k / 2)
        }

        /// `ln(1 + x)` for `x > −1`, refined by Newton steps on `exp(y) = 1 + x`.
        pub fn ln_1p(x: Dd) -> Dd {
            let target = Dd::ONE.add(x);
            let mut y = Dd::from(x.to_f64().ln_1p());
            for _ in 0..2 {
                // y ← y + (1+x)·exp(−y) − 1
                let corr = target.mul(y.neg().exp()).sub(Dd::ONE);
                y = y.add(corr);
            }
            y
        }
    }
}

use dd::Dd;

fn b_dd(n: u64, w: Dd) -> f64 {
    if w.hi == 0.0 {
        return 0.0;
    }
    if w.hi >= 1.0 {
        return if n == 1 { 1.0 } else { 0.0 };
    }
    let nf = Dd::from(n as f64);
    let log_tail = Dd::ln_1p(w.neg()).mul(Dd::from((n - 1) as f64));
    nf.mul(w).mul(log_tail.exp()).to_f64()
}

/// `B(n, w) = n·w·(1−w)^(n−1)`, evaluated in double-double precision.
pub fn b_formula(n: u64, w: f64) -> f64 {
    assert!(n >= 1, "B(n, w) needs n >= 1");
    assert!((0.0..=1.0).contains(&w), "B(n, w) needs w in [0, 1], got {w}");
    b_dd(n, Dd::from(w))
}

/// `B(n, num/den)` with the ratio carried at double-double precision.
pub fn b_formula_ratio(n: u64, num: u64, den: u64) -> f64 {
    assert!(n >= 1 && den > 0 && num <= den, "B(n, w) needs n >= 1 and w in [0, 1]");
    b_dd(n, Dd::from(num as f64).div(Dd::from(den as f64)))
}

/// Weight-class bounds for an experiment with `n` rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineQuery {
    n: u64,
    w_low: f64,
    w_high: f64,
}

impl BaselineQuery {
    pub fn new(n: u64, w_low: f64, w_high: f64) -> Result<Self> {
        let inv = 1.0 / n as f64;
        if n == 0 || !(0.0..=inv).contains(&w_low) || !(inv..=1.0).contains(&w_high) {
            return Err(Error::parameter(format!(
                "need 0 <= w_low <= 1/n <= w_high <= 1, got w_low={w_low}, n={n}, w_high={w_high}"
            )));
        }
        Ok(BaselineQuery { n, w_low, w_high })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn w_low(&self) -> f64 {
        self.w_low
    }

    pub fn w_high(&self) -> f64 {
        self.w_high
    }
}

/// `(B(n, w_low), B(n, w_high))`.
pub fn baseline_upper(q: &BaselineQuery) -> (f64, f64) {
    (b_formula(q.n, q.w_low), b_formula(q.n, q.w_high))
}

/// Which weight class a predicate targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Low,
    High,
}

/// `w ∓ 2^(1−m)` as an exact dyadic.
fn shifted_bound(w: f64, m: u32, side: Side) -> Result<Dyadic> {
    let d = Dyadic::from_f64(w)?;
    let (mut num, mut e) = (d.numerator(), d.log2_denominator());
    let k = m - 1;
    if e - k.min(e) > 127 {
        // coarsen w so the step 2^(e−k) fits; rounding moves the cut inward
        let sh = e - k - 127;
        let q = num.checked_shr(sh).unwrap_or(0);
        let inexact = q.checked_shl(sh).map_or(num != 0, |back| back != num);
        num = match side {
            Side::Low => q,
            Side::High => q + u128::from(inexact),
        };
        e -= sh;
    }
    // bring both terms over the common denominator 2^max(e, k)
    let (scaled, step, den) = if e >= k {
        (num, 1u128 << (e - k), e)
    } else {
        (num << (k - e), 1u128, k)
    };
    let out = match side {
        Side::Low => scaled.checked_sub(step),
        Side::High => scaled.checked_add(step),
    }
    .ok_or_else(|| Error::parameter("hash threshold bound out of range"))?;
    Dyadic::new(out, den)
}

/// The threshold predicate `r(h(x)) ≤ w ∓ 2·2^−m` on `row_width`-bit rows.
///
/// With min-entropy at least `5m`, the low side has weight in
/// `[w − 3·2^−m, w]` except with probability `2^−m` over `h`, and the high
/// side has weight in `[w, w + 3·2^−m]`.
pub fn lhl_predicate(row_width: u32, h: &HashParams, w: f64, side: Side) -> Result<Predicate> {
    let m = h.m();
    let edge = 2f64.powi(1 - m as i32);
    match side {
        Side::Low if w < edge => {
            return Err(Error::parameter(format!(
                "low-side target w={w} needs w >= 2^-(m-1); m={m} is too small, need m >= {}",
                required_m(w)
            )))
        }
        Side::High if w > 1.0 - edge => {
            return Err(Error::parameter(format!(
                "high-side target w={w} needs w <= 1 - 2^-(m-1); m={m} is too small, need m >= {}",
                required_m(1.0 - w)
            )))
        }
        _ => {}
    }
    let bound = shifted_bound(w, m, side)?;
    Predicate::hash_threshold(row_width, HashCut::new(*h, bound, false))
}

/// Smallest `m` with `2^−(m−1) ≤ gap`.
fn required_m(gap: f64) -> u32 {
    if gap <= 0.0 {
        return u32::MAX;
    }
    (1.0 - gap.log2()).ceil().max(1.0) as u32
}

/// Samples `h` and returns [`lhl_predicate`]; never sees any release.
pub fn trivial_hash_adversary<R: Rng + ?Sized>(
    row_width: u32,
    field: FieldWidth,
    m: u32,
    w: f64,
    side: Side,
    rng: &mut R,
) -> Result<Predicate> {
    let h = sample_hash(rng, field, m)?;
    lhl_predicate(row_width, &h, w, side)
}

/// Largest support size for which realizable weights are enumerated.
pub const REALIZABLE_SUPPORT_LIMIT: usize = 20;

/// `sup B(n, w)` over weights `w` realizable by some predicate under a small
/// categorical distribution, restricted to the class boundary `w_bound`.
pub fn realizable_baseline(dist: &Distribution, n: u64, w_bound: f64, side: Side) -> Option<f64> {
    let DistributionKind::Categorical {
        support,
        probabilities,
        ..
    } = dist.kind()
    else {
        return None;
    };
    let mut masses: Vec<(u128, f64)> = Vec::new();
    for (&v, &p) in support.iter().zip(probabilities) {
        match masses.iter_mut().find(|(u, _)| *u == v) {
            Some((_, q)) => *q += p,
            None => masses.push((v, p)),
        }
    }
    if masses.len() > REALIZABLE_SUPPORT_LIMIT {
        return None;
    }
    let k = masses.len();
    let mut best = 0f64;
    for subset in 0u32..(1 << k) {
        let w: f64 = (0..k)
            .filter(|i| subset >> i & 1 == 1)
            .map(|i| masses[i].1)
            .sum::<f64>()
            .clamp(0.0, 1.0);
        let admissible = match side {
            Side::Low => w <= w_bound,
            Side::High => w >= w_bound,
        };
        if admissible {
            best = best.max(b_formula(n, w));
        }
    }
    Some(best)
}
