//! Adversaries: functions from a release (and a generator) to predicates.

mod counting;
mod kanon;

pub use counting::{
    bit_queries, counting_attack_queries, counting_attack_reconstruct, full_pso_attack,
    masked_counting_attack, masked_counting_reconstruct, round_counts,
};
pub use kanon::{
    bitsuppress_direct_attack, hash_cut_numerator, kanon_attack, kanon_endpoint_attack, select_group,
    Selection,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{lhl_predicate, Side};
use crate::domain::{analytic_weight, enumerate_weight, Distribution, Pattern, Predicate};
use crate::gf2::FieldWidth;
use crate::hash::sample_hash;
use crate::mechanisms::{Key, MechanismOutput};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Outcome {
    Single(Predicate),
    /// One predicate per row, for full singling out.
    Full(Vec<Predicate>),
    Aborted(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutput {
    pub outcome: Outcome,
    /// The published predicate an attack refined, when its weight is what
    /// makes the attack admissible.
    pub anchor: Option<Predicate>,
}

impl AttackOutput {
    pub fn single(p: Predicate) -> Self {
        AttackOutput {
            outcome: Outcome::Single(p),
            anchor: None,
        }
    }

    pub fn aborted(reason: impl Into<String>) -> Self {
        AttackOutput {
            outcome: Outcome::Aborted(reason.into()),
            anchor: None,
        }
    }

    pub fn is_aborted(&self) -> bool {
        matches!(self.outcome, Outcome::Aborted(_))
    }

    fn map_predicates(self, mut f: impl FnMut(Predicate) -> Result<Predicate>) -> Result<Self> {
        let outcome = match self.outcome {
            Outcome::Single(p) => Outcome::Single(f(p)?),
            Outcome::Full(ps) => Outcome::Full(ps.into_iter().map(&mut f).collect::<Result<_>>()?),
            a @ Outcome::Aborted(_) => a,
        };
        let anchor = self.anchor.map(f).transpose()?;
        Ok(AttackOutput { outcome, anchor })
    }
}

/// `c ⊕ s`, the low `m` bits of the last row, as an exact-match predicate.
pub fn extenc_attack(key: Option<Key>, ciphertext: Option<Key>, width: u32) -> Result<AttackOutput> {
    let (Some(s), Some(c)) = (key, ciphertext) else {
        return Ok(AttackOutput::aborted("extraction failed"));
    };
    if s.width != c.width || s.width > width {
        return Err(Error::input("key and ciphertext widths disagree with the rows"));
    }
    let m = s.width;
    let low = s.value ^ c.value;
    let p = if m == width {
        Predicate::equality(width, low)?
    } else {
        Predicate::pattern(Pattern::new(width, (1u128 << m) - 1, low)?)
    };
    Ok(AttackOutput::single(p))
}

/// What an adversary knows besides the release.
#[derive(Clone, Copy, Debug)]
pub struct AttackContext<'a> {
    /// Row width of the dataset the mechanism saw.
    pub width: u32,
    pub n: u64,
    pub w_low: f64,
    pub w_high: f64,
    /// Weight class the attack targets.
    pub class: Side,
    /// Present only when the adversary is told the row distribution.
    pub distribution: Option<&'a Distribution>,
    /// Group parameters of the k-anonymizer, when one produced the release.
    pub k: Option<usize>,
    pub k_max: Option<usize>,
}

/// Registry names with a one-line description each.
pub const ADVERSARIES: &[(&str, &str)] = &[
    ("trivial-hash", "hash threshold of the target weight; ignores the release"),
    ("counting", "slice count plus per-bit counts reconstruct an isolated row"),
    ("counting-masked", "counting attack with every query ORed with a parity mask"),
    ("full-pso", "one bit conjunction per released row"),
    ("ext-enc", "decrypts the last row's low bits with the released key"),
    ("kanon-hash", "refines a published group with a hash threshold of weight 1/k"),
    ("kanon-suppress-direct", "keeps about 1/k of a pattern's suppressed values"),
    ("kanon-endpoint", "equality with a published interval endpoint"),
];

/// Draws of `h` an adversary that knows the distribution may try.
const KNOWN_DISTRIBUTION_RESAMPLES: usize = 16;

/// A configured adversary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Adversary {
    TrivialHash {
        m: u32,
        /// The experiment's weight class when absent.
        #[serde(default)]
        side: Option<Side>,
        /// Field width in bits; the smallest covering field when absent.
        #[serde(default)]
        field: Option<u32>,
    },
    Counting {
        #[serde(default = "one")]
        r: u32,
    },
    CountingMasked {
        #[serde(default = "one")]
        r: u32,
    },
    FullPso,
    ExtEnc,
    KanonHash {
        m: u32,
        #[serde(default)]
        k_max: Option<usize>,
        #[serde(default)]
        selection: Selection,
    },
    KanonSuppressDirect {
        #[serde(default)]
        k_max: Option<usize>,
        #[serde(default)]
        selection: Selection,
    },
    KanonEndpoint {
        #[serde(default)]
        k_max: Option<usize>,
        #[serde(default)]
        selection: Selection,
    },
}

fn one() -> u32 {
    1
}

fn mismatch(adv: &Adversary, out: &MechanismOutput) -> Error {
    Error::config(format!("adversary {} cannot read {} output", adv.name(), out.kind()))
}

impl Adversary {
    pub fn name(&self) -> &'static str {
        match self {
            Adversary::TrivialHash { .. } => "trivial-hash",
            Adversary::Counting { .. } => "counting",
            Adversary::CountingMasked { .. } => "counting-masked",
            Adversary::FullPso => "full-pso",
            Adversary::ExtEnc => "ext-enc",
            Adversary::KanonHash { .. } => "kanon-hash",
            Adversary::KanonSuppressDirect { .. } => "kanon-suppress-direct",
            Adversary::KanonEndpoint { .. } => "kanon-endpoint",
        }
    }

    /// The count queries this adversary expects the mechanism to answer on
    /// `width`-bit rows, if it plans any.
    pub fn planned_queries(&self, n: u64, width: u32) -> Result<Option<Vec<Predicate>>> {
        Ok(match self {
            Adversary::Counting { r } => Some(counting_attack_queries(n, width, *r)?),
            Adversary::CountingMasked { r } => Some(masked_counting_attack(n, width, *r)?),
            Adversary::FullPso => Some(bit_queries(width, width)?),
            _ => None,
        })
    }

    fn k_max(&self, given: Option<usize>, ctx: &AttackContext) -> Result<usize> {
        given
            .or(ctx.k_max)
            .ok_or_else(|| Error::config(format!("adversary {} needs k_max", self.name())))
    }

    pub fn attack<R: Rng + ?Sized>(
        &self,
        out: &MechanismOutput,
        ctx: &AttackContext,
        rng: &mut R,
    ) -> Result<AttackOutput> {
        if let Adversary::TrivialHash { m, side, field } = self {
            return trivial_hash(*m, side.unwrap_or(ctx.class), *field, ctx, rng);
        }
        if let MechanismOutput::HashLifted { hash, inner } = out {
            let inner_ctx = AttackContext {
                width: hash.m(),
                distribution: None,
                ..*ctx
            };
            return self
                .attack(inner, &inner_ctx, rng)?
                .map_predicates(|p| Predicate::hash_lift(ctx.width, *hash, p));
        }
        match (self, out) {
            (Adversary::Counting { r }, MechanismOutput::Counts(c)) => {
                let qs = counting_attack_queries(ctx.n, ctx.width, *r)?;
                counting_attack_reconstruct(c, &qs, ctx.width)
            }
            (Adversary::Counting { r }, MechanismOutput::NoisyCounts { values, .. }) => {
                let qs = counting_attack_queries(ctx.n, ctx.width, *r)?;
                counting_attack_reconstruct(&round_counts(values), &qs, ctx.width)
            }
            (Adversary::CountingMasked { r }, MechanismOutput::MaskedCounts(c)) => {
                let qs = masked_counting_attack(ctx.n, ctx.width, *r)?;
                masked_counting_reconstruct(c, &qs, ctx.width)
            }
            (Adversary::CountingMasked { r }, MechanismOutput::Counts(c)) => {
                let qs = masked_counting_attack(ctx.n, ctx.width, *r)?;
                let c: Vec<Option<u64>> = c.iter().copied().map(Some).collect();
                masked_counting_reconstruct(&c, &qs, ctx.width)
            }
            (Adversary::FullPso, MechanismOutput::BitMatrix(m)) => full_pso_attack(m, ctx.width),
            (Adversary::ExtEnc, MechanismOutput::ExtEnc { key, ciphertext }) => {
                extenc_attack(*key, *ciphertext, ctx.width)
            }
            // a bare key carries no message to decrypt
            (Adversary::ExtEnc, MechanismOutput::KeyOrBot(_)) => {
                Ok(AttackOutput::aborted("no ciphertext released"))
            }
            (Adversary::KanonHash { m, k_max, selection }, MechanismOutput::PredicateFamily(f)) => {
                kanon_attack(f, self.k_max(*k_max, ctx)?, *m, *selection, ctx.width, rng)
            }
            (Adversary::KanonSuppressDirect { k_max, selection }, MechanismOutput::PredicateFamily(f)) => {
                let k = ctx
                    .k
                    .ok_or_else(|| Error::config("kanon-suppress-direct needs the anonymizer's k"))?;
                bitsuppress_direct_attack(f, k, self.k_max(*k_max, ctx)?, *selection)
            }
            (Adversary::KanonEndpoint { k_max, selection }, MechanismOutput::PredicateFamily(f)) => {
                kanon_endpoint_attack(f, self.k_max(*k_max, ctx)?, *selection)
            }
            _ => Err(mismatch(self, out)),
        }
    }
}

/// The hash threshold adversary; with the distribution in `ctx` it redraws
/// `h` until the exact weight lands within `3·2^−m` of the target.
fn trivial_hash<R: Rng + ?Sized>(
    m: u32,
    side: Side,
    field: Option<u32>,
    ctx: &AttackContext,
    rng: &mut R,
) -> Result<AttackOutput> {
    let field = match field {
        Some(bits) => FieldWidth::new(bits)?,
        None => FieldWidth::covering(ctx.width.max(m))?,
    };
    let w = match side {
        Side::Low => ctx.w_low,
        Side::High => ctx.w_high,
    };
    let slack = 3.0 * 2f64.powi(-(m as i32));
    let (lo, hi) = match side {
        Side::Low => (w - slack, w),
        Side::High => (w, w + slack),
    };
    let tries = if ctx.distribution.is_some() {
        KNOWN_DISTRIBUTION_RESAMPLES
    } else {
        1
    };
    let mut last = None;
    for _ in 0..tries {
        let h = sample_hash(rng, field, m)?;
        let p = lhl_predicate(ctx.width, &h, w, side)?;
        if let Some(dist) = ctx.distribution {
            let exact = analytic_weight(&p, dist).or_else(|| enumerate_weight(&p, dist, 1 << 24));
            if exact.is_some_and(|v| (lo..=hi).contains(&v)) {
                return Ok(AttackOutput::single(p));
            }
        }
        last = Some(p);
    }
    Ok(AttackOutput::single(last.expect("at least one draw")))
}
