//! Attacks on predicate k-anonymity: hash refinement of a published group,
//! the direct suppressed-bits attack, and the interval endpoint attack.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AttackOutput;
use crate::domain::{Dyadic, Expr, HashCut, Predicate};
use crate::gf2::FieldWidth;
use crate::hash::sample_hash;
use crate::mechanisms::{FamilyEntry, PredicateFamily};
use crate::{Error, Result};

/// Which admissible group an attack refines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Lowest group index.
    First,
    /// Fewest free bits for patterns, narrowest range for intervals; ties go
    /// to the lowest index. Uses only the published predicates.
    #[default]
    MostSpecific,
}

/// log2 of the number of row values a published predicate admits.
fn volume(p: &Predicate) -> f64 {
    match p.expr() {
        Expr::Pattern { pattern } => (p.width() - pattern.fixed_count()) as f64,
        Expr::Interval { lo, hi } => ((hi - lo) as f64 + 1.0).log2(),
        Expr::Equality { .. } => 0.0,
        _ => p.width() as f64,
    }
}

/// The group with `2 ≤ |x_φ| ≤ k_max` chosen by `selection`.
pub fn select_group(family: &PredicateFamily, k_max: usize, selection: Selection) -> Option<&FamilyEntry> {
    let mut admissible = family
        .entries
        .iter()
        .filter(|e| (2..=k_max as u64).contains(&e.count));
    match selection {
        Selection::First => admissible.next(),
        Selection::MostSpecific => admissible.fold(None, |best: Option<&FamilyEntry>, e| match best {
            Some(b) if volume(&b.predicate) <= volume(&e.predicate) => Some(b),
            _ => Some(e),
        }),
    }
}

/// `2^m / k` rounded half up to an integer.
pub fn hash_cut_numerator(m: u32, k: u64) -> u128 {
    let k = k as u128;
    let (q, r) = if m < 128 {
        ((1u128 << m) / k, (1u128 << m) % k)
    } else {
        // 2^128 = u128::MAX + 1
        let (q, r) = (u128::MAX / k, u128::MAX % k + 1);
        if r == k {
            (q + 1, 0)
        } else {
            (q, r)
        }
    };
    if 2 * r >= k {
        q + 1
    } else {
        q
    }
}

/// `φ ∧ (r(h(x)) < w_φ)` with `w_φ` the multiple of `2^−m` nearest `1/k_φ`.
pub fn kanon_attack<R: Rng + ?Sized>(
    family: &PredicateFamily,
    k_max: usize,
    m: u32,
    selection: Selection,
    width: u32,
    rng: &mut R,
) -> Result<AttackOutput> {
    let Some(entry) = select_group(family, k_max, selection) else {
        return Ok(AttackOutput::aborted("no group of size 2..=k_max"));
    };
    let field = FieldWidth::covering(width.max(m))?;
    let h = sample_hash(rng, field, m)?;
    let bound = Dyadic::new(hash_cut_numerator(m, entry.count), m)?;
    let q = Predicate::hash_threshold(width, HashCut::new(h, bound, true))?;
    let phi = entry.predicate.clone();
    let mut out = AttackOutput::single(Predicate::and(width, [phi.clone(), q])?);
    out.anchor = Some(phi);
    Ok(out)
}

/// `φ ∧ ¬(x_S < 2^s − ⌊2^s/k⌋)` over the `s` suppressed positions `S`, a
/// predicate that keeps about `1/k` of the group's values.
pub fn bitsuppress_direct_attack(
    family: &PredicateFamily,
    k: usize,
    k_max: usize,
    selection: Selection,
) -> Result<AttackOutput> {
    if k < 2 {
        return Err(Error::parameter(format!("direct attack needs k >= 2, got {k}")));
    }
    let Some(entry) = select_group(family, k_max, selection) else {
        return Ok(AttackOutput::aborted("no group of size 2..=k_max"));
    };
    let Expr::Pattern { pattern } = entry.predicate.expr() else {
        return Err(Error::config("direct attack reads bit-suppression patterns only"));
    };
    let free = pattern.free_positions();
    let s = free.len() as u32;
    if s == 0 {
        return Ok(AttackOutput::aborted("selected group suppresses no bits"));
    }
    let k = k as u128;
    let bound = if s < 128 {
        let t = 1u128 << s;
        t - t / k
    } else {
        u128::MAX - u128::MAX / k
    };
    let width = entry.predicate.width();
    let keep = Predicate::threshold_over(width, free, bound)?.not();
    let phi = entry.predicate.clone();
    let mut out = AttackOutput::single(Predicate::and(width, [phi.clone(), keep])?);
    out.anchor = Some(phi);
    Ok(out)
}

/// `x = a` for the lower endpoint `a` of a published interval, which is
/// itself a row of the dataset.
pub fn kanon_endpoint_attack(family: &PredicateFamily, k_max: usize, selection: Selection) -> Result<AttackOutput> {
    let Some(entry) = select_group(family, k_max, selection) else {
        return Ok(AttackOutput::aborted("no group of size 2..=k_max"));
    };
    let Expr::Interval { lo, .. } = entry.predicate.expr() else {
        return Err(Error::config("endpoint attack reads interval buckets only"));
    };
    Ok(AttackOutput::single(Predicate::equality(entry.predicate.width(), *lo)?))
}
