//! Predicate k-anonymizers: bit suppression and interval buckets.
//!
//! Rows are grouped `k` at a time; with `k ∤ n` the trailing `n mod k`
//! rows are dropped and reported.

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Pattern, Predicate};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub predicate: Predicate,
    /// `|x_φ|` over the full dataset.
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateFamily {
    pub entries: Vec<FamilyEntry>,
    /// Trailing rows left out of every group.
    pub dropped: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KAnonVariant {
    BitSuppression,
    IntervalBucket,
}

/// Anonymizer settings; `k_max` is the claimed bound on the smallest group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KAnonConfig {
    pub k: usize,
    pub k_max: usize,
    pub variant: KAnonVariant,
}

impl KAnonConfig {
    pub fn new(k: usize, k_max: usize, n: usize, variant: KAnonVariant) -> Result<Self> {
        if !(2 <= k && k <= k_max && k_max <= n) {
            return Err(Error::config(format!(
                "k-anonymity needs 2 <= k <= k_max <= n, got k={k}, k_max={k_max}, n={n}"
            )));
        }
        Ok(KAnonConfig { k, k_max, variant })
    }

    pub fn run(&self, x: &Dataset) -> Result<PredicateFamily> {
        match self.variant {
            KAnonVariant::BitSuppression => bit_suppress_kanon(x, self.k),
            KAnonVariant::IntervalBucket => interval_bucket_kanon(x, self.k),
        }
    }
}

fn check_k(x: &Dataset, k: usize) -> Result<()> {
    if k < 2 || k > x.len() {
        return Err(Error::parameter(format!(
            "k-anonymity needs 2 <= k <= n, got k={k}, n={}",
            x.len()
        )));
    }
    Ok(())
}

/// Consecutive groups of `k` rows in index order; each group publishes the
/// pattern keeping the bits all its rows agree on.
pub fn bit_suppress_kanon(x: &Dataset, k: usize) -> Result<PredicateFamily> {
    check_k(x, k)?;
    let width = x.width();
    let full = if width == 128 { u128::MAX } else { (1u128 << width) - 1 };
    let patterns: Vec<Pattern> = x
        .rows()
        .chunks_exact(k)
        .map(|g| {
            let disagree = g.iter().fold(0u128, |acc, &r| acc | (r ^ g[0]));
            let care = full & !disagree;
            Pattern::new(width, care, g[0] & care).expect("group pattern fits the width")
        })
        .collect();
    let entries = patterns
        .into_iter()
        .map(|p| FamilyEntry {
            count: x.rows().iter().filter(|&&r| p.matches(r)).count() as u64,
            predicate: Predicate::pattern(p),
        })
        .collect();
    Ok(PredicateFamily {
        entries,
        dropped: x.len() % k,
    })
}

/// Sorts rows (ties by original index), then publishes `[min, max]` of each
/// consecutive group of `k`.
pub fn interval_bucket_kanon(x: &Dataset, k: usize) -> Result<PredicateFamily> {
    check_k(x, k)?;
    let mut sorted = x.rows().to_vec();
    sorted.sort();
    let kept = sorted.len() - sorted.len() % k;
    let entries = sorted[..kept]
        .chunks_exact(k)
        .map(|g| {
            let (lo, hi) = (g[0], g[k - 1]);
            let count = (sorted.partition_point(|&r| r <= hi) - sorted.partition_point(|&r| r < lo)) as u64;
            Ok(FamilyEntry {
                predicate: Predicate::interval(x.width(), lo, hi)?,
                count,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PredicateFamily {
        entries,
        dropped: x.len() % k,
    })
}
