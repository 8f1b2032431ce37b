use rand::distributions::{Distribution as _, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::row::{width_mask, Dataset, Row, MAX_WIDTH};
use crate::{Error, Result};

/// Row sources. Every variant is i.i.d. across rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionKind {
    UniformBits {
        d: u32,
    },
    /// Each bit independently 1 with probability `p`.
    BernoulliProduct {
        d: u32,
        p: f64,
    },
    Categorical {
        d: u32,
        #[serde(with = "crate::serde_hex::vec")]
        support: Vec<u128>,
        probabilities: Vec<f64>,
    },
}

/// A validated [`DistributionKind`] with its sampler prepared.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "DistributionKind", into = "DistributionKind")]
pub struct Distribution {
    kind: DistributionKind,
    #[serde(skip)]
    categorical: Option<WeightedIndex<f64>>,
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl TryFrom<DistributionKind> for Distribution {
    type Error = Error;
    fn try_from(kind: DistributionKind) -> Result<Self> {
        Distribution::new(kind)
    }
}

impl From<Distribution> for DistributionKind {
    fn from(d: Distribution) -> Self {
        d.kind
    }
}

const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

impl Distribution {
    pub fn new(kind: DistributionKind) -> Result<Self> {
        let d = match &kind {
            DistributionKind::UniformBits { d } => *d,
            DistributionKind::BernoulliProduct { d, p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::config(format!("bit probability {p} outside [0, 1]")));
                }
                *d
            }
            DistributionKind::Categorical {
                d,
                support,
                probabilities,
            } => {
                if support.is_empty() || support.len() != probabilities.len() {
                    return Err(Error::config(
                        "categorical support and probabilities must be non-empty and equal length",
                    ));
                }
                if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::config("categorical probabilities must lie in [0, 1]"));
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                    return Err(Error::config(format!(
                        "categorical probabilities sum to {total}, not 1"
                    )));
                }
                if support.iter().any(|&v| v & !width_mask(*d) != 0) {
                    return Err(Error::config(format!("support row wider than {d} bits")));
                }
                *d
            }
        };
        if d == 0 || d > MAX_WIDTH {
            return Err(Error::config(format!("row width {d} outside 1..={MAX_WIDTH}")));
        }
        let categorical = match &kind {
            DistributionKind::Categorical { probabilities, .. } => Some(
                WeightedIndex::new(probabilities.iter().copied())
                    .map_err(|e| Error::config(format!("categorical weights: {e}")))?,
            ),
            _ => None,
        };
        Ok(Distribution { kind, categorical })
    }

    pub fn uniform(d: u32) -> Result<Self> {
        Self::new(DistributionKind::UniformBits { d })
    }

    pub fn bernoulli(d: u32, p: f64) -> Result<Self> {
        Self::new(DistributionKind::BernoulliProduct { d, p })
    }

    pub fn categorical(d: u32, support: Vec<u128>, probabilities: Vec<f64>) -> Result<Self> {
        Self::new(DistributionKind::Categorical {
            d,
            support,
            probabilities,
        })
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn width(&self) -> u32 {
        match self.kind {
            DistributionKind::UniformBits { d }
            | DistributionKind::BernoulliProduct { d, .. }
            | DistributionKind::Categorical { d, .. } => d,
        }
    }

    /// Per-bit probability of a one, for product distributions.
    pub(crate) fn bit_probability(&self) -> Option<f64> {
        match self.kind {
            DistributionKind::UniformBits { .. } => Some(0.5),
            DistributionKind::BernoulliProduct { p, .. } => Some(p),
            DistributionKind::Categorical { .. } => None,
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, DistributionKind::UniformBits { .. })
    }

    #[inline]
    pub fn sample_value<R: Rng + ?Sized>(&self, rng: &mut R) -> u128 {
        match &self.kind {
            DistributionKind::UniformBits { d } => rng.gen::<u128>() & width_mask(*d),
            DistributionKind::BernoulliProduct { d, p } => {
                if *p >= 1.0 {
                    return width_mask(*d);
                }
                // one 64-bit draw per bit: bit = (u < p·2^64)
                let cut = (p * 18_446_744_073_709_551_616.0) as u64;
                let mut v = 0u128;
                for _ in 0..*d {
                    v = (v << 1) | (rng.next_u64() < cut) as u128;
                }
                v
            }
            DistributionKind::Categorical { support, .. } => {
                let idx = self
                    .categorical
                    .as_ref()
                    .expect("categorical sampler prepared at construction")
                    .sample(rng);
                support[idx]
            }
        }
    }

    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R) -> Row {
        Row::new(self.sample_value(rng), self.width()).expect("sampler respects width")
    }

    /// Probability mass of a single row value.
    pub fn point_probability(&self, v: u128) -> f64 {
        match &self.kind {
            DistributionKind::UniformBits { d } => 2f64.powi(-(*d as i32)),
            DistributionKind::BernoulliProduct { d, p } => {
                let ones = v.count_ones() as i32;
                p.powi(ones) * (1.0 - p).powi(*d as i32 - ones)
            }
            DistributionKind::Categorical {
                support,
                probabilities,
                ..
            } => support
                .iter()
                .zip(probabilities)
                .filter(|(&s, _)| s == v)
                .map(|(_, &p)| p)
                .sum(),
        }
    }
}

/// Draws `n` i.i.d. rows.
pub fn sample_dataset<R: Rng + ?Sized>(dist: &Distribution, n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::input("dataset size n must be at least 1"));
    }
    let rows = (0..n).map(|_| dist.sample_value(rng)).collect();
    Ok(Dataset::from_parts_unchecked(dist.width(), rows))
}

/// Min-entropy in bits: `−log2` of the most likely row's probability.
pub fn min_entropy(dist: &Distribution) -> f64 {
    match &dist.kind {
        DistributionKind::UniformBits { d } => *d as f64,
        DistributionKind::BernoulliProduct { d, p } => *d as f64 * -p.max(1.0 - p).log2(),
        DistributionKind::Categorical {
            support,
            probabilities,
            ..
        } => {
            // duplicate support rows pool their mass
            let mut pairs: Vec<(u128, f64)> = support.iter().copied().zip(probabilities.iter().copied()).collect();
            pairs.sort_by_key(|&(v, _)| v);
            let mut best = 0f64;
            let mut i = 0;
            while i < pairs.len() {
                let mut mass = 0.0;
                let v = pairs[i].0;
                while i < pairs.len() && pairs[i].0 == v {
                    mass += pairs[i].1;
                    i += 1;
                }
                best = best.max(mass);
            }
            -best.log2()
        }
    }
}
