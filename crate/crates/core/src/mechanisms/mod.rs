//! Mechanisms: functions from a dataset (and a generator) to a release.

mod counting;
mod extract;
mod kanon;

pub use counting::{
    count_mech, laplace_count_mech, laplace_noise, multi_count_mech, predicate_mech, suppress_low,
    BitMatrix,
};
pub use extract::{ext_enc_mech, von_neumann_extract, Key};
pub use kanon::{
    bit_suppress_kanon, interval_bucket_kanon, FamilyEntry, KAnonConfig, KAnonVariant,
    PredicateFamily,
};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{permute_dataset, Dataset};
use crate::gf2::FieldWidth;
use crate::hash::{sample_hash, HashParams};
use crate::{Error, Result};

/// Every release shape a mechanism can produce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum MechanismOutput {
    Counts(Vec<u64>),
    /// Counts with entries below a threshold withheld.
    MaskedCounts(Vec<Option<u64>>),
    NoisyCounts {
        values: Vec<f64>,
        epsilon_per_query: f64,
        total_epsilon: f64,
    },
    BitMatrix(BitMatrix),
    KeyOrBot(Option<Key>),
    ExtEnc {
        key: Option<Key>,
        ciphertext: Option<Key>,
    },
    PredicateFamily(PredicateFamily),
    HashLifted {
        hash: HashParams,
        inner: Box<MechanismOutput>,
    },
}

impl MechanismOutput {
    pub fn kind(&self) -> &'static str {
        match self {
            MechanismOutput::Counts(_) => "counts",
            MechanismOutput::MaskedCounts(_) => "masked_counts",
            MechanismOutput::NoisyCounts { .. } => "noisy_counts",
            MechanismOutput::BitMatrix(_) => "bit_matrix",
            MechanismOutput::KeyOrBot(_) => "key_or_bot",
            MechanismOutput::ExtEnc { .. } => "ext_enc",
            MechanismOutput::PredicateFamily(_) => "predicate_family",
            MechanismOutput::HashLifted { .. } => "hash_lifted",
        }
    }
}

/// Fixed post-processing maps applied to a mechanism's output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum PostMap {
    /// Bit matrix to per-query counts.
    ColumnSums,
    /// First count to the single bit `count ≥ at`.
    ThresholdBit { at: u64 },
}

impl PostMap {
    pub fn apply(&self, out: MechanismOutput) -> Result<MechanismOutput> {
        match (self, out) {
            (PostMap::ColumnSums, MechanismOutput::BitMatrix(m)) => {
                Ok(MechanismOutput::Counts(m.column_sums()))
            }
            (PostMap::ThresholdBit { at }, MechanismOutput::Counts(c)) if !c.is_empty() => {
                Ok(MechanismOutput::Counts(vec![(c[0] >= *at) as u64]))
            }
            (map, out) => Err(Error::config(format!(
                "post-map {map:?} does not apply to {} output",
                out.kind()
            ))),
        }
    }
}

/// `(h, M(h(x)))` with `h` drawn over the smallest field covering both the
/// row width and `m`.
pub fn hash_lift<R, F>(x: &Dataset, m: u32, rng: &mut R, inner: F) -> Result<MechanismOutput>
where
    R: Rng + ?Sized,
    F: FnOnce(&Dataset, &mut R) -> Result<MechanismOutput>,
{
    let field = FieldWidth::covering(x.width().max(m))?;
    let h = sample_hash(rng, field, m)?;
    let hashed = Dataset::new(m, x.rows().iter().map(|&r| h.eval(r, x.width())).collect())?;
    Ok(MechanismOutput::HashLifted {
        hash: h,
        inner: Box::new(inner(&hashed, rng)?),
    })
}

/// Registry names with a one-line description each.
pub const MECHANISMS: &[(&str, &str)] = &[
    ("counts", "exact counts of the configured queries"),
    ("noisy-counts", "counts plus Laplace noise of scale 1/epsilon_per_query"),
    ("bit-release", "every query's value on every row"),
    ("ext", "von Neumann key extracted from the first n/2 rows"),
    ("ext-enc", "extracted key and the last row encrypted under it"),
    ("kanon-suppress", "k-anonymous bit suppression in index order"),
    ("kanon-interval", "k-anonymous intervals over sorted rows"),
    ("hash-lift", "the `inner` mechanism run on m-bit hashes of the rows"),
];

/// A configured mechanism, ready to run.
#[derive(Clone, Debug, PartialEq)]
pub enum Mechanism {
    Counts {
        queries: Vec<crate::domain::Predicate>,
        suppress_below: Option<u64>,
    },
    NoisyCounts {
        queries: Vec<crate::domain::Predicate>,
        epsilon_per_query: f64,
    },
    BitRelease {
        queries: Vec<crate::domain::Predicate>,
    },
    Ext {
        m: u32,
    },
    ExtEnc {
        m: u32,
    },
    KAnon(KAnonConfig),
    HashLift {
        m: u32,
        inner: Box<Mechanism>,
    },
    /// `M ∘ σ` for a uniformly random row permutation `σ`.
    Permuted(Box<Mechanism>),
    Post {
        inner: Box<Mechanism>,
        map: PostMap,
    },
}

impl Mechanism {
    pub fn run<R: Rng + ?Sized>(&self, x: &Dataset, rng: &mut R) -> Result<MechanismOutput> {
        match self {
            Mechanism::Counts {
                queries,
                suppress_below,
            } => {
                let counts = multi_count_mech(queries, x)?;
                Ok(match suppress_below {
                    Some(t) => MechanismOutput::MaskedCounts(suppress_low(&counts, *t)),
                    None => MechanismOutput::Counts(counts),
                })
            }
            Mechanism::NoisyCounts {
                queries,
                epsilon_per_query,
            } => laplace_count_mech(queries, x, *epsilon_per_query, rng),
            Mechanism::BitRelease { queries } => {
                Ok(MechanismOutput::BitMatrix(predicate_mech(queries, x)?))
            }
            Mechanism::Ext { m } => Ok(MechanismOutput::KeyOrBot(von_neumann_extract(x, *m)?)),
            Mechanism::ExtEnc { m } => {
                let (key, ciphertext) = ext_enc_mech(x, *m)?;
                Ok(MechanismOutput::ExtEnc { key, ciphertext })
            }
            Mechanism::KAnon(cfg) => Ok(MechanismOutput::PredicateFamily(cfg.run(x)?)),
            Mechanism::HashLift { m, inner } => hash_lift(x, *m, rng, |y, rng| inner.run(y, rng)),
            Mechanism::Permuted(inner) => {
                let mut sigma: Vec<usize> = (0..x.len()).collect();
                sigma.shuffle(rng);
                inner.run(&permute_dataset(x, &sigma)?, rng)
            }
            Mechanism::Post { inner, map } => map.apply(inner.run(x, rng)?),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Mechanism::Counts { .. } => "counts".into(),
            Mechanism::NoisyCounts { .. } => "noisy-counts".into(),
            Mechanism::BitRelease { .. } => "bit-release".into(),
            Mechanism::Ext { .. } => "ext".into(),
            Mechanism::ExtEnc { .. } => "ext-enc".into(),
            Mechanism::KAnon(c) => match c.variant {
                KAnonVariant::BitSuppression => "kanon-suppress".into(),
                KAnonVariant::IntervalBucket => "kanon-interval".into(),
            },
            Mechanism::HashLift { inner, .. } => format!("hash-lift:{}", inner.name()),
            Mechanism::Permuted(inner) => inner.name(),
            Mechanism::Post { inner, .. } => inner.name(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{sample_dataset, Distribution, Predicate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_lift_truncates() {
        let x = Dataset::new(8, vec![0xAB, 0x12]).unwrap();
        let out = hash_lift(&x, 8, &mut ChaCha8Rng::seed_from_u64(1), |y, _| {
            Ok(MechanismOutput::Counts(y.rows().iter().map(|&r| r as u64).collect()))
        })
        .unwrap();
        let MechanismOutput::HashLifted { hash, inner } = out else {
            panic!("expected a lifted output")
        };
        let expect: Vec<u64> = x.rows().iter().map(|&r| hash.eval(r, 8) as u64).collect();
        assert_eq!(*inner, MechanismOutput::Counts(expect));

        // the identity map is truncation to the top m bits
        let id = HashParams::identity(4, FieldWidth::W8).unwrap();
        assert_eq!(id.eval(0xAB, 8), 0xA);
    }

    #[test]
    fn lifted_count_in_range() {
        let dist = Distribution::bernoulli(64, 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = sample_dataset(&dist, 50, &mut rng).unwrap();
        let mech = Mechanism::HashLift {
            m: 40,
            inner: Box::new(Mechanism::Counts {
                queries: vec![Predicate::threshold(40, 1 << 39).unwrap()],
                suppress_below: None,
            }),
        };
        let MechanismOutput::HashLifted { inner, .. } = mech.run(&x, &mut rng).unwrap() else {
            panic!()
        };
        let MechanismOutput::Counts(c) = *inner else { panic!() };
        assert!(c[0] <= 50);
        assert_eq!(mech.name(), "hash-lift:counts");
    }

    #[test]
    fn permuted_counts_are_equal() {
        let dist = Distribution::uniform(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = sample_dataset(&dist, 32, &mut rng).unwrap();
        let queries = vec![Predicate::threshold(16, 1000).unwrap(), Predicate::parity(16).unwrap()];
        let plain = Mechanism::Counts { queries, suppress_below: None };
        let permuted = Mechanism::Permuted(Box::new(plain.clone()));
        assert_eq!(plain.run(&x, &mut rng).unwrap(), permuted.run(&x, &mut rng).unwrap());
    }

    #[test]
    fn post_maps() {
        let x = Dataset::new(3, vec![0b101, 0b010, 0b111]).unwrap();
        let queries: Vec<_> = (1..=3).map(|i| Predicate::bit_test(3, i, true).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sums = Mechanism::Post {
            inner: Box::new(Mechanism::BitRelease { queries: queries.clone() }),
            map: PostMap::ColumnSums,
        };
        assert_eq!(sums.run(&x, &mut rng).unwrap(), MechanismOutput::Counts(vec![2, 2, 2]));
        let bit = Mechanism::Post {
            inner: Box::new(Mechanism::Counts { queries, suppress_below: None }),
            map: PostMap::ThresholdBit { at: 2 },
        };
        assert_eq!(bit.run(&x, &mut rng).unwrap(), MechanismOutput::Counts(vec![1]));
        assert!(PostMap::ColumnSums.apply(MechanismOutput::Counts(vec![])).is_err());
    }

    #[test]
    fn output_json_is_tagged() {
        let out = MechanismOutput::ExtEnc {
            key: None,
            ciphertext: None,
        };
        let v = serde_json::to_value(&out).unwrap();
        assert_eq!(v["kind"], "ext_enc");
        let back: MechanismOutput = serde_json::from_value(v).unwrap();
        assert_eq!(back, out);
    }
}
