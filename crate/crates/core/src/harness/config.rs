//! Experiment configuration: the JSON schema and its resolution into a
//! runnable [`Experiment`].

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::adversaries::{counting_attack_queries, masked_counting_attack, bit_queries, Adversary};
use crate::baseline::Side;
use crate::domain::{min_entropy, Distribution, Predicate, WeightBudget};
use crate::mechanisms::{KAnonConfig, KAnonVariant, Mechanism, PostMap};
use crate::{Error, Result};

/// Parses `0.25`, `1/365` or `2^-40`.
pub fn parse_weight(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::config(format!("cannot read {s:?} as a weight"));
    let v = if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        a / b
    } else if let Some((base, exp)) = s.split_once('^') {
        let base: f64 = base.trim().parse().map_err(|_| bad())?;
        let exp: i32 = exp.trim().parse().map_err(|_| bad())?;
        base.powi(exp)
    } else {
        s.parse().map_err(|_| bad())?
    };
    if !v.is_finite() {
        return Err(bad());
    }
    Ok(v)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrText {
    Num(f64),
    Text(String),
}

fn weight<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    match NumOrText::deserialize(d)? {
        NumOrText::Num(v) => Ok(v),
        NumOrText::Text(s) => parse_weight(&s).map_err(serde::de::Error::custom),
    }
}

fn default_w_high() -> f64 {
    1.0
}

/// `ε` as a number or `"inf"` for exact counts.
mod epsilon {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match NumOrText::deserialize(d)? {
            NumOrText::Num(v) => Ok(v),
            NumOrText::Text(s) if s.eq_ignore_ascii_case("inf") => Ok(f64::INFINITY),
            NumOrText::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Named query plans; each matches what the like-named adversary expects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "plan", rename_all = "snake_case", deny_unknown_fields)]
pub enum QueryPlan {
    /// Whatever the configured adversary plans.
    Adversary,
    Counting {
        r: u32,
    },
    Masked {
        r: u32,
    },
    /// The first counting slice alone.
    Slice,
    /// `x[1..d]`.
    Bits,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuerySpec {
    Plan(QueryPlan),
    List(Vec<Predicate>),
}

/// Mechanism section of a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MechanismSpec {
    Counts {
        queries: QuerySpec,
        #[serde(default)]
        suppress_below: Option<u64>,
    },
    NoisyCounts {
        queries: QuerySpec,
        #[serde(with = "epsilon")]
        epsilon_per_query: f64,
    },
    BitRelease {
        queries: QuerySpec,
    },
    Ext {
        m: u32,
    },
    ExtEnc {
        m: u32,
    },
    KanonSuppress {
        k: usize,
        #[serde(default)]
        k_max: Option<usize>,
    },
    KanonInterval {
        k: usize,
        #[serde(default)]
        k_max: Option<usize>,
    },
    HashLift {
        m: u32,
        inner: Box<MechanismSpec>,
    },
}

impl MechanismSpec {
    /// `(k, k_max)` of the anonymizer inside, if any.
    fn kanon(&self) -> Option<(usize, usize)> {
        match self {
            MechanismSpec::KanonSuppress { k, k_max } | MechanismSpec::KanonInterval { k, k_max } => {
                Some((*k, k_max.unwrap_or(*k)))
            }
            MechanismSpec::HashLift { inner, .. } => inner.kanon(),
            _ => None,
        }
    }

    fn m(&self) -> Option<u32> {
        match self {
            MechanismSpec::Ext { m } | MechanismSpec::ExtEnc { m } | MechanismSpec::HashLift { m, .. } => Some(*m),
            _ => None,
        }
    }

    fn resolve(&self, n: u64, width: u32, adversary: &Adversary) -> Result<Mechanism> {
        let queries = |spec: &QuerySpec| -> Result<Vec<Predicate>> {
            let qs = match spec {
                QuerySpec::List(qs) => qs.clone(),
                QuerySpec::Plan(QueryPlan::Adversary) => adversary.planned_queries(n, width)?.ok_or_else(|| {
                    Error::config(format!("adversary {} plans no queries", adversary.name()))
                })?,
                QuerySpec::Plan(QueryPlan::Counting { r }) => counting_attack_queries(n, width, *r)?,
                QuerySpec::Plan(QueryPlan::Masked { r }) => masked_counting_attack(n, width, *r)?,
                QuerySpec::Plan(QueryPlan::Slice) => vec![counting_attack_queries(n, width, 1)?.swap_remove(0)],
                QuerySpec::Plan(QueryPlan::Bits) => bit_queries(width, width)?,
            };
            if let Some(q) = qs.iter().find(|q| q.width() != width) {
                return Err(Error::config(format!(
                    "query {q} has width {}, mechanism sees {width}-bit rows",
                    q.width()
                )));
            }
            Ok(qs)
        };
        let kanon = |k: usize, k_max: Option<usize>, variant| -> Result<Mechanism> {
            Ok(Mechanism::KAnon(KAnonConfig::new(k, k_max.unwrap_or(k), n as usize, variant)?))
        };
        Ok(match self {
            MechanismSpec::Counts {
                queries: q,
                suppress_below,
            } => Mechanism::Counts {
                queries: queries(q)?,
                suppress_below: *suppress_below,
            },
            MechanismSpec::NoisyCounts {
                queries: q,
                epsilon_per_query,
            } => Mechanism::NoisyCounts {
                queries: queries(q)?,
                epsilon_per_query: *epsilon_per_query,
            },
            MechanismSpec::BitRelease { queries: q } => Mechanism::BitRelease { queries: queries(q)? },
            MechanismSpec::Ext { m } => Mechanism::Ext { m: *m },
            MechanismSpec::ExtEnc { m } => Mechanism::ExtEnc { m: *m },
            MechanismSpec::KanonSuppress { k, k_max } => kanon(*k, *k_max, KAnonVariant::BitSuppression)?,
            MechanismSpec::KanonInterval { k, k_max } => kanon(*k, *k_max, KAnonVariant::IntervalBucket)?,
            MechanismSpec::HashLift { m, inner } => Mechanism::HashLift {
                m: *m,
                inner: Box::new(inner.resolve(n, *m, adversary)?),
            },
        })
    }
}

/// One experiment as read from a config file. Unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub distribution: Distribution,
    pub n: u64,
    /// Row width; must match the distribution when given.
    #[serde(default)]
    pub d: Option<u32>,
    pub mechanism: MechanismSpec,
    pub adversary: Adversary,
    /// Which weight bound success is judged against.
    #[serde(default = "default_class")]
    pub class: Side,
    #[serde(deserialize_with = "weight")]
    pub w_low: f64,
    #[serde(default = "default_w_high", deserialize_with = "weight")]
    pub w_high: f64,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weight_budget: WeightBudget,
    #[serde(default)]
    pub adversary_knows_distribution: bool,
    /// Runs the mechanism on a uniformly shuffled copy of each dataset.
    #[serde(default)]
    pub permute: bool,
    /// Post-processing applied to the mechanism's output.
    #[serde(default)]
    pub post_map: Option<PostMap>,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_class() -> Side {
    Side::Low
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        serde_json::from_value(v).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configs serialize")
    }

    pub fn resolve(&self) -> Result<Experiment> {
        Experiment::new(self.clone())
    }
}

/// A validated config with its mechanism built.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub mechanism: Mechanism,
    pub lambda: f64,
    pub warnings: Vec<String>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let c = &config;
        let width = c.distribution.width();
        if c.d.is_some_and(|d| d != width) {
            return Err(Error::config(format!(
                "d={} disagrees with the {width}-bit distribution",
                c.d.unwrap()
            )));
        }
        if c.trials < 1 {
            return Err(Error::config("trials must be at least 1"));
        }
        if c.n < 1 {
            return Err(Error::config("n must be at least 1"));
        }
        let inv_n = 1.0 / c.n as f64;
        if !(0.0 <= c.w_low && c.w_low <= inv_n && inv_n <= c.w_high && c.w_high <= 1.0) {
            return Err(Error::config(format!(
                "weights must satisfy 0 <= w_low <= 1/n <= w_high <= 1, got w_low={}, w_high={}, n={}",
                c.w_low, c.w_high, c.n
            )));
        }
        if c.trials >= 1 << 62 {
            return Err(Error::config("too many trials"));
        }
        let mut mechanism = c.mechanism.resolve(c.n, width, &c.adversary)?;
        if c.permute {
            mechanism = Mechanism::Permuted(Box::new(mechanism));
        }
        if let Some(map) = c.post_map {
            mechanism = Mechanism::Post {
                inner: Box::new(mechanism),
                map,
            };
        }
        let lambda = min_entropy(&c.distribution);
        let mut warnings = Vec::new();
        if let Some(m) = config.hash_m() {
            if lambda < 5.0 * m as f64 {
                warnings.push(format!(
                    "min-entropy {lambda} is below 5m = {}; hash weights may leave their window",
                    5 * m
                ));
            }
        }
        Ok(Experiment {
            config,
            mechanism,
            lambda,
            warnings,
        })
    }

    pub fn kanon(&self) -> Option<(usize, usize)> {
        self.config.mechanism.kanon()
    }
}

impl ExperimentConfig {
    /// Output width of any hash the experiment draws.
    fn hash_m(&self) -> Option<u32> {
        match (&self.adversary, &self.mechanism) {
            (Adversary::TrivialHash { m, .. }, _) => Some(*m),
            (_, MechanismSpec::HashLift { m, .. }) => Some(*m),
            _ => None,
        }
    }

    /// The `m` column of a report: the hash width, an extractor's key
    /// width, or the row width.
    pub fn report_m(&self) -> u32 {
        match &self.adversary {
            Adversary::TrivialHash { m, .. } | Adversary::KanonHash { m, .. } => *m,
            _ => self.mechanism.m().unwrap_or(self.distribution.width()),
        }
    }

    pub fn w_bound(&self) -> f64 {
        match self.class {
            Side::Low => self.w_low,
            Side::High => self.w_high,
        }
    }
}
