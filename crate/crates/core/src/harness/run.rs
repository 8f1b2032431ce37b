//! The per-trial sampling experiment and its aggregation into a report.

use serde::Serialize;

use super::config::{Experiment, ExperimentConfig};
use crate::adversaries::{AttackContext, Outcome};
use crate::baseline::{b_formula, Side};
use crate::domain::{predicate_weight, sample_dataset, Dataset, Predicate, WeightEstimate, WeightMethod};
use crate::rng::{stream, Role};
use crate::stats::{wilson_interval, Z95};
use crate::Result;

/// What one trial produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub success: bool,
    pub aborted: bool,
    /// The predicate (all of them, for full singling out) isolated.
    pub isolated: bool,
    /// Central weight of the emitted predicate; the largest one for full
    /// singling out.
    pub weight: Option<f64>,
    pub method: Option<&'static str>,
    /// The weight that decides `η`: the refined group's when an attack
    /// reports one, else the emitted predicate's.
    pub admissible: bool,
    /// A Monte Carlo interval contained the class boundary.
    pub straddle: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicate: Option<String>,
}

fn method_name(m: &WeightMethod) -> &'static str {
    match m {
        WeightMethod::ExactAnalytic => "exact_analytic",
        WeightMethod::ExactEnumeration => "exact_enumeration",
        WeightMethod::MonteCarlo { .. } => "monte_carlo",
    }
}

struct Judge<'a> {
    config: &'a ExperimentConfig,
    rng: rand_chacha::ChaCha8Rng,
}

impl Judge<'_> {
    fn weigh(&mut self, p: &Predicate) -> Result<WeightEstimate> {
        predicate_weight(p, &self.config.distribution, &self.config.weight_budget, &mut self.rng)
    }

    fn in_class(&self, w: f64) -> bool {
        match self.config.class {
            Side::Low => w <= self.config.w_low,
            Side::High => w >= self.config.w_high,
        }
    }

    fn straddles(&self, est: &WeightEstimate) -> bool {
        let (lo, hi) = est.interval();
        let b = self.config.w_bound();
        !est.is_exact() && lo <= b && b <= hi
    }
}

/// Samples `x`, runs the mechanism and the adversary on their own streams,
/// then scores isolation jointly with weight-class membership.
pub fn run_trial(exp: &Experiment, trial: u64, keep_predicate: bool) -> Result<TrialRecord> {
    let c = &exp.config;
    let x = sample_dataset(&c.distribution, c.n as usize, &mut stream(c.seed, trial, Role::Dataset))?;
    let out = exp.mechanism.run(&x, &mut stream(c.seed, trial, Role::Mechanism))?;
    let (k, k_max) = exp.kanon().unzip();
    let ctx = AttackContext {
        width: x.width(),
        n: c.n,
        w_low: c.w_low,
        w_high: c.w_high,
        class: c.class,
        distribution: c.adversary_knows_distribution.then_some(&c.distribution),
        k,
        k_max,
    };
    let attack = c.adversary.attack(&out, &ctx, &mut stream(c.seed, trial, Role::Adversary))?;
    let mut judge = Judge {
        config: c,
        rng: stream(c.seed, trial, Role::Oracle),
    };
    let mut rec = TrialRecord {
        trial,
        success: false,
        aborted: false,
        isolated: false,
        weight: None,
        method: None,
        admissible: false,
        straddle: false,
        predicate: None,
    };
    let emitted: Vec<&Predicate> = match &attack.outcome {
        Outcome::Aborted(_) => {
            rec.aborted = true;
            return Ok(rec);
        }
        Outcome::Single(p) => {
            rec.isolated = p.isolated_row(&x)?.is_some();
            vec![p]
        }
        Outcome::Full(ps) => {
            rec.isolated = fully_isolates(ps, &x)?;
            ps.iter().collect()
        }
    };
    if keep_predicate {
        rec.predicate = Some(emitted.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("; "));
    }
    let mut all_in_class = true;
    let mut worst: Option<WeightEstimate> = None;
    for p in &emitted {
        let est = judge.weigh(p)?;
        all_in_class &= judge.in_class(est.value);
        rec.straddle |= judge.straddles(&est);
        let replace = worst.is_none_or(|w| match c.class {
            Side::Low => est.value > w.value,
            Side::High => est.value < w.value,
        });
        if replace {
            worst = Some(est);
        }
    }
    let worst = worst.expect("attacks emit at least one predicate");
    rec.weight = Some(worst.value);
    rec.method = Some(method_name(&worst.method));
    rec.admissible = match &attack.anchor {
        Some(phi) => {
            let est = judge.weigh(phi)?;
            judge.in_class(est.value)
        }
        None => all_in_class,
    };
    rec.success = rec.isolated && all_in_class;
    Ok(rec)
}

/// Each predicate isolates a row and no two isolate the same one.
fn fully_isolates(ps: &[Predicate], x: &Dataset) -> Result<bool> {
    if ps.len() != x.len() {
        return Ok(false);
    }
    let mut hit = vec![false; x.len()];
    for p in ps {
        match p.isolated_row(x)? {
            Some(i) if !hit[i] => hit[i] = true,
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Trial counts folded in trial order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Tally {
    pub trials: u64,
    pub successes: u64,
    pub aborts: u64,
    pub straddles: u64,
    pub admissible: u64,
    pub weighed: u64,
    pub weight_sum: f64,
    pub max_weight: Option<f64>,
    pub exact_analytic: u64,
    pub exact_enumeration: u64,
    pub monte_carlo: u64,
}

impl Tally {
    pub fn add(&mut self, r: &TrialRecord) {
        self.trials += 1;
        self.successes += r.success as u64;
        self.aborts += r.aborted as u64;
        self.straddles += r.straddle as u64;
        self.admissible += r.admissible as u64;
        if let Some(w) = r.weight {
            self.weighed += 1;
            self.weight_sum += w;
            self.max_weight = Some(self.max_weight.map_or(w, |m| m.max(w)));
        }
        match r.method {
            Some("exact_analytic") => self.exact_analytic += 1,
            Some("exact_enumeration") => self.exact_enumeration += 1,
            Some(_) => self.monte_carlo += 1,
            None => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightMix {
    pub exact_analytic: u64,
    pub exact_enumeration: u64,
    pub monte_carlo: u64,
}

/// Aggregate result of an experiment; a pure function of its config.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessReport {
    pub experiment: String,
    pub mechanism: String,
    pub adversary: String,
    pub n: u64,
    pub d: u32,
    pub m: u32,
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub baseline: f64,
    pub ratio: f64,
    pub eta: f64,
    pub mean_weight: Option<f64>,
    pub max_weight: Option<f64>,
    pub weight_methods: WeightMix,
    pub aborts: u64,
    pub straddles: u64,
    pub lambda: f64,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<TrialRecord>>,
}

impl SuccessReport {
    pub fn from_tally(exp: &Experiment, t: &Tally) -> Self {
        let c = &exp.config;
        let (ci_low, ci_high) = wilson_interval(t.successes, t.trials, Z95);
        let p_hat = t.successes as f64 / t.trials as f64;
        let baseline = b_formula(c.n, c.w_bound());
        SuccessReport {
            experiment: c.name.clone(),
            mechanism: exp.mechanism.name(),
            adversary: c.adversary.name().into(),
            n: c.n,
            d: c.distribution.width(),
            m: c.report_m(),
            trials: t.trials,
            successes: t.successes,
            p_hat,
            ci_low,
            ci_high,
            baseline,
            ratio: p_hat / baseline,
            eta: t.admissible as f64 / t.trials as f64,
            mean_weight: (t.weighed > 0).then(|| t.weight_sum / t.weighed as f64),
            max_weight: t.max_weight,
            weight_methods: WeightMix {
                exact_analytic: t.exact_analytic,
                exact_enumeration: t.exact_enumeration,
                monte_carlo: t.monte_carlo,
            },
            aborts: t.aborts,
            straddles: t.straddles,
            lambda: exp.lambda,
            seed: c.seed,
            warnings: exp.warnings.clone(),
            config: c.clone(),
            records: None,
        }
    }
}

/// Worker count for [`run_experiment`]; `0` means one per core.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Workers(pub usize);

fn run_sequential(exp: &Experiment, keep: bool) -> Result<Vec<TrialRecord>> {
    (0..exp.config.trials).map(|t| run_trial(exp, t, keep)).collect()
}

#[cfg(feature = "parallel")]
fn run_records(exp: &Experiment, workers: Workers, keep: bool) -> Result<Vec<TrialRecord>> {
    use rayon::prelude::*;
    if workers.0 == 1 {
        return run_sequential(exp, keep);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.0)
        .build()
        .map_err(|e| crate::Error::config(format!("worker pool: {e}")))?;
    pool.install(|| {
        (0..exp.config.trials)
            .into_par_iter()
            .map(|t| run_trial(exp, t, keep))
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn run_records(exp: &Experiment, _workers: Workers, keep: bool) -> Result<Vec<TrialRecord>> {
    run_sequential(exp, keep)
}

/// Runs every trial and folds the records in trial order, so the report
/// does not depend on the worker count.
pub fn run_experiment(exp: &Experiment, workers: Workers) -> Result<SuccessReport> {
    run_experiment_with(exp, workers, false)
}

/// [`run_experiment`], optionally keeping every trial record.
pub fn run_experiment_with(exp: &Experiment, workers: Workers, verbose: bool) -> Result<SuccessReport> {
    let records = run_records(exp, workers, verbose)?;
    let mut tally = Tally::default();
    for r in &records {
        tally.add(r);
    }
    let mut report = SuccessReport::from_tally(exp, &tally);
    if verbose {
        report.records = Some(records);
    }
    Ok(report)
}
