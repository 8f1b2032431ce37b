//! Property checks shared by the integration and acceptance suites. Each
//! returns a [`Check`] instead of panicking so callers can report them.

#![allow(dead_code)]

use psolab::adversaries::{
    counting_attack_queries, counting_attack_reconstruct, hash_cut_numerator, select_group, Adversary,
    AttackContext, Outcome,
};
use psolab::baseline::{b_formula, lhl_predicate, Side};
use psolab::domain::{enumerate_weight, sample_dataset, Dataset, Distribution, Predicate};
use psolab::gf2::{gf_mul, FieldWidth};
use psolab::harness::{run_experiment, run_trial, Experiment, ExperimentConfig, Workers};
use psolab::hash::{sample_hash, HashParams};
use psolab::mechanisms::{
    bit_suppress_kanon, interval_bucket_kanon, multi_count_mech, Mechanism, PostMap, PredicateFamily,
};
use psolab::rng::{stream, Role};
use psolab::stats::{wilson_interval, Z95, Z99};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

pub fn config_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn load_config(name: &str) -> ExperimentConfig {
    let text = std::fs::read_to_string(config_dir().join(name)).expect("config file");
    ExperimentConfig::from_json(&text).expect("valid config")
}

pub fn experiment(cfg: &ExperimentConfig) -> Experiment {
    cfg.resolve().expect("config resolves")
}

pub fn gf8_associative() -> Check {
    let w = FieldWidth::W8;
    let mut bad = 0u64;
    for x in 0..256u128 {
        for y in 0..256u128 {
            let xy = gf_mul(x, y, w);
            for z in 0..256u128 {
                bad += (gf_mul(xy, z, w) != gf_mul(x, gf_mul(y, z, w), w)) as u64;
            }
        }
    }
    Check::new("gf(2^8) multiplication is associative", bad == 0, format!("{bad} failing triples"))
}

pub fn gf8_affine_bijection() -> Check {
    let w = FieldWidth::W8;
    let mut bad = 0;
    for a in 1..256u128 {
        for b in 0..256u128 {
            let mut seen = [false; 256];
            for x in 0..256u128 {
                seen[(gf_mul(a, x, w) ^ b) as usize] = true;
            }
            bad += seen.iter().any(|s| !s) as u32;
        }
    }
    Check::new("x -> a*x ^ b is a bijection for a != 0", bad == 0, format!("{bad} non-bijective maps"))
}

pub fn gf8_hash_uniform() -> Check {
    let mut bad = 0;
    for m in [1u32, 4, 8] {
        for a in 1..256u128 {
            for b in 0..256u128 {
                let h = HashParams::new(a, b, m, FieldWidth::W8).unwrap();
                let mut counts = vec![0u32; 1 << m];
                for x in 0..256u128 {
                    counts[h.eval(x, 8) as usize] += 1;
                }
                bad += counts.iter().any(|&c| c != 1 << (8 - m)) as u32;
            }
        }
    }
    Check::new("hashing uniform 8-bit rows is uniform on m bits", bad == 0, format!("{bad} skewed hashes"))
}

/// Weight of `r(h(x)) ≤ w ∓ 2^(1−m)` lands in `[w − 3·2^−m, w]` (low) or
/// `[w, w + 3·2^−m]` (high), counted by enumeration over all `2^20` rows.
pub fn lhl_containment(hashes: usize) -> Check {
    let (d, m) = (20u32, 10u32);
    let dist = Distribution::uniform(d).unwrap();
    let slack = 3.0 * 2f64.powi(-(m as i32));
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut misses = 0;
    for i in 0..hashes {
        let w = rng.gen_range(0.01..0.99);
        let side = if i % 2 == 0 { Side::Low } else { Side::High };
        let h = sample_hash(&mut rng, FieldWidth::covering(d).unwrap(), m).unwrap();
        let p = lhl_predicate(d, &h, w, side).unwrap();
        let got = enumerate_weight(&p, &dist, 1 << 20).unwrap();
        let ok = match side {
            Side::Low => (w - slack..=w).contains(&got),
            Side::High => (w..=w + slack).contains(&got),
        };
        misses += !ok as usize;
    }
    // failures are allowed with probability 2^-m per hash
    let allowed = (hashes as f64 * 2f64.powi(-(m as i32)) * 4.0).ceil() as usize + 1;
    Check::new(
        "hash threshold weights stay in their window (d=20, m=10)",
        misses <= allowed,
        format!("{misses} of {hashes} hashes outside the window, allowed {allowed}"),
    )
}

/// Isolation frequency of a fixed weight-`w` threshold equals `B(n, w)`.
pub fn isolation_identity(trials: u64) -> Check {
    let dist = Distribution::uniform(16).unwrap();
    let mut worst = String::new();
    let mut pass = true;
    for (n, t) in [(10usize, 6554u128), (100, 655), (100, 300)] {
        let p = Predicate::threshold(16, t).unwrap();
        let w = t as f64 / 65536.0;
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64 + t as u64);
        let mut hits = 0;
        for _ in 0..trials {
            let x = sample_dataset(&dist, n, &mut rng).unwrap();
            hits += p.isolated_row(&x).unwrap().is_some() as u64;
        }
        let (lo, hi) = wilson_interval(hits, trials, Z99);
        let b = b_formula(n as u64, w);
        if !(lo <= b && b <= hi) {
            pass = false;
        }
        worst += &format!("n={n} w={w:.5}: B={b:.5} CI=[{lo:.5},{hi:.5}]; ");
    }
    Check::new("isolation frequency matches B(n, w)", pass, worst)
}

/// Wilson 95% intervals cover a known bias in at least 93% of meta-trials.
pub fn wilson_calibration() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(93);
    let mut worst = 1000;
    for p in [0.37f64, 0.05, 0.5] {
        let mut covered = 0;
        for _ in 0..1000 {
            let s = (0..1000).filter(|_| rng.gen_bool(p)).count() as u64;
            let (lo, hi) = wilson_interval(s, 1000, Z95);
            covered += (lo <= p && p <= hi) as u32;
        }
        worst = worst.min(covered);
    }
    Check::new("Wilson 95% interval calibration", worst >= 930, format!("worst coverage {worst}/1000"))
}

/// With shared dataset seeds, `M` and `M∘σ` give identical records for
/// counting and overlapping intervals for k-anonymity.
pub fn permutation_property(trials: u64) -> Vec<Check> {
    let mut base = load_config("counting.json");
    base.trials = trials.min(2000);
    let plain = experiment(&base);
    let mut shuffled = base.clone();
    shuffled.permute = true;
    let shuffled = experiment(&shuffled);
    let mut differ = 0;
    for t in 0..base.trials {
        differ += (run_trial(&plain, t, true).unwrap() != run_trial(&shuffled, t, true).unwrap()) as u64;
    }
    let exact = Check::new(
        "counting records equal under row permutation",
        differ == 0,
        format!("{differ} of {} trials differ", base.trials),
    );

    let mut k = load_config("kanon-suppress.json");
    k.n = 200;
    k.trials = trials;
    let a = run_experiment(&experiment(&k), Workers(0)).unwrap();
    k.permute = true;
    let b = run_experiment(&experiment(&k), Workers(0)).unwrap();
    let overlap = a.ci_low <= b.ci_high && b.ci_low <= a.ci_high;
    let ci = Check::new(
        "k-anonymity success intervals overlap under row permutation",
        overlap,
        format!(
            "[{:.4},{:.4}] vs [{:.4},{:.4}]",
            a.ci_low, a.ci_high, b.ci_low, b.ci_high
        ),
    );
    vec![exact, ci]
}

/// `A` applied to `F(M(x))` and `A` against the mechanism `F∘M` emit the
/// same predicates on every trial.
pub fn post_processing_property(trials: u64) -> Check {
    let (n, d, r) = (16u64, 12u32, 2u32);
    let dist = Distribution::uniform(d).unwrap();
    let queries = counting_attack_queries(n, d, r).unwrap();
    let m = Mechanism::BitRelease { queries };
    let f = PostMap::ColumnSums;
    let composed = Mechanism::Post {
        inner: Box::new(m.clone()),
        map: f,
    };
    let adv = Adversary::Counting { r };
    let ctx = AttackContext {
        width: d,
        n,
        w_low: 2f64.powi(-(d as i32)),
        w_high: 1.0,
        class: Side::Low,
        distribution: None,
        k: None,
        k_max: None,
    };
    let mut differ = 0;
    for t in 0..trials {
        let x = sample_dataset(&dist, n as usize, &mut stream(5, t, Role::Dataset)).unwrap();
        let direct = f.apply(m.run(&x, &mut stream(5, t, Role::Mechanism)).unwrap()).unwrap();
        let a = adv.attack(&direct, &ctx, &mut stream(5, t, Role::Adversary)).unwrap();
        let post = composed.run(&x, &mut stream(5, t, Role::Mechanism)).unwrap();
        let b = adv.attack(&post, &ctx, &mut stream(5, t, Role::Adversary)).unwrap();
        differ += (a != b) as u64;
    }
    Check::new(
        "post-processed release gives identical predicates",
        differ == 0,
        format!("{differ} of {trials} trials differ"),
    )
}

/// Anonymity, generalization and `k_max = k` boundedness of both
/// anonymizers on uniform 128-bit rows, 100 datasets per `k`.
pub fn kanon_properties() -> Vec<Check> {
    let dist = Distribution::uniform(128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(128);
    let mut anonymous = true;
    let mut generalizes = true;
    let mut bounded = [[0u32; 3]; 2];
    for _ in 0..100 {
        let x = sample_dataset(&dist, 64, &mut rng).unwrap();
        for (ki, k) in [2usize, 4, 8].into_iter().enumerate() {
            let fams: [PredicateFamily; 2] = [bit_suppress_kanon(&x, k).unwrap(), interval_bucket_kanon(&x, k).unwrap()];
            for (vi, f) in fams.iter().enumerate() {
                anonymous &= f.entries.iter().all(|e| e.count >= k as u64);
                bounded[vi][ki] += f.entries.iter().any(|e| e.count <= k as u64) as u32;
            }
            for (g, e) in x.rows().chunks_exact(k).zip(&fams[0].entries) {
                generalizes &= g.iter().all(|&r| e.predicate.eval(r));
            }
            generalizes &= x.rows().iter().all(|&r| fams[1].entries.iter().any(|e| e.predicate.eval(r)));
        }
    }
    let mut out = vec![
        Check::new("every published group holds at least k rows", anonymous, ""),
        Check::new("every row satisfies its group's predicate", generalizes, ""),
    ];
    for (vi, variant) in ["bit suppression", "interval buckets"].into_iter().enumerate() {
        for (ki, k) in [2, 4, 8].into_iter().enumerate() {
            out.push(Check::new(
                format!("{variant} publishes a group of size <= k at k={k}"),
                bounded[vi][ki] == 100,
                format!("{} of 100 datasets", bounded[vi][ki]),
            ));
        }
    }
    out
}

/// Success of the k-anonymity hash attack against `η · E[B(k_φ, w_φ)]`,
/// where the expectation is taken over the trials' selected groups.
pub fn kanon_decomposition(trials: u64) -> Check {
    let mut cfg = load_config("kanon-suppress.json");
    cfg.trials = trials;
    let exp = experiment(&cfg);
    let report = run_experiment(&exp, Workers(0)).unwrap();
    let Adversary::KanonHash { m, selection, .. } = cfg.adversary else {
        panic!("kanon-suppress.json uses the kanon-hash adversary")
    };
    let mut expected = 0.0;
    for t in 0..trials {
        let x = sample_dataset(&cfg.distribution, cfg.n as usize, &mut stream(cfg.seed, t, Role::Dataset)).unwrap();
        let f = bit_suppress_kanon(&x, 4).unwrap();
        let Some(e) = select_group(&f, 4, selection) else { continue };
        let weight = enumerate_free_weight(&e.predicate);
        if weight <= cfg.w_low {
            let w = hash_cut_numerator(m, e.count) as f64 / 2f64.powi(m as i32);
            expected += b_formula(e.count, w);
        }
    }
    expected /= trials as f64;
    Check::new(
        "k-anonymity attack success matches eta * E[B(k_phi, w_phi)]",
        report.ci_low <= expected && expected <= report.ci_high,
        format!(
            "p_hat={:.4} CI=[{:.4},{:.4}] predicted={expected:.4} eta={:.4}",
            report.p_hat, report.ci_low, report.ci_high, report.eta
        ),
    )
}

/// `2^−fixed` for a uniform-row pattern.
fn enumerate_free_weight(p: &Predicate) -> f64 {
    let psolab::domain::Expr::Pattern { pattern } = p.expr() else {
        panic!("bit suppression publishes patterns")
    };
    2f64.powi(-(pattern.fixed_count() as i32))
}

/// Whenever the slice holds exactly one row, the reconstruction isolates it.
pub fn counting_oracle(seeds: u64) -> Check {
    let mut wrong = 0;
    let mut checked = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=16u64);
        let need = 64 - (n - 1).leading_zeros() + 1;
        let d = rng.gen_range(need.max(2)..=12);
        let x = sample_dataset(&Distribution::uniform(d).unwrap(), n as usize, &mut rng).unwrap();
        let qs = counting_attack_queries(n, d, 1).unwrap();
        let counts = multi_count_mech(&qs, &x).unwrap();
        let slice_rows: Vec<u128> = x.rows().iter().copied().filter(|&r| qs[0].eval(r)).collect();
        let out = counting_attack_reconstruct(&counts, &qs, d).unwrap();
        if slice_rows.len() == 1 {
            checked += 1;
            let Outcome::Single(p) = out.outcome else {
                wrong += 1;
                continue;
            };
            let hits: Vec<u128> = x.rows().iter().copied().filter(|&r| p.eval(r)).collect();
            wrong += (hits != slice_rows) as u32;
        }
    }
    Check::new(
        "counting reconstruction isolates the unique slice row",
        wrong == 0 && checked > 0,
        format!("{wrong} wrong of {checked} single-row slices"),
    )
}

/// Every adversary reproduces its output from the same release and seed.
pub fn adversaries_are_pure() -> Check {
    let names = [
        ("counting.json", None),
        ("counting-masked.json", None),
        ("full-pso.json", None),
        ("ext-enc.json", None),
        ("kanon-suppress.json", None),
        ("kanon-interval.json", None),
        ("trivial-hash.json", None),
        (
            "kanon-suppress.json",
            Some(r#"{"name":"kanon-suppress-direct"}"#),
        ),
    ];
    let mut bad = Vec::new();
    for (file, swap) in names {
        let mut cfg = load_config(file);
        if let Some(a) = swap {
            cfg.adversary = serde_json::from_str(a).unwrap();
        }
        cfg.trials = 5;
        cfg.n = cfg.n.min(256);
        let exp = experiment(&cfg);
        for t in 0..5 {
            if run_trial(&exp, t, true).unwrap() != run_trial(&exp, t, true).unwrap() {
                bad.push(cfg.adversary.name());
            }
        }
    }
    Check::new("adversaries are deterministic given their stream", bad.is_empty(), bad.join(","))
}

/// The 1-bit release `count(q) ≥ n/2` leaves the best implemented
/// adversary within twice the baseline.
pub fn small_codomain(trials: u64) -> Check {
    let text = format!(
        r#"{{
        "distribution": {{"kind": "uniform_bits", "d": 16}},
        "n": 32, "w_low": "2^-10", "trials": {trials}, "seed": 2,
        "mechanism": {{"name": "counts", "queries": [{{"width": 16, "expr": {{"op": "threshold", "bound": "0x8000"}}}}]}},
        "post_map": {{"map": "threshold_bit", "at": 16}},
        "adversary": {{"name": "trivial-hash", "m": 12}}
    }}"#
    );
    let mut cfg = ExperimentConfig::from_json(&text).unwrap();
    let mut best = (0.0, 0.0);
    for adv in [r#"{"name":"trivial-hash","m":12}"#, r#"{"name":"counting"}"#] {
        cfg.adversary = serde_json::from_str(adv).unwrap();
        let r = run_experiment(&experiment(&cfg), Workers(0)).unwrap();
        if r.p_hat >= best.0 {
            best = (r.p_hat, r.ci_low);
        }
    }
    let bound = 2.0 * b_formula(32, 2f64.powi(-10));
    Check::new(
        "one-bit release stays within 2 B(n, w)",
        best.1 <= bound,
        format!("best p_hat={:.4} bound={bound:.4}", best.0),
    )
}

pub fn full_pso_disjoint(trials: u64) -> Check {
    let mut cfg = load_config("full-pso.json");
    cfg.trials = trials;
    let exp = experiment(&cfg);
    let mut bad = 0;
    for t in 0..trials {
        let x = sample_dataset(&cfg.distribution, cfg.n as usize, &mut stream(cfg.seed, t, Role::Dataset)).unwrap();
        let out = exp.mechanism.run(&x, &mut stream(cfg.seed, t, Role::Mechanism)).unwrap();
        let ctx = AttackContext {
            width: 40,
            n: cfg.n,
            w_low: cfg.w_low,
            w_high: 1.0,
            class: Side::Low,
            distribution: None,
            k: None,
            k_max: None,
        };
        let rec = run_trial(&exp, t, false).unwrap();
        let a = cfg.adversary.attack(&out, &ctx, &mut stream(cfg.seed, t, Role::Adversary)).unwrap();
        let direct = match a.outcome {
            Outcome::Full(ps) => disjoint_isolation(&ps, &x),
            _ => false,
        };
        bad += (direct != rec.isolated) as u32;
    }
    Check::new(
        "full singling out is scored as n disjoint isolating predicates",
        bad == 0,
        format!("{bad} disagreements"),
    )
}

fn disjoint_isolation(ps: &[Predicate], x: &Dataset) -> bool {
    if ps.len() != x.len() {
        return false;
    }
    let isolate = ps.iter().all(|p| p.count_matches(x).unwrap() == 1);
    let disjoint = x.rows().iter().all(|&r| ps.iter().filter(|p| p.eval(r)).count() <= 1);
    isolate && disjoint
}
