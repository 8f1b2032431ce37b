mod common;

use common::*;
use proptest::prelude::*;
use psolab::domain::{Dataset, Dyadic, HashCut, Pattern, Predicate};
use psolab::gf2::FieldWidth;
use psolab::hash::HashParams;

fn assert_check(c: Check) {
    assert!(c.pass, "{}: {}", c.name, c.detail);
}

#[test]
fn field_exhaustive_d8() {
    assert_check(gf8_associative());
    assert_check(gf8_affine_bijection());
    assert_check(gf8_hash_uniform());
}

#[test]
fn lhl_window_by_enumeration() {
    assert_check(lhl_containment(200));
}

#[test]
fn fixed_predicate_isolation_matches_baseline() {
    assert_check(isolation_identity(100_000));
}

#[test]
fn wilson_coverage() {
    assert_check(wilson_calibration());
}

#[test]
fn permutation_and_post_processing() {
    for c in permutation_property(2000) {
        assert_check(c);
    }
    assert_check(post_processing_property(500));
}

#[test]
fn counting_reconstruction_oracle() {
    assert_check(counting_oracle(3000));
}

#[test]
fn adversary_purity() {
    assert_check(adversaries_are_pure());
}

#[test]
fn one_bit_release_bound() {
    assert_check(small_codomain(5000));
}

#[test]
fn full_pso_scoring() {
    assert_check(full_pso_disjoint(200));
}

#[test]
fn kanon_attack_decomposes() {
    assert_check(kanon_decomposition(2000));
}

fn leaf() -> impl Strategy<Value = Predicate> {
    prop_oneof![
        (0u128..=256).prop_map(|b| Predicate::threshold(8, b).unwrap()),
        (1u32..=8, any::<bool>()).prop_map(|(i, b)| Predicate::bit_test(8, i, b).unwrap()),
        (0u128..256).prop_map(|v| Predicate::equality(8, v).unwrap()),
        (0u128..256, 0u128..256).prop_map(|(c, b)| Predicate::pattern(Pattern::new(8, c, b & c).unwrap())),
        (0u128..256, 0u128..256).prop_map(|(a, b)| Predicate::interval(8, a.min(b), a.max(b)).unwrap()),
        Just(Predicate::parity(8).unwrap()),
        (1u128..256, 0u128..256, 1u32..=8, 0u128..=16, any::<bool>()).prop_map(|(a, b, m, num, strict)| {
            let h = HashParams::new(a, b, m, FieldWidth::W8).unwrap();
            Predicate::hash_threshold(8, HashCut::new(h, Dyadic::new(num, 4).unwrap(), strict)).unwrap()
        }),
        (1u128..256, 0u128..256, 0u128..16).prop_map(|(a, b, v)| {
            let h = HashParams::new(a, b, 4, FieldWidth::W8).unwrap();
            Predicate::hash_lift(8, h, Predicate::threshold(4, v).unwrap()).unwrap()
        }),
    ]
}

fn predicate() -> impl Strategy<Value = Predicate> {
    leaf().prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 1..4).prop_map(|ps| Predicate::and(8, ps).unwrap()),
            proptest::collection::vec(inner.clone(), 1..4).prop_map(|ps| Predicate::or(8, ps).unwrap()),
            inner.prop_map(|p| p.not()),
        ]
    })
}

proptest! {
    #[test]
    fn isolation_is_a_single_match(p in predicate(), rows in proptest::collection::vec(0u128..256, 1..=16)) {
        let x = Dataset::new(8, rows.clone()).unwrap();
        let matches: Vec<usize> = (0..rows.len()).filter(|&i| p.eval(rows[i])).collect();
        let expect = (matches.len() == 1).then(|| matches[0]);
        prop_assert_eq!(p.isolated_row(&x).unwrap(), expect);
        prop_assert_eq!(p.count_matches(&x).unwrap(), matches.len());
    }

    #[test]
    fn boolean_identities(a in predicate(), b in predicate()) {
        let and = Predicate::and(8, [a.clone(), b.clone()]).unwrap();
        let or = Predicate::or(8, [a.clone(), b.clone()]).unwrap();
        let de_morgan_and = Predicate::or(8, [a.clone().not(), b.clone().not()]).unwrap();
        let de_morgan_or = Predicate::and(8, [a.clone().not(), b.clone().not()]).unwrap();
        for x in 0..256u128 {
            prop_assert_eq!(and.clone().not().eval(x), de_morgan_and.eval(x));
            prop_assert_eq!(or.clone().not().eval(x), de_morgan_or.eval(x));
            prop_assert_eq!(a.clone().not().not().eval(x), a.eval(x));
            prop_assert_eq!(Predicate::or(8, [a.clone(), a.clone().not()]).unwrap().eval(x), true);
        }
    }
}
