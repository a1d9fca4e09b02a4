//! Equivalence is invariant under the moves that do not change the underlying
//! diffeomorphism, and separates schemes that differ in orientation data.

mod support;

use ms_classify::equivalence::{are_equivalent, canonical_curve_class, conjugacy_verdict};
use ms_classify::validator::validate_decomposed;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::schemes::{load, mirror, relabel, rotate_ranks, twist};

const FIXTURES: [&str; 8] = [
    "beh3_sphere",
    "beh4_chain",
    "fifth_turn_sphere",
    "sphere_period_two_saddle",
    "swapped_separatrices",
    "torus_four_levels",
    "torus_two_saddles",
    "two_fifths_genus2",
];

#[test]
fn every_fixture_is_equivalent_to_itself() {
    for name in FIXTURES {
        let s = load(name);
        let v = are_equivalent(&s, &s);
        assert!(v.equivalent, "{name}: {:?}", v.obstruction);
        let w = v.witness.unwrap();
        assert_eq!(w.components.len(), s.levels.len());
        assert!(w.frames.iter().all(|(a, b)| a == b), "{name}: {w:?}");
    }
}

#[test]
fn fifth_and_two_fifths_turns_are_not_equivalent() {
    let v = are_equivalent(&load("fifth_turn_sphere"), &load("two_fifths_genus2"));
    assert!(!v.equivalent);
    assert!(v.obstruction.is_some());
    let c = conjugacy_verdict(&load("fifth_turn_sphere"), &load("two_fifths_genus2"));
    assert!(!c.conjugate);
}

#[test]
fn mirror_images_are_not_equivalent() {
    // periods, windings and saddle data all agree, only the search separates them
    let s = load("two_fifths_genus2");
    let m = mirror(&s);
    assert!(validate_decomposed(&m).is_valid(), "{:?}", validate_decomposed(&m));
    let v = are_equivalent(&s, &m);
    assert!(!v.equivalent);
    let why = v.obstruction.unwrap();
    assert!(!why.contains("periods") && !why.contains("windings") && !why.contains("saddle"), "{why}");
}

#[test]
fn distinct_fixtures_are_not_equivalent() {
    for (i, a) in FIXTURES.iter().enumerate() {
        for b in &FIXTURES[i + 1..] {
            assert!(!are_equivalent(&load(a), &load(b)).equivalent, "{a} ~ {b}");
        }
    }
}

#[test]
fn canonical_class_is_twist_invariant() {
    for name in FIXTURES {
        let s = load(name);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = twist(&s, &mut rng);
        for (la, lb) in s.levels.iter().zip(&t.levels) {
            for (id, sys) in &la.curves {
                for (c, d) in sys.curves.iter().zip(&lb.curves[id].curves) {
                    assert_eq!(canonical_curve_class(c), canonical_curve_class(d));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn equivalence_survives_relabelling_twists_and_rotation(idx in 0usize..FIXTURES.len(), seed in any::<u64>()) {
        let s = load(FIXTURES[idx]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = rotate_ranks(&twist(&relabel(&s, &mut rng), &mut rng), &mut rng);
        prop_assert!(validate_decomposed(&t).is_valid(), "{:?}", validate_decomposed(&t));
        let v = are_equivalent(&s, &t);
        prop_assert!(v.equivalent, "{:?}", v.obstruction);
        let back = are_equivalent(&t, &s);
        prop_assert!(back.equivalent);
    }
}
