use std::f64::consts::{PI, SQRT_2};

use classical_chsh::model::{
    build_measure, build_pair_table, chsh_value, conditional_table, correlation, evaluate_variables, outcome_pairs,
    setting_pairs, AngleConfig, ChshPattern, Measure, OmegaPoint, SettingIndex, BOUND_TOL, EXACT_TOL,
};
use proptest::prelude::*;

fn angles() -> impl Strategy<Value = AngleConfig> {
    let a = -4.0 * PI..4.0 * PI;
    (a.clone(), a.clone(), a.clone(), a).prop_map(|(t1, t2, t1p, t2p)| AngleConfig::new(t1, t2, t1p, t2p).unwrap())
}

/// `E[f | η_L = i, η_R = j]` by summing over all 16 atoms.
fn enumerate_conditional(m: &Measure, i: SettingIndex, j: SettingIndex, f: impl Fn(i8, i8) -> f64) -> f64 {
    let mut mass = 0.0;
    let mut acc = 0.0;
    for omega in OmegaPoint::all() {
        let v = evaluate_variables(omega);
        if v.eta_left == i && v.eta_right == j {
            let w = m.weight(omega);
            mass += w;
            acc += w * f(v.a(i), v.b(j));
        }
    }
    acc / mass
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn normalization(a in angles()) {
        let m = build_measure(&a);
        prop_assert!((m.total() - 1.0).abs() < EXACT_TOL);
        let t = build_pair_table(&a);
        for (i, j) in setting_pairs() {
            prop_assert!((t.block_sum(i, j) - 1.0).abs() < EXACT_TOL);
            prop_assert!((m.setting_mass(i, j) - 0.25).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn conditional_round_trip(a in angles()) {
        let cond = conditional_table(&build_measure(&a)).unwrap();
        prop_assert!(cond.max_abs_diff(&build_pair_table(&a)) < EXACT_TOL);
    }

    #[test]
    fn correlation_identity(a in angles()) {
        let t = build_pair_table(&a);
        for (i, j) in setting_pairs() {
            let want = (a.left(i) - a.right(j)).cos();
            prop_assert!((correlation(&a, i, j) - want).abs() < EXACT_TOL);
            prop_assert!((t.correlation(i, j) - want).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn marginals_are_unbiased(a in angles()) {
        let m = build_measure(&a);
        for (i, j) in setting_pairs() {
            let left_plus = enumerate_conditional(&m, i, j, |x, _| f64::from(u8::from(x == 1)));
            let right_plus = enumerate_conditional(&m, i, j, |_, y| f64::from(u8::from(y == 1)));
            prop_assert!((left_plus - 0.5).abs() < EXACT_TOL);
            prop_assert!((right_plus - 0.5).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn brute_force_matches_closed_forms(a in angles()) {
        let m = build_measure(&a);
        let t = build_pair_table(&a);
        for (i, j) in setting_pairs() {
            let e = enumerate_conditional(&m, i, j, |x, y| f64::from(x * y));
            prop_assert!((e - (a.left(i) - a.right(j)).cos()).abs() < EXACT_TOL);
            for (s, sp) in outcome_pairs() {
                let p = enumerate_conditional(&m, i, j, |x, y| f64::from(u8::from(x == s.value() && y == sp.value())));
                prop_assert!((p - t.get(i, j, s, sp)).abs() < EXACT_TOL);
            }
        }
    }

    #[test]
    fn chsh_is_bounded_and_s_max_is_the_best_pattern(a in angles()) {
        let c = chsh_value(&a, ChshPattern::Minus22);
        let brute = ChshPattern::ALL
            .iter()
            .map(|p| {
                let mut s = 0.0;
                for (i, j) in setting_pairs() {
                    let sign = if p.negated() == (i, j) { -1.0 } else { 1.0 };
                    s += sign * (a.left(i) - a.right(j)).cos();
                }
                s
            })
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((c.s_max - brute).abs() < EXACT_TOL);
        prop_assert!(c.s_max <= 2.0 * SQRT_2 + BOUND_TOL);
        for row in c.correlations {
            for e in row {
                prop_assert!(e.abs() <= 1.0 + EXACT_TOL);
            }
        }
    }
}

#[test]
fn random_variables_vanish_off_support() {
    for omega in OmegaPoint::all() {
        let v = evaluate_variables(omega);
        for i in SettingIndex::BOTH {
            let expect_nonzero = v.eta_left == i;
            assert_eq!(v.a(i) != 0, expect_nonzero);
            assert_eq!(v.b(i) != 0, v.eta_right == i);
        }
        let [x1, x2, x3, x4] = omega.coords();
        assert_eq!((v.a1, v.a2, v.b1, v.b2), (x1, x2, x3, x4));
    }
}

#[test]
fn joint_probability_of_variables_is_the_atom_weight() {
    let a = AngleConfig::tsirelson();
    let m = build_measure(&a);
    let t = build_pair_table(&a);
    for (i, j) in setting_pairs() {
        for (s, sp) in outcome_pairs() {
            let joint: f64 = m
                .atoms()
                .filter(|(omega, _)| {
                    let v = evaluate_variables(*omega);
                    v.a(i) == s.value() && v.b(j) == sp.value()
                })
                .map(|(_, w)| w)
                .sum();
            assert!((joint - 0.25 * t.get(i, j, s, sp)).abs() < EXACT_TOL);
        }
    }
}
