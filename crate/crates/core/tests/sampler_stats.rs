use std::f64::consts::SQRT_2;

use classical_chsh::model::{
    build_measure, build_pair_table, chsh_value, outcome_pairs, setting_pairs, AngleConfig, ChshPattern, OmegaPoint,
};
use classical_chsh::randtests::special::chi_square_sf;
use classical_chsh::sampler::{generate_stream, generate_stream_parallel, sample_omega, EventRng, Record, SeedSpec};
use classical_chsh::stats::{empirical_chsh, empirical_conditionals, Counts};
use proptest::prelude::*;

const N: u64 = 1_000_000;

fn tsirelson_stream(seed: u64, n: u64) -> Vec<Record> {
    generate_stream(&SeedSpec::with_default_shards(seed), n, &AngleConfig::tsirelson())
}

#[test]
fn atom_frequencies_match_weights() {
    let m = build_measure(&AngleConfig::tsirelson());
    let mut rng = EventRng::for_shard(42, 0);
    let mut hits = [0u64; 16];
    for _ in 0..N {
        hits[sample_omega(&mut rng, &m).canonical_index()] += 1;
    }
    let mut chi2 = 0.0;
    for (k, omega) in OmegaPoint::all().into_iter().enumerate() {
        let w = m.weight(omega);
        let expected = w * N as f64;
        let se = (w * (1.0 - w) / N as f64).sqrt();
        let freq = hits[k] as f64 / N as f64;
        assert!((freq - w).abs() <= 4.0 * se, "atom {k}: {freq} vs {w}");
        chi2 += (hits[k] as f64 - expected).powi(2) / expected;
    }
    let p = chi_square_sf(chi2, 15.0);
    assert!(p > 0.001, "chi-square {chi2}, p = {p}");
}

#[test]
fn setting_pairs_are_uniform_and_conditionals_agree() {
    let records = tsirelson_stream(42, N);
    let counts = Counts::from_records(&records);
    assert_eq!(counts.total(), N);
    let se = (0.25 * 0.75 / N as f64).sqrt();
    for (i, j) in setting_pairs() {
        let f = counts.block(i, j) as f64 / N as f64;
        assert!((f - 0.25).abs() <= 4.0 * se, "({i},{j}) frequency {f}");
    }
    let cond = empirical_conditionals(&counts).unwrap();
    let table = build_pair_table(&AngleConfig::tsirelson());
    for (i, j) in setting_pairs() {
        let row: f64 = outcome_pairs()
            .iter()
            .map(|&(a, b)| cond.get(i, j, a, b).estimate)
            .sum();
        assert!((row - 1.0).abs() < 1e-12);
        for (a, b) in outcome_pairs() {
            let e = cond.get(i, j, a, b);
            assert!((e.estimate - table.get(i, j, a, b)).abs() <= 4.0 * e.se);
        }
    }
    let est = empirical_chsh(&counts, ChshPattern::Minus22).unwrap();
    assert!(
        (est.s - 2.0 * SQRT_2).abs() <= 5.0 * est.se_s,
        "S_hat = {} ± {}",
        est.s,
        est.se_s
    );
    // sqrt(4 * (1 - 1/2) / (N/4)) with |E| = 1/sqrt(2) in every block.
    let se_expected = (4.0 * 0.5 / (N as f64 / 4.0)).sqrt();
    assert!((est.se_s / se_expected - 1.0).abs() < 0.01, "se_S = {}", est.se_s);
    assert!(est.s - 2.0 > 4.0 * est.se_s);
}

#[test]
fn estimator_error_shrinks_with_n() {
    let table = build_pair_table(&AngleConfig::tsirelson());
    let worst = |n: u64| {
        let cond = empirical_conditionals(&Counts::from_records(&tsirelson_stream(7, n))).unwrap();
        let mut w: f64 = 0.0;
        for (i, j) in setting_pairs() {
            for (a, b) in outcome_pairs() {
                w = w.max((cond.get(i, j, a, b).estimate - table.get(i, j, a, b)).abs());
            }
        }
        w
    };
    let (e4, e5, e6) = (worst(10_000), worst(100_000), worst(1_000_000));
    assert!(e4 > e5 && e5 > e6, "{e4} {e5} {e6}");
}

#[test]
fn two_sigma_coverage_over_200_seeds() {
    let exact = chsh_value(&AngleConfig::tsirelson(), ChshPattern::Minus22).s;
    let covered = (0..200u64)
        .filter(|k| {
            let counts = Counts::from_records(&tsirelson_stream(10_000 + k, 10_000));
            let est = empirical_chsh(&counts, ChshPattern::Minus22).unwrap();
            (est.s - exact).abs() <= 2.0 * est.se_s
        })
        .count();
    let rate = covered as f64 / 200.0;
    assert!((0.90..=0.99).contains(&rate), "coverage {rate}");
}

#[test]
fn parallel_accumulation_equals_serial() {
    let records = tsirelson_stream(11, 200_000);
    let serial = Counts::from_records(&records);
    let merged = std::thread::scope(|s| {
        let handles: Vec<_> = records
            .chunks(30_001)
            .map(|chunk| s.spawn(move || Counts::from_records(chunk)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap())
            .fold(Counts::new(), |acc, c| acc + c)
    });
    assert_eq!(serial, merged);
}

#[test]
fn worker_count_does_not_change_the_stream() {
    let seeds = SeedSpec::new(42, 4096).unwrap();
    let a = AngleConfig::tsirelson();
    let serial = generate_stream(&seeds, 100_003, &a);
    for workers in [1, 3, 8] {
        assert_eq!(generate_stream_parallel(&seeds, 100_003, &a, workers).unwrap(), serial);
    }
}

#[test]
fn degenerate_angles_never_emit_zero_weight_atoms() {
    let a = AngleConfig::uniform(0.3).unwrap();
    let records = generate_stream(&SeedSpec::new(1, 100).unwrap(), 50_000, &a);
    assert!(records.iter().all(|r| r.a == r.b));
    let est = empirical_chsh(&Counts::from_records(&records), ChshPattern::Minus22).unwrap();
    assert_eq!(est.s, 2.0);
}

fn record() -> impl Strategy<Value = Record> {
    (0usize..16).prop_map(|k| Record::all()[k])
}

proptest! {
    #[test]
    fn counts_merge_is_commutative_and_associative(
        x in proptest::collection::vec(record(), 0..200),
        y in proptest::collection::vec(record(), 0..200),
        z in proptest::collection::vec(record(), 0..200),
    ) {
        let (cx, cy, cz) = (Counts::from_records(&x), Counts::from_records(&y), Counts::from_records(&z));
        prop_assert_eq!(cx + cy, cy + cx);
        prop_assert_eq!((cx + cy) + cz, cx + (cy + cz));
        let all: Vec<Record> = x.iter().chain(&y).chain(&z).copied().collect();
        prop_assert_eq!(Counts::from_records(&all), cx + cy + cz);
    }

    #[test]
    fn accumulation_ignores_order(mut xs in proptest::collection::vec(record(), 0..300), seed: u64) {
        let before = Counts::from_records(&xs);
        let n = xs.len();
        if n > 1 {
            for k in 0..n {
                xs.swap(k, (seed.wrapping_mul(k as u64 + 1) % n as u64) as usize);
            }
        }
        prop_assert_eq!(Counts::from_records(&xs), before);
    }

    #[test]
    fn correlation_estimates_stay_in_range(xs in proptest::collection::vec(record(), 0..400)) {
        let c = Counts::from_records(&xs);
        if let Ok(est) = empirical_chsh(&c, ChshPattern::Minus22) {
            for (row, se_row) in est.correlations.iter().zip(&est.se_correlations) {
                for (e, se) in row.iter().zip(se_row) {
                    prop_assert!((-1.0..=1.0).contains(e));
                    prop_assert!(*se >= 0.0);
                }
            }
        }
    }
}
