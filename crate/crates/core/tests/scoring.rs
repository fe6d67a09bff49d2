use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use approx::assert_abs_diff_eq;
use ecobee_core::factors::{diagnose_factor_dir, FactorError};
use ecobee_core::scoring::{explain, round1, ScoringError, DEFAULT_EXPLAIN_TOP_K};
use ecobee_core::testkit::{dominated_swap, f0_dir, fixtures_dir, random_quiz, random_table};
use ecobee_core::{load_factor_tables, score, BoundaryWeights, CanonicalItem, FactorTable, ItemSource};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rows read with plain string splitting: domain -> option -> weights.
type RawTable = BTreeMap<String, BTreeMap<String, Vec<f64>>>;

fn read_raw(dir: &Path) -> RawTable {
    let mut out = RawTable::new();
    for entry in fs::read_dir(dir).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let cells: Vec<&str> = line.split(',').collect();
            let weights = cells[2..].iter().map(|c| c.trim().parse().unwrap()).collect();
            out.entry(cells[0].to_string())
                .or_default()
                .insert(cells[1].to_string(), weights);
        }
    }
    out
}

/// Unrounded boundary scores straight from the definition.
fn oracle_scores(raw: &RawTable, quiz: &[(&str, &str, f64)]) -> Vec<f64> {
    (0..9)
        .map(|b| {
            let mut p = 0.0;
            let mut pmax = 0.0;
            for (domain, option, qty) in quiz {
                p += qty * raw[*domain][*option][b];
                let max = raw[*domain].values().map(|w| w[b]).fold(0.0, f64::max);
                pmax += qty * max;
            }
            if pmax == 0.0 {
                100.0
            } else {
                (100.0 * (1.0 - p / pmax)).clamp(0.0, 100.0)
            }
        })
        .collect()
}

fn quiz(items: &[(&str, &str)]) -> Vec<CanonicalItem> {
    items
        .iter()
        .map(|(d, o)| CanonicalItem::new(*d, *o, ItemSource::Quiz))
        .collect()
}

fn f0() -> FactorTable {
    load_factor_tables(f0_dir()).unwrap()
}

#[test]
fn small_table_has_seven_rows_over_two_domains() {
    let dir = fixtures_dir().join("f_small");
    let raw = read_raw(&dir);
    let lines: usize = raw.values().map(BTreeMap::len).sum();
    let table = load_factor_tables(&dir).unwrap();
    assert_eq!(table.len(), lines);
    assert_eq!(table.len(), 7);
    assert_eq!(table.domains().count(), 2);
}

#[test]
fn f0_row_counts() {
    let table = f0();
    assert_eq!(table.len(), 19);
    let counts: Vec<(String, usize)> = table
        .domains()
        .map(|d| (d.to_string(), table.options(d).len()))
        .collect();
    assert_eq!(
        counts,
        [("fashion".into(), 4), ("food".into(), 6), ("housing".into(), 4), ("mobility".into(), 5)]
    );
}

#[test]
fn heaviest_meal_and_car_saturate_every_boundary() {
    let table = load_factor_tables(fixtures_dir().join("f_small")).unwrap();
    let result = score(
        &quiz(&[("food", "meat_heavy"), ("mobility", "car")]),
        &table,
        &BoundaryWeights::equal(),
        DEFAULT_EXPLAIN_TOP_K,
    )
    .unwrap();
    assert!(result.boundary_scores.iter().all(|(_, s)| s == 0.0));
    assert_eq!(result.composite, 0.0);
}

#[test]
fn mixed_quiz_frozen_values() {
    let items = quiz(&[
        ("food", "vegan"),
        ("mobility", "cycle"),
        ("fashion", "secondhand"),
        ("housing", "shared_flat"),
    ]);
    let result = score(&items, &f0(), &BoundaryWeights::equal(), DEFAULT_EXPLAIN_TOP_K).unwrap();
    assert_eq!(
        result.boundary_scores.as_array(),
        &[92.2, 96.9, 97.7, 95.8, 89.8, 93.5, 91.2, 84.6, 92.2]
    );
    assert_eq!(result.composite, 92.7);
    assert_eq!(result.items_scored, 4);
}

#[test]
fn best_and_worst_quizzes_anchor_the_scale() {
    let table = f0();
    let w = BoundaryWeights::equal();
    let best = quiz(&[
        ("food", "vegan"),
        ("mobility", "walk"),
        ("fashion", "secondhand"),
        ("housing", "passive_house"),
    ]);
    let worst = quiz(&[
        ("food", "meat_heavy"),
        ("mobility", "car"),
        ("fashion", "fast_fashion"),
        ("housing", "detached_house"),
    ]);
    assert_eq!(score(&best, &table, &w, 5).unwrap().composite, 100.0);
    assert_eq!(score(&worst, &table, &w, 5).unwrap().composite, 0.0);
}

#[test]
fn exhaustive_f0_matches_oracle() {
    let table = f0();
    let raw = read_raw(&f0_dir());
    let w = BoundaryWeights::equal();
    let domains: Vec<&String> = raw.keys().collect();
    let options: Vec<Vec<&String>> = domains.iter().map(|d| raw[*d].keys().collect()).collect();
    let mut checked = 0;
    let mut idx = vec![0usize; domains.len()];
    loop {
        let picks: Vec<(&str, &str, f64)> = domains
            .iter()
            .zip(&idx)
            .enumerate()
            .map(|(k, (d, &i))| (d.as_str(), options[k][i].as_str(), 1.0))
            .collect();
        let expected = oracle_scores(&raw, &picks);
        let items: Vec<CanonicalItem> = picks
            .iter()
            .map(|(d, o, _)| CanonicalItem::new(*d, *o, ItemSource::Quiz))
            .collect();
        let got = score(&items, &table, &w, 5).unwrap();
        for (b, s) in got.boundary_scores.iter() {
            assert_abs_diff_eq!(s, expected[b.index()], epsilon = 0.05 + 1e-9);
        }
        let expected_composite = expected.iter().map(|s| round1(*s)).sum::<f64>() / 9.0;
        assert_abs_diff_eq!(got.composite, expected_composite, epsilon = 0.05 + 1e-9);
        checked += 1;

        let mut k = 0;
        loop {
            if k == idx.len() {
                assert_eq!(checked, 6 * 5 * 4 * 4);
                return;
            }
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn randomized_bounds_and_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w = BoundaryWeights::equal();
    for _ in 0..2_000 {
        let table = random_table(&mut rng, 4, 6);
        let items = random_quiz(&mut rng, &table);
        let a = score(&items, &table, &w, 5).unwrap();
        let b = score(&items, &table, &w, 5).unwrap();
        assert!(a.boundary_scores.iter().all(|(_, s)| (0.0..=100.0).contains(&s)));
        assert!((0.0..=100.0).contains(&a.composite));
        assert_eq!(a.composite.to_bits(), b.composite.to_bits());
        assert_eq!(a.boundary_scores, b.boundary_scores);
        assert_eq!(a.explanations, b.explanations);
    }
}

#[test]
fn dominated_swaps_never_lower_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w = BoundaryWeights::equal();
    for _ in 0..1_000 {
        let case = dominated_swap(&mut rng, 4, 6);
        let before = score(&case.before, &case.table, &w, 5).unwrap();
        let after = score(&case.after, &case.table, &w, 5).unwrap();
        for ((_, x), (_, y)) in before.boundary_scores.iter().zip(after.boundary_scores.iter()) {
            assert!(y >= x, "{x} -> {y}");
        }
        assert!(after.composite >= before.composite);
    }
}

#[test]
fn explanations_are_the_largest_contributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let table = random_table(&mut rng, 4, 6);
        let items = random_quiz(&mut rng, &table);
        let k = rng.random_range(1..12);
        let got = explain(&items, &table, k).unwrap();
        let mut all = Vec::new();
        for item in &items {
            let w = table.weights(&item.domain, &item.option_key).unwrap();
            for b in ecobee_core::Boundary::ALL {
                let pressure = item.quantity * w[b.index()];
                if pressure > 0.0 {
                    all.push((pressure, item.domain.clone(), item.option_key.clone(), b));
                }
            }
        }
        all.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| a.1.cmp(&b.1))
                .then_with(|| a.2.cmp(&b.2))
                .then_with(|| a.3.code().cmp(b.3.code()))
        });
        all.truncate(k);
        let got: Vec<_> = got
            .iter()
            .map(|c| (c.pressure, c.domain.clone(), c.option_key.clone(), c.boundary))
            .collect();
        assert_eq!(got, all);
    }
}

#[test]
fn unknown_option_and_empty_quiz_are_errors() {
    let table = f0();
    let w = BoundaryWeights::equal();
    assert!(matches!(score(&[], &table, &w, 5), Err(ScoringError::EmptyItems)));
    assert!(matches!(
        score(&quiz(&[("food", "caviar")]), &table, &w, 5),
        Err(ScoringError::UnknownOption { .. })
    ));
}

#[test]
fn bad_tables_are_rejected_with_location() {
    match load_factor_tables(fixtures_dir().join("bad_negative")) {
        Err(FactorError::NegativeWeight { line, value, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(value, -0.1);
        }
        other => panic!("expected negative weight, got {other:?}"),
    }
    assert!(matches!(
        load_factor_tables(fixtures_dir().join("bad_missing_column")),
        Err(FactorError::MissingColumn { .. })
    ));
    let diagnostics = diagnose_factor_dir(fixtures_dir().join("bad_negative")).unwrap();
    assert_eq!(diagnostics.len(), 2);
    assert_eq!(diagnostics.iter().filter(|d| d.outcome.is_ok()).count(), 1);
}

proptest! {
    #[test]
    fn quantity_scaling_leaves_scores_unchanged(seed in any::<u64>(), factor in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = random_table(&mut rng, 3, 4);
        let items: Vec<CanonicalItem> = random_quiz(&mut rng, &table)
            .into_iter()
            .map(|i| i.with_quantity(1.0))
            .collect();
        let scaled: Vec<CanonicalItem> = items.iter().cloned().map(|i| i.with_quantity(factor)).collect();
        let w = BoundaryWeights::equal();
        let a = score(&items, &table, &w, 5).unwrap();
        let b = score(&scaled, &table, &w, 5).unwrap();
        for ((_, x), (_, y)) in a.boundary_scores.iter().zip(b.boundary_scores.iter()) {
            prop_assert!((x - y).abs() <= 0.1 + 1e-9);
        }
    }

    #[test]
    fn item_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = random_table(&mut rng, 4, 4);
        let items = random_quiz(&mut rng, &table);
        let mut reversed = items.clone();
        reversed.reverse();
        let w = BoundaryWeights::equal();
        let a = score(&items, &table, &w, 5).unwrap();
        let b = score(&reversed, &table, &w, 5).unwrap();
        for ((_, x), (_, y)) in a.boundary_scores.iter().zip(b.boundary_scores.iter()) {
            prop_assert!((x - y).abs() <= 0.1 + 1e-9);
        }
    }
}
