//! Fixture locations and synthetic data shared by the workspace's tests.

use std::path::PathBuf;

use rand::Rng;

use crate::boundary::{Boundary, BoundaryScores, BOUNDARY_COUNT};
use crate::factors::{FactorRow, FactorTable};
use crate::item::{CanonicalItem, ItemSource};
use crate::leaderboard::LeaderboardEntry;
use crate::recommend::graph::DEFAULT_SUBSTITUTABILITY;
use crate::recommend::{ActionCatalog, ActionGraph, WeightedGraph};
use crate::scoring::round1;

/// The workspace `fixtures/` directory.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Four-domain factor table: food, mobility, fashion, housing.
pub fn f0_dir() -> PathBuf {
    fixtures_dir().join("f0")
}

pub fn fixture_catalog() -> ActionCatalog {
    ActionCatalog::load(fixtures_dir().join("actions.csv")).expect("fixture catalog loads")
}

/// The 30-node graph over the fixture catalog and the nine boundaries.
pub fn fixture_graph() -> ActionGraph {
    ActionGraph::build(fixture_catalog(), DEFAULT_SUBSTITUTABILITY).expect("fixture graph is connected")
}

/// Two disjoint unit-weight cliques of `size` nodes: `0..size` and
/// `size..2*size`.
pub fn two_cliques(size: usize) -> WeightedGraph {
    let mut g = WeightedGraph::new();
    for i in 0..2 * size {
        g.add_node(format!("n{i}")).expect("unique ids");
    }
    for offset in [0, size] {
        for a in offset..offset + size {
            for b in a + 1..offset + size {
                g.add_edge(a, b, 1.0).expect("valid edge");
            }
        }
    }
    g
}

/// Pilot cohort shape: 52 composites, mean 50.9, population SD 7.7,
/// range 36–62.
pub const PILOT_N: usize = 52;
pub const PILOT_MEAN: f64 = 50.9;
pub const PILOT_SD: f64 = 7.7;
pub const PILOT_MIN: f64 = 36.0;
pub const PILOT_MAX: f64 = 62.0;

/// Per-boundary offsets from the composite. They sum to zero, so with equal
/// weights the composite is unchanged, and they put the cohort means near
/// climate 48.6, biosphere 53.6 and 50 for biogeochemical, freshwater and
/// aerosols.
pub const PILOT_BOUNDARY_OFFSETS: [f64; BOUNDARY_COUNT] = [-2.3, 2.7, -0.9, 0.0, -0.9, 0.4, -0.9, 0.8, 1.1];

/// Quantiles of the symmetric triangular distribution on [-1, 1].
fn triangular_quantile(u: f64) -> f64 {
    if u < 0.5 {
        (2.0 * u).sqrt() - 1.0
    } else {
        1.0 - (2.0 * (1.0 - u)).sqrt()
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// 52 composite scores (one decimal) with the pilot's mean, SD and range.
///
/// Two entries sit at the range endpoints; the other 50 follow a unimodal
/// triangular shape `clamp(center + spread·z)` whose center and spread are
/// solved by bisection to hit the target mean and SD.
pub fn pilot_composites() -> Vec<f64> {
    let interior = PILOT_N - 2;
    let z: Vec<f64> = (0..interior)
        .map(|i| triangular_quantile((i as f64 + 0.5) / interior as f64))
        .collect();
    let build = |center: f64, spread: f64| -> Vec<f64> {
        let mut xs = vec![PILOT_MIN, PILOT_MAX];
        xs.extend(z.iter().map(|z| (center + spread * z).clamp(PILOT_MIN, PILOT_MAX)));
        xs
    };
    let center_for = |spread: f64| bisect(PILOT_MIN, PILOT_MAX, |c| mean_sd(&build(c, spread)).0 - PILOT_MEAN);
    let spread = bisect(0.0, 100.0, |s| mean_sd(&build(center_for(s), s)).1 - PILOT_SD);
    build(center_for(spread), spread).into_iter().map(round1).collect()
}

/// Leaderboard entries for the synthetic pilot cohort, spread over three
/// campuses, with boundary scores consistent with each composite under
/// equal weights.
pub fn pilot_cohort() -> Vec<LeaderboardEntry> {
    const CAMPUSES: [&str; 3] = ["north", "south", "city"];
    pilot_composites()
        .into_iter()
        .enumerate()
        .map(|(i, composite)| {
            let mut scores = [0.0; BOUNDARY_COUNT];
            for b in Boundary::ALL {
                scores[b.index()] = round1(composite + PILOT_BOUNDARY_OFFSETS[b.index()]);
            }
            LeaderboardEntry {
                pseudonym: format!("pilot-{i:03}"),
                campus: CAMPUSES[i % CAMPUSES.len()].to_string(),
                composite,
                boundary_scores: BoundaryScores::new(scores).expect("offsets keep scores in range"),
                submitted_at: 1_700_000_000 + i as i64 * 60,
            }
        })
        .collect()
}

fn random_weights<R: Rng>(rng: &mut R) -> [f64; BOUNDARY_COUNT] {
    std::array::from_fn(|_| {
        if rng.random_bool(0.3) {
            0.0
        } else {
            rng.random_range(0.0..5.0)
        }
    })
}

/// Random table with 1..=`max_domains` domains of 1..=`max_options` options.
pub fn random_table<R: Rng>(rng: &mut R, max_domains: usize, max_options: usize) -> FactorTable {
    let domains = rng.random_range(1..=max_domains);
    let mut rows = Vec::new();
    for d in 0..domains {
        let options = rng.random_range(1..=max_options);
        for o in 0..options {
            rows.push(FactorRow {
                domain: format!("d{d}"),
                option_key: format!("o{o}"),
                weights: random_weights(rng),
            });
        }
    }
    FactorTable::from_rows(rows, "random").expect("generated rows are valid")
}

/// One quiz item per domain with a random option and quantity in `[0, 3]`.
pub fn random_quiz<R: Rng>(rng: &mut R, table: &FactorTable) -> Vec<CanonicalItem> {
    let domains: Vec<String> = table.domains().map(str::to_string).collect();
    domains
        .into_iter()
        .map(|domain| {
            let options = table.options(&domain);
            let option = options[rng.random_range(0..options.len())].clone();
            let quantity = if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.0..=3.0) };
            CanonicalItem::new(domain, option, ItemSource::Quiz).with_quantity(quantity)
        })
        .collect()
}

/// A random quiz and the same quiz with one item switched to a new option
/// that is no heavier than the original on any boundary.
pub struct DominatedSwap {
    pub table: FactorTable,
    pub before: Vec<CanonicalItem>,
    pub after: Vec<CanonicalItem>,
}

pub fn dominated_swap<R: Rng>(rng: &mut R, max_domains: usize, max_options: usize) -> DominatedSwap {
    let base = random_table(rng, max_domains, max_options);
    let before = random_quiz(rng, &base);
    let target = rng.random_range(0..before.len());
    let original = *base
        .weights(&before[target].domain, &before[target].option_key)
        .expect("quiz uses table rows");
    let lighter: [f64; BOUNDARY_COUNT] = std::array::from_fn(|b| {
        if rng.random_bool(0.3) {
            original[b]
        } else {
            original[b] * rng.random_range(0.0..=1.0)
        }
    });
    let mut rows: Vec<FactorRow> = base.rows().collect();
    rows.push(FactorRow {
        domain: before[target].domain.clone(),
        option_key: "lighter".into(),
        weights: lighter,
    });
    let table = FactorTable::from_rows(rows, "swap").expect("dominated row is valid");
    let mut after = before.clone();
    after[target].option_key = "lighter".into();
    DominatedSwap { table, before, after }
}
