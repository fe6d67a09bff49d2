use std::collections::BTreeSet;
use std::fs;

use ecobee_core::recommend::rank::{DEFAULT_K_BOUNDARIES, DEFAULT_N_RECS};
use ecobee_core::recommend::{
    fallback_rank, rank_recommendations, ActionGraph, EmbeddingModel, Hyperparameters, RankError, RankRequest,
};
use ecobee_core::testkit::{fixture_catalog, fixture_graph, fixtures_dir};
use ecobee_core::{Boundary, BoundaryScores};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct RawAction {
    id: String,
    tags: Vec<String>,
    replaces: Option<String>,
    relevance: Vec<f64>,
}

fn raw_actions() -> Vec<RawAction> {
    let text = fs::read_to_string(fixtures_dir().join("actions.csv")).unwrap();
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            RawAction {
                id: cells[0].into(),
                tags: cells[3].split(';').filter(|t| !t.is_empty()).map(String::from).collect(),
                replaces: Some(cells[4]).filter(|s| !s.is_empty()).map(String::from),
                relevance: cells[5..].iter().map(|c| c.parse().unwrap()).collect(),
            }
        })
        .collect()
}

fn random_scores(rng: &mut ChaCha8Rng) -> BoundaryScores {
    // a coarse grid makes tied scores common
    let values = std::array::from_fn(|_| {
        if rng.random_bool(0.3) {
            rng.random_range(0..5) as f64 * 25.0
        } else {
            (rng.random_range(0.0..100.0f64) * 10.0).round() / 10.0
        }
    });
    BoundaryScores::new(values).unwrap()
}

fn random_context(rng: &mut ChaCha8Rng) -> (BTreeSet<String>, BTreeSet<String>) {
    let tags = ["north", "south", "city"];
    let options = ["meat_heavy", "soft_drink", "car", "fast_fashion", "new_basics", "detached_house", "vegan"];
    let ctx = tags.iter().filter(|_| rng.random_bool(0.5)).map(|s| s.to_string()).collect();
    let current = (0..rng.random_range(0..4))
        .map(|_| options.choose(rng).unwrap().to_string())
        .collect();
    (ctx, current)
}

fn lowest_k(scores: &BoundaryScores, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..9).collect();
    idx.sort_by(|&a, &b| scores.as_array()[a].total_cmp(&scores.as_array()[b]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Every feasible action scored from the raw rows, fully sorted.
fn oracle(
    scores: &BoundaryScores,
    ctx: &BTreeSet<String>,
    current: &BTreeSet<String>,
    affinity: impl Fn(usize, usize) -> f64,
) -> Vec<(String, f64)> {
    let mut targets = lowest_k(scores, DEFAULT_K_BOUNDARIES);
    targets.sort();
    let mut all: Vec<(String, f64)> = raw_actions()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.tags.is_empty() || a.tags.iter().any(|t| ctx.contains(t)))
        .filter(|(_, a)| a.replaces.as_ref().is_none_or(|r| !current.contains(r)))
        .map(|(i, a)| {
            let rel = targets
                .iter()
                .map(|&b| (100.0 - scores.as_array()[b]) / 100.0 * affinity(i, b))
                .sum();
            (a.id.clone(), rel)
        })
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all
}

fn check_case(recs: &[ecobee_core::recommend::Recommendation], expected: &[(String, f64)], scores: &BoundaryScores) {
    let lowest: BTreeSet<Boundary> = lowest_k(scores, DEFAULT_K_BOUNDARIES)
        .into_iter()
        .map(|i| Boundary::ALL[i])
        .collect();
    let expected: Vec<&(String, f64)> = expected.iter().take(DEFAULT_N_RECS).collect();
    assert_eq!(recs.len(), expected.len());
    for (rec, (id, rel)) in recs.iter().zip(expected) {
        assert_eq!(&rec.action_id, id);
        assert_eq!(rec.relevance, *rel);
        assert!(!rec.target_boundaries.is_empty());
        assert!(rec.target_boundaries.iter().all(|b| lowest.contains(b)));
    }
}

#[test]
fn fallback_top_five_matches_exhaustive_oracle() {
    let catalog = fixture_catalog();
    let raw = raw_actions();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let scores = random_scores(&mut rng);
        let (ctx, current) = random_context(&mut rng);
        let req = RankRequest {
            scores: &scores,
            feasibility_context: &ctx,
            current_options: &current,
            k_boundaries: DEFAULT_K_BOUNDARIES,
            n_recs: DEFAULT_N_RECS,
        };
        let expected = oracle(&scores, &ctx, &current, |i, b| raw[i].relevance[b]);
        match fallback_rank(&req, &catalog) {
            Ok(recs) => check_case(&recs, &expected, &scores),
            Err(e) => {
                assert_eq!(e, RankError::NoFeasibleActions);
                assert!(expected.is_empty());
            }
        }
    }
}

#[test]
fn embedding_top_five_matches_exhaustive_oracle() {
    let graph = fixture_graph();
    let hyper = Hyperparameters { dimension: 16, epochs: 3, ..Default::default() };
    let model = EmbeddingModel::fit(graph.graph(), hyper, 5).unwrap().model;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..200 {
        let scores = random_scores(&mut rng);
        let (ctx, current) = random_context(&mut rng);
        let req = RankRequest {
            scores: &scores,
            feasibility_context: &ctx,
            current_options: &current,
            k_boundaries: DEFAULT_K_BOUNDARIES,
            n_recs: DEFAULT_N_RECS,
        };
        let expected = oracle(&scores, &ctx, &current, |i, b| {
            ecobee_core::recommend::model::cosine(model.vector(9 + i), model.vector(b))
        });
        match rank_recommendations(&req, &graph, &model) {
            Ok(recs) => check_case(&recs, &expected, &scores),
            Err(e) => {
                assert_eq!(e, RankError::NoFeasibleActions);
                assert!(expected.is_empty());
            }
        }
    }
}

#[test]
fn returned_actions_are_feasible() {
    let catalog = fixture_catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let scores = random_scores(&mut rng);
        let (ctx, current) = random_context(&mut rng);
        let req = RankRequest {
            scores: &scores,
            feasibility_context: &ctx,
            current_options: &current,
            k_boundaries: DEFAULT_K_BOUNDARIES,
            n_recs: catalog.len(),
        };
        let Ok(recs) = fallback_rank(&req, &catalog) else { continue };
        for rec in recs {
            let action = catalog.get(&rec.action_id).unwrap();
            assert!(action.feasibility_tags.is_empty() || !action.feasibility_tags.is_disjoint(&ctx));
            assert!(action.replaces_option.as_ref().is_none_or(|o| !current.contains(o)));
        }
    }
}

#[test]
fn scaling_all_deficits_keeps_the_order() {
    let catalog = fixture_catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let ctx: BTreeSet<String> = ["north", "south", "city"].iter().map(|s| s.to_string()).collect();
    let none = BTreeSet::new();
    for _ in 0..100 {
        let scores = random_scores(&mut rng);
        let c = rng.random_range(0.1..1.0);
        let scaled = BoundaryScores::new(std::array::from_fn(|i| 100.0 - c * (100.0 - scores.as_array()[i]))).unwrap();
        let rank = |s: &BoundaryScores| {
            let req = RankRequest {
                scores: s,
                feasibility_context: &ctx,
                current_options: &none,
                k_boundaries: DEFAULT_K_BOUNDARIES,
                n_recs: catalog.len(),
            };
            fallback_rank(&req, &catalog).unwrap()
        };
        let (a, b) = (rank(&scores), rank(&scaled));
        assert_eq!(lowest_k(&scores, 3), lowest_k(&scaled, 3));
        for (x, y) in a.iter().zip(&b) {
            assert!((y.relevance - c * x.relevance).abs() < 1e-9);
        }
        // the leader survives unless it was within rounding of the runner-up
        if a.len() > 1 && a[0].relevance - a[1].relevance > 1e-9 {
            assert_eq!(a[0].action_id, b[0].action_id);
        }
    }
}

#[test]
fn seeded_pipeline_is_reproducible() {
    let graph = fixture_graph();
    let hyper = Hyperparameters { dimension: 8, epochs: 2, ..Default::default() };
    let scores = BoundaryScores::new([40.0, 80.0, 60.0, 90.0, 10.0, 70.0, 95.0, 85.0, 50.0]).unwrap();
    let ctx: BTreeSet<String> = ["south".to_string()].into();
    let none = BTreeSet::new();
    let req = RankRequest {
        scores: &scores,
        feasibility_context: &ctx,
        current_options: &none,
        k_boundaries: 3,
        n_recs: 5,
    };
    let run = || {
        let model = EmbeddingModel::fit(graph.graph(), hyper, 77).unwrap().model;
        rank_recommendations(&req, &graph, &model).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn mismatched_model_is_rejected() {
    let graph = fixture_graph();
    let other = ActionGraph::build(
        ecobee_core::recommend::ActionCatalog::new(fixture_catalog().actions()[..5].to_vec()).unwrap(),
        1.0,
    )
    .unwrap();
    let hyper = Hyperparameters { dimension: 4, epochs: 1, ..Default::default() };
    let model = EmbeddingModel::fit(other.graph(), hyper, 1).unwrap().model;
    let scores = BoundaryScores::uniform(50.0).unwrap();
    let ctx = BTreeSet::new();
    let req = RankRequest {
        scores: &scores,
        feasibility_context: &ctx,
        current_options: &ctx,
        k_boundaries: 3,
        n_recs: 5,
    };
    assert_eq!(rank_recommendations(&req, &graph, &model), Err(RankError::ModelGraphMismatch));
}
