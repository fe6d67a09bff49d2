//! Ranking feasible actions against a user's weakest boundaries.
//!
//! Both rankers share the same pipeline: pick the `k` lowest-scored
//! boundaries, filter the catalog by feasibility, and score each candidate as
//! `Σ_b deficit_b · affinity(action, b)` over the target boundaries, where
//! `deficit_b = (100 − score_b) / 100`. The embedding ranker uses cosine
//! similarity of node vectors as the affinity; the fallback uses the
//! catalog's curated relevance.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use super::catalog::{Action, ActionCatalog};
use super::graph::ActionGraph;
use super::model::EmbeddingModel;
use crate::boundary::{Boundary, BoundaryScores};

pub const DEFAULT_K_BOUNDARIES: usize = 3;
pub const DEFAULT_N_RECS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankError {
    #[error("embedding model does not match the action graph")]
    ModelGraphMismatch,
    #[error("no feasible actions for this context")]
    NoFeasibleActions,
    #[error("k_boundaries and n_recs must be at least 1")]
    InvalidRequest,
}

/// What to rank for.
#[derive(Clone, Debug)]
pub struct RankRequest<'a> {
    pub scores: &'a BoundaryScores,
    pub feasibility_context: &'a BTreeSet<String>,
    pub current_options: &'a BTreeSet<String>,
    pub k_boundaries: usize,
    pub n_recs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Recommendation {
    pub action_id: String,
    pub title: String,
    pub relevance: f64,
    pub target_boundaries: Vec<Boundary>,
    pub rationale: String,
}

pub fn deficit(score: f64) -> f64 {
    (100.0 - score) / 100.0
}

/// Relevance descending, ties by action id.
pub fn recommendation_order(a: &Recommendation, b: &Recommendation) -> Ordering {
    b.relevance
        .total_cmp(&a.relevance)
        .then_with(|| a.action_id.cmp(&b.action_id))
}

fn rank_with<F>(request: &RankRequest<'_>, catalog: &ActionCatalog, affinity: F) -> Result<Vec<Recommendation>, RankError>
where
    F: Fn(usize, &Action, Boundary) -> f64,
{
    if request.k_boundaries == 0 || request.n_recs == 0 {
        return Err(RankError::InvalidRequest);
    }
    let mut targets = request.scores.lowest(request.k_boundaries);
    targets.sort();

    let mut ranked: Vec<Recommendation> = catalog
        .actions()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_feasible(request.feasibility_context, request.current_options))
        .map(|(i, action)| {
            let terms: Vec<(Boundary, f64)> = targets
                .iter()
                .map(|&b| (b, deficit(request.scores.get(b)) * affinity(i, action, b)))
                .collect();
            let relevance = terms.iter().map(|(_, t)| t).sum();
            let mut by_term = terms.clone();
            // stable: equal terms stay in canonical order
            by_term.sort_by(|x, y| y.1.total_cmp(&x.1));
            let dominant = by_term[0].0;
            let mut target_boundaries: Vec<Boundary> =
                by_term.iter().filter(|(_, t)| *t > 0.0).map(|(b, _)| *b).collect();
            if target_boundaries.is_empty() {
                target_boundaries.push(dominant);
            }
            Recommendation {
                action_id: action.id.clone(),
                title: action.title.clone(),
                relevance,
                target_boundaries,
                rationale: format!(
                    "Targets {} (your score {:.1}), one of your {} lowest boundaries.",
                    dominant.label(),
                    request.scores.get(dominant),
                    request.k_boundaries
                ),
            }
        })
        .collect();

    if ranked.is_empty() {
        return Err(RankError::NoFeasibleActions);
    }
    ranked.sort_by(recommendation_order);
    ranked.truncate(request.n_recs);
    Ok(ranked)
}

/// Ranks with node2vec cosine similarity between action and boundary nodes.
pub fn rank_recommendations(
    request: &RankRequest<'_>,
    graph: &ActionGraph,
    model: &EmbeddingModel,
) -> Result<Vec<Recommendation>, RankError> {
    if !model.matches(graph.graph()) {
        return Err(RankError::ModelGraphMismatch);
    }
    rank_with(request, graph.catalog(), |i, _, b| {
        model.cosine(ActionGraph::action_node(i), ActionGraph::boundary_node(b))
    })
}

/// Cold-start ranking from curated relevance, before embeddings exist.
pub fn fallback_rank(request: &RankRequest<'_>, catalog: &ActionCatalog) -> Result<Vec<Recommendation>, RankError> {
    rank_with(request, catalog, |_, action, b| action.relevance(b))
}
