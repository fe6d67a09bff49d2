//! node2vec-based behavior-change recommendations.
//!
//! [`catalog`] holds the curated actions, [`graph`] joins them with the nine
//! boundary nodes, [`walk`] and [`sgns`] produce embeddings, [`model`]
//! persists them and [`rank`] orders feasible actions for a user.

pub mod catalog;
pub mod graph;
pub mod model;
pub mod rank;
pub mod sgns;
pub mod walk;

pub use catalog::{Action, ActionCatalog};
pub use graph::{ActionGraph, WeightedGraph};
pub use model::{EmbeddingModel, Hyperparameters};
pub use rank::{fallback_rank, rank_recommendations, RankError, RankRequest, Recommendation};
