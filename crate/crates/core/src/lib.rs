//! Planetary-boundary footprint scoring for campus behaviors.
//!
//! Quiz answers, barcodes and vision labels are normalised into canonical
//! items ([`intake`]), scored against curated factor tables on the nine
//! planetary boundaries ([`scoring`]), turned into targeted behavior-change
//! suggestions with node2vec embeddings ([`recommend`]) and published to a
//! pseudonymous, k-gated leaderboard ([`leaderboard`]).

pub mod boundary;
pub mod factors;
pub mod intake;
pub mod item;
pub mod leaderboard;
pub mod recommend;
pub mod scoring;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use boundary::{boundary_codes, Boundary, BoundaryScores, BoundaryWeights, PressureVector};
pub use factors::{load_factor_tables, FactorTable};
pub use item::{CanonicalItem, IntakeProfile, ItemSource, TransientImage};
pub use scoring::{score, ScoreResult};
