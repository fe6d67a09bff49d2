//! Second-order biased random walks (node2vec).
//!
//! From `cur` having arrived from `prev`, the unnormalised probability of
//! stepping to neighbor `x` with edge weight `w` is
//!
//! * `w / p` if `x == prev` (return),
//! * `w`     if `x` is adjacent to `prev`,
//! * `w / q` otherwise (move outward).
//!
//! The first step of a walk is weighted by `w` alone.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::graph::WeightedGraph;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("invalid walk parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkParams {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 0.5,
            walks_per_node: 10,
            walk_length: 20,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<(), WalkError> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(WalkError::InvalidParameter(format!("p must be positive, got {}", self.p)));
        }
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(WalkError::InvalidParameter(format!("q must be positive, got {}", self.q)));
        }
        if self.walk_length < 2 {
            return Err(WalkError::InvalidParameter(format!(
                "walk_length must be at least 2, got {}",
                self.walk_length
            )));
        }
        Ok(())
    }
}

/// Walks are lists of node indices into the graph.
pub type Walk = Vec<usize>;

fn sample_weighted<R: Rng>(rng: &mut R, candidates: &[(usize, f64)]) -> usize {
    let total: f64 = candidates.iter().map(|(_, w)| w).sum();
    let mut target = rng.random::<f64>() * total;
    for &(node, w) in candidates {
        if target < w {
            return node;
        }
        target -= w;
    }
    // rounding left target just above the last bucket
    candidates.last().expect("non-empty candidates").0
}

fn next_step<R: Rng>(
    graph: &WeightedGraph,
    prev: Option<usize>,
    cur: usize,
    params: &WalkParams,
    scratch: &mut Vec<(usize, f64)>,
    rng: &mut R,
) -> Option<usize> {
    let neighbors = graph.neighbors(cur);
    if neighbors.is_empty() {
        return None;
    }
    scratch.clear();
    match prev {
        None => scratch.extend_from_slice(neighbors),
        Some(prev) => scratch.extend(neighbors.iter().map(|&(x, w)| {
            let bias = if x == prev {
                1.0 / params.p
            } else if graph.has_edge(x, prev) {
                1.0
            } else {
                1.0 / params.q
            };
            (x, w * bias)
        })),
    }
    Some(sample_weighted(rng, scratch))
}

/// One walk of up to `walk_length` nodes; shorter only if it reaches a
/// node without neighbors.
pub fn walk_from<R: Rng>(graph: &WeightedGraph, start: usize, params: &WalkParams, rng: &mut R) -> Walk {
    let mut walk = Vec::with_capacity(params.walk_length);
    walk.push(start);
    let mut scratch = Vec::new();
    let mut prev = None;
    let mut cur = start;
    while walk.len() < params.walk_length {
        let Some(next) = next_step(graph, prev, cur, params, &mut scratch, rng) else {
            break;
        };
        walk.push(next);
        prev = Some(cur);
        cur = next;
    }
    walk
}

/// `walks_per_node` rounds; each round visits every node once in a
/// seed-determined shuffled order.
pub fn generate_walks(graph: &WeightedGraph, params: &WalkParams, seed: u64) -> Result<Vec<Walk>, WalkError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..graph.node_count()).collect();
    let mut walks = Vec::with_capacity(order.len() * params.walks_per_node);
    for _ in 0..params.walks_per_node {
        order.shuffle(&mut rng);
        for &start in &order {
            walks.push(walk_from(graph, start, params, &mut rng));
        }
    }
    Ok(walks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> WeightedGraph {
        let mut g = WeightedGraph::new();
        let a = g.add_node("a").unwrap();
        let b = g.add_node("b").unwrap();
        let c = g.add_node("c").unwrap();
        g.add_edge(a, b, 1.0).unwrap();
        g.add_edge(b, c, 2.0).unwrap();
        g
    }

    #[test]
    fn walks_follow_edges() {
        let g = path();
        for (p, q) in [(1.0, 1.0), (0.25, 4.0), (4.0, 0.25)] {
            let params = WalkParams { p, q, walks_per_node: 5, walk_length: 12 };
            let walks = generate_walks(&g, &params, 3).unwrap();
            assert_eq!(walks.len(), 15);
            for walk in &walks {
                assert_eq!(walk.len(), 12);
                assert!(walk.windows(2).all(|w| g.has_edge(w[0], w[1])));
            }
        }
    }

    #[test]
    fn seeded_determinism() {
        let g = path();
        let params = WalkParams::default();
        assert_eq!(generate_walks(&g, &params, 9).unwrap(), generate_walks(&g, &params, 9).unwrap());
        assert_ne!(generate_walks(&g, &params, 9).unwrap(), generate_walks(&g, &params, 10).unwrap());
    }

    #[test]
    fn every_node_starts_walks_per_node_walks() {
        let g = path();
        let params = WalkParams { walks_per_node: 4, ..Default::default() };
        let walks = generate_walks(&g, &params, 1).unwrap();
        for node in 0..3 {
            assert_eq!(walks.iter().filter(|w| w[0] == node).count(), 4);
        }
    }

    #[test]
    fn isolated_node_walk_is_single_node() {
        let mut g = path();
        g.add_node("lonely").unwrap();
        let walks = generate_walks(&g, &WalkParams::default(), 0).unwrap();
        assert!(walks.iter().filter(|w| w[0] == 3).all(|w| w == &vec![3]));
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = path();
        for params in [
            WalkParams { p: 0.0, ..Default::default() },
            WalkParams { q: -1.0, ..Default::default() },
            WalkParams { p: f64::NAN, ..Default::default() },
            WalkParams { walk_length: 1, ..Default::default() },
        ] {
            assert!(matches!(generate_walks(&g, &params, 0), Err(WalkError::InvalidParameter(_))));
        }
    }
}
