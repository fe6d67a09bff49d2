//! Undirected weighted graphs and the action–boundary graph.

use std::collections::HashMap;

use thiserror::Error;

use super::catalog::ActionCatalog;
use crate::boundary::{Boundary, BOUNDARY_COUNT};

pub const DEFAULT_SUBSTITUTABILITY: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("node index {0} out of range")]
    UnknownNode(usize),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("edge {a}–{b} has non-positive weight {weight}")]
    InvalidWeight { a: String, b: String, weight: f64 },
    #[error("duplicate edge {a}–{b}")]
    DuplicateEdge { a: String, b: String },
    #[error("graph has {0} components among nodes with edges")]
    Disconnected(usize),
}

/// Undirected graph with positive edge weights. Neighbor lists are kept
/// sorted by node index so adjacency tests are a binary search.
#[derive(Clone, Debug, Default)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<String>) -> Result<usize, GraphError> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(GraphError::DuplicateNode(id));
        }
        let idx = self.ids.len();
        self.index.insert(id.clone(), idx);
        self.ids.push(id);
        self.adjacency.push(Vec::new());
        Ok(idx)
    }

    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64) -> Result<(), GraphError> {
        let n = self.ids.len();
        for i in [a, b] {
            if i >= n {
                return Err(GraphError::UnknownNode(i));
            }
        }
        if a == b {
            return Err(GraphError::SelfLoop(self.ids[a].clone()));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(GraphError::InvalidWeight {
                a: self.ids[a].clone(),
                b: self.ids[b].clone(),
                weight,
            });
        }
        let pos = match self.adjacency[a].binary_search_by_key(&b, |(j, _)| *j) {
            Ok(_) => {
                return Err(GraphError::DuplicateEdge {
                    a: self.ids[a].clone(),
                    b: self.ids[b].clone(),
                })
            }
            Err(pos) => pos,
        };
        self.adjacency[a].insert(pos, (b, weight));
        let pos = self.adjacency[b]
            .binary_search_by_key(&a, |(j, _)| *j)
            .unwrap_err();
        self.adjacency[b].insert(pos, (a, weight));
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// `(neighbor, weight)` pairs sorted by neighbor index.
    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |(j, _)| *j)
            .ok()
            .map(|pos| list[pos].1)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_weight(a, b).is_some()
    }

    /// Connected components counted over nodes that have at least one edge.
    pub fn component_count(&self) -> usize {
        let n = self.ids.len();
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] || self.adjacency[start].is_empty() {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }
}

/// Actions and the nine boundaries in one graph.
///
/// Node layout: boundaries `0..9` in canonical order, then actions in
/// catalog order. Actions connect to each boundary they are relevant to
/// (weight = relevance) and to every other action of their domain
/// (weight = substitutability).
#[derive(Clone, Debug)]
pub struct ActionGraph {
    graph: WeightedGraph,
    catalog: ActionCatalog,
}

impl ActionGraph {
    pub fn build(catalog: ActionCatalog, substitutability: f64) -> Result<Self, GraphError> {
        let mut graph = WeightedGraph::new();
        for b in Boundary::ALL {
            graph.add_node(b.code())?;
        }
        for action in catalog.actions() {
            graph.add_node(action.id.clone())?;
        }
        let actions = catalog.actions();
        for (i, action) in actions.iter().enumerate() {
            let node = BOUNDARY_COUNT + i;
            for b in Boundary::ALL {
                let relevance = action.relevance(b);
                if relevance > 0.0 {
                    graph.add_edge(node, b.index(), relevance)?;
                }
            }
            for (j, other) in actions.iter().enumerate().skip(i + 1) {
                if other.domain == action.domain {
                    graph.add_edge(node, BOUNDARY_COUNT + j, substitutability)?;
                }
            }
        }
        let components = graph.component_count();
        if components > 1 {
            return Err(GraphError::Disconnected(components));
        }
        Ok(Self { graph, catalog })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn catalog(&self) -> &ActionCatalog {
        &self.catalog
    }

    pub fn boundary_node(boundary: Boundary) -> usize {
        boundary.index()
    }

    /// Node index of the `i`-th catalog action.
    pub fn action_node(i: usize) -> usize {
        BOUNDARY_COUNT + i
    }
}
