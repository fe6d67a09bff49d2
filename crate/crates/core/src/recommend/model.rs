//! Trained node embeddings and their on-disk format.
//!
//! The file is line-oriented UTF-8:
//!
//! ```text
//! ecobee-embeddings 1
//! seed 42
//! dimension 64
//! p 1
//! ...
//! nodes 30
//! climate_change -0.0123 0.0456 ...
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a model written and
//! read back is bit-identical and the same model always produces the same bytes.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::graph::WeightedGraph;
use super::sgns::{train_embeddings, TrainError, TrainParams};
use super::walk::{generate_walks, WalkError, WalkParams};

pub const MODEL_FORMAT: &str = "ecobee-embeddings";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub dimension: usize,
    pub p: f64,
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        let walk = WalkParams::default();
        let train = TrainParams::default();
        Self {
            dimension: train.dimension,
            p: walk.p,
            q: walk.q,
            walks_per_node: walk.walks_per_node,
            walk_length: walk.walk_length,
            window: train.window,
            negatives: train.negatives,
            epochs: train.epochs,
            learning_rate: train.learning_rate,
        }
    }
}

impl Hyperparameters {
    pub fn walk_params(&self) -> WalkParams {
        WalkParams {
            p: self.p,
            q: self.q,
            walks_per_node: self.walks_per_node,
            walk_length: self.walk_length,
        }
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            dimension: self.dimension,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-node vectors with the seed and hyperparameters that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
    nodes: Vec<String>,
    vectors: Vec<f64>,
}

/// A fitted model plus the training loss trace.
#[derive(Clone, Debug)]
pub struct FitReport {
    pub model: EmbeddingModel,
    pub walks: usize,
    pub initial_loss: f64,
    pub epoch_losses: Vec<f64>,
}

impl EmbeddingModel {
    pub fn new(
        hyperparameters: Hyperparameters,
        seed: u64,
        nodes: Vec<String>,
        vectors: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let d = hyperparameters.dimension;
        let parse = |message: String| ModelError::Parse { line: 0, message };
        if vectors.len() != nodes.len() * d {
            return Err(parse(format!(
                "expected {} values for {} nodes of dimension {d}, got {}",
                nodes.len() * d,
                nodes.len(),
                vectors.len()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(parse("non-finite vector component".into()));
        }
        if nodes.iter().any(|n| n.is_empty() || n.contains(char::is_whitespace)) {
            return Err(parse("node ids must be non-empty and contain no whitespace".into()));
        }
        Ok(Self {
            hyperparameters,
            seed,
            nodes,
            vectors,
        })
    }

    /// Walks the graph and trains SGNS embeddings on the corpus.
    pub fn fit(graph: &WeightedGraph, hyperparameters: Hyperparameters, seed: u64) -> Result<FitReport, ModelError> {
        let walks = generate_walks(graph, &hyperparameters.walk_params(), seed)?;
        let trained = train_embeddings(&walks, graph.node_count(), &hyperparameters.train_params(), seed)?;
        let model = Self::new(hyperparameters, seed, graph.ids().to_vec(), trained.node_vectors)?;
        Ok(FitReport {
            model,
            walks: walks.len(),
            initial_loss: trained.initial_loss,
            epoch_losses: trained.epoch_losses,
        })
    }

    pub fn dimension(&self) -> usize {
        self.hyperparameters.dimension
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn vector(&self, node: usize) -> &[f64] {
        let d = self.dimension();
        &self.vectors[node * d..(node + 1) * d]
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    /// Cosine similarity of two nodes; 0 when either vector is zero.
    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        cosine(self.vector(a), self.vector(b))
    }

    /// True when the model's node list is exactly the graph's, in order.
    pub fn matches(&self, graph: &WeightedGraph) -> bool {
        self.nodes == graph.ids()
    }

    pub fn to_text(&self) -> String {
        let h = &self.hyperparameters;
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_FORMAT} {MODEL_FORMAT_VERSION}");
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "dimension {}", h.dimension);
        let _ = writeln!(out, "p {}", h.p);
        let _ = writeln!(out, "q {}", h.q);
        let _ = writeln!(out, "walks_per_node {}", h.walks_per_node);
        let _ = writeln!(out, "walk_length {}", h.walk_length);
        let _ = writeln!(out, "window {}", h.window);
        let _ = writeln!(out, "negatives {}", h.negatives);
        let _ = writeln!(out, "epochs {}", h.epochs);
        let _ = writeln!(out, "learning_rate {}", h.learning_rate);
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            out.push_str(node);
            for x in self.vector(i) {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    /// Short hash of the serialized model.
    pub fn fingerprint(&self) -> String {
        hex::encode(&Sha256::digest(self.to_text().as_bytes())[..8])
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_text().as_bytes())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, ModelError> {
        let mut lines = BufReader::new(r).lines().enumerate();
        let mut next = |expect: &str| -> Result<(usize, String), ModelError> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(ModelError::Parse {
                    line: 0,
                    message: format!("unexpected end of file, expected {expect}"),
                }),
            }
        };
        let err = |line: usize, message: String| ModelError::Parse { line, message };

        let (line_no, magic) = next("header")?;
        let expected = format!("{MODEL_FORMAT} {MODEL_FORMAT_VERSION}");
        if magic.trim() != expected {
            return Err(err(line_no, format!("expected `{expected}`, found `{magic}`")));
        }

        fn field<T: std::str::FromStr>(
            next: &mut impl FnMut(&str) -> Result<(usize, String), ModelError>,
            key: &str,
        ) -> Result<T, ModelError> {
            let (line, text) = next(key)?;
            let value = text
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .ok_or_else(|| ModelError::Parse {
                    line,
                    message: format!("expected `{key} <value>`"),
                })?;
            value.trim().parse().map_err(|_| ModelError::Parse {
                line,
                message: format!("bad value for `{key}`: `{value}`"),
            })
        }

        let seed: u64 = field(&mut next, "seed")?;
        let hyperparameters = Hyperparameters {
            dimension: field(&mut next, "dimension")?,
            p: field(&mut next, "p")?,
            q: field(&mut next, "q")?,
            walks_per_node: field(&mut next, "walks_per_node")?,
            walk_length: field(&mut next, "walk_length")?,
            window: field(&mut next, "window")?,
            negatives: field(&mut next, "negatives")?,
            epochs: field(&mut next, "epochs")?,
            learning_rate: field(&mut next, "learning_rate")?,
        };
        let count: usize = field(&mut next, "nodes")?;
        let d = hyperparameters.dimension;
        let mut nodes = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count * d);
        for _ in 0..count {
            let (line, text) = next("node row")?;
            let mut parts = text.split(' ');
            let id = parts.next().unwrap_or_default().to_string();
            let row: Vec<f64> = parts
                .map(|x| x.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| err(line, format!("bad vector component for `{id}`")))?;
            if row.len() != d {
                return Err(err(line, format!("`{id}` has {} components, expected {d}", row.len())));
            }
            nodes.push(id);
            vectors.extend(row);
        }
        Self::new(hyperparameters, seed, nodes, vectors)
    }

    /// Writes through a temporary file in the same directory, so readers
    /// never see a half-written model.
    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let path = path.as_ref();
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        self.write_to(&mut tmp)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}
