//! Skip-gram with negative sampling over walk corpora.
//!
//! For each `(center, context)` pair within `window` positions the trainer
//! ascends `log σ(u·v) + Σ log σ(−u·v_neg)` with `negatives` noise nodes
//! drawn from the unigram distribution raised to 0.75. Training is single
//! threaded and driven by one seeded RNG, so it is reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::walk::Walk;

/// Exponent applied to node frequencies for the noise distribution.
pub const NOISE_EXPONENT: f64 = 0.75;

const MIN_LR_FRACTION: f64 = 1e-4;
const TRAINING_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("walk corpus is empty")]
    EmptyCorpus,
    #[error("invalid training parameter: {0}")]
    InvalidParameter(String),
    #[error("walk references node {0} outside the vocabulary")]
    UnknownNode(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainParams {
    pub dimension: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial rate; decays linearly to near zero over all epochs.
    pub learning_rate: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            dimension: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
        }
    }
}

impl TrainParams {
    fn validate(&self) -> Result<(), TrainError> {
        if self.dimension < 2 {
            return Err(TrainError::InvalidParameter(format!(
                "dimension must be at least 2, got {}",
                self.dimension
            )));
        }
        if self.window == 0 {
            return Err(TrainError::InvalidParameter("window must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Input (node) and output (context) vectors, row-major `n × d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trained {
    pub dimension: usize,
    pub node_vectors: Vec<f64>,
    pub context_vectors: Vec<f64>,
    /// Expected objective (negated, per pair) after each epoch.
    pub epoch_losses: Vec<f64>,
    /// Same objective at initialization.
    pub initial_loss: f64,
}

impl Trained {
    pub fn node_vector(&self, node: usize) -> &[f64] {
        &self.node_vectors[node * self.dimension..(node + 1) * self.dimension]
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `-log σ(x)`, computed without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Node frequencies raised to 0.75, normalised, as a cumulative table.
#[derive(Clone, Debug)]
pub struct NoiseDistribution {
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl NoiseDistribution {
    pub fn from_corpus(corpus: &[Walk], node_count: usize) -> Self {
        let mut counts = vec![0u64; node_count];
        for walk in corpus {
            for &node in walk {
                counts[node] += 1;
            }
        }
        let powered: Vec<f64> = counts
            .iter()
            .map(|&c| (c as f64).powf(NOISE_EXPONENT))
            .collect();
        let total: f64 = powered.iter().sum();
        let probabilities: Vec<f64> = powered.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self {
            probabilities,
            cumulative,
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(0.0);
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // never return a zero-probability node that sits past the end
        idx.min(self.cumulative.len() - 1)
    }
}

/// Positive-pair counts `(center, context) → n`, flattened `n × n`.
fn pair_counts(corpus: &[Walk], node_count: usize, window: usize) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; node_count * node_count];
    let mut total = 0;
    for_each_pair(corpus, window, |center, context| {
        counts[center * node_count + context] += 1;
        total += 1;
    });
    (counts, total)
}

fn for_each_pair(corpus: &[Walk], window: usize, mut f: impl FnMut(usize, usize)) {
    for walk in corpus {
        for (pos, &center) in walk.iter().enumerate() {
            let lo = pos.saturating_sub(window);
            let hi = (pos + window).min(walk.len() - 1);
            for (ctx_pos, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                if ctx_pos != pos {
                    f(center, context);
                }
            }
        }
    }
}

/// Mean per-pair negated SGNS objective with the negative term replaced by
/// its expectation under the noise distribution.
fn expected_loss(
    counts: &[u64],
    total_pairs: u64,
    noise: &NoiseDistribution,
    negatives: usize,
    node_vectors: &[f64],
    context_vectors: &[f64],
    d: usize,
) -> f64 {
    let n = noise.probabilities.len();
    let mut loss = 0.0;
    for center in 0..n {
        let u = &node_vectors[center * d..(center + 1) * d];
        let mut center_pairs = 0u64;
        for context in 0..n {
            let c = counts[center * n + context];
            if c > 0 {
                center_pairs += c;
                let v = &context_vectors[context * d..(context + 1) * d];
                loss += c as f64 * neg_log_sigmoid(dot(u, v));
            }
        }
        if center_pairs > 0 && negatives > 0 {
            let noise_term: f64 = (0..n)
                .filter(|&m| noise.probabilities[m] > 0.0)
                .map(|m| {
                    let v = &context_vectors[m * d..(m + 1) * d];
                    noise.probabilities[m] * neg_log_sigmoid(-dot(u, v))
                })
                .sum();
            loss += center_pairs as f64 * negatives as f64 * noise_term;
        }
    }
    loss / total_pairs.max(1) as f64
}

pub fn train_embeddings(
    corpus: &[Walk],
    node_count: usize,
    params: &TrainParams,
    seed: u64,
) -> Result<Trained, TrainError> {
    params.validate()?;
    if corpus.iter().all(|w| w.len() < 2) {
        return Err(TrainError::EmptyCorpus);
    }
    if let Some(&bad) = corpus.iter().flatten().find(|&&node| node >= node_count) {
        return Err(TrainError::UnknownNode(bad));
    }

    let d = params.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TRAINING_STREAM);

    let half_range = 0.5 / d as f64;
    let mut node_vectors: Vec<f64> = (0..node_count * d)
        .map(|_| rng.random_range(-half_range..half_range))
        .collect();
    let mut context_vectors = vec![0.0; node_count * d];

    let noise = NoiseDistribution::from_corpus(corpus, node_count);
    let (counts, total_pairs) = pair_counts(corpus, node_count, params.window);
    let loss_now = |nv: &[f64], cv: &[f64]| {
        expected_loss(&counts, total_pairs, &noise, params.negatives, nv, cv, d)
    };
    let initial_loss = loss_now(&node_vectors, &context_vectors);

    let tokens_per_epoch: usize = corpus.iter().map(Vec::len).sum();
    let total_tokens = (tokens_per_epoch * params.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut grad = vec![0.0; d];
    let mut epoch_losses = Vec::with_capacity(params.epochs);

    for _ in 0..params.epochs {
        for walk in corpus {
            for (pos, &center) in walk.iter().enumerate() {
                let lr = params.learning_rate
                    * (1.0 - processed as f64 / total_tokens).max(MIN_LR_FRACTION);
                processed += 1;
                let lo = pos.saturating_sub(params.window);
                let hi = (pos + params.window).min(walk.len() - 1);
                for (ctx_pos, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let u = center * d;
                    let mut update = |target: usize, label: f64, grad: &mut [f64]| {
                        let v = target * d;
                        let f = dot(&node_vectors[u..u + d], &context_vectors[v..v + d]);
                        let g = (label - sigmoid(f)) * lr;
                        for k in 0..d {
                            grad[k] += g * context_vectors[v + k];
                            context_vectors[v + k] += g * node_vectors[u + k];
                        }
                    };
                    update(context, 1.0, &mut grad);
                    for _ in 0..params.negatives {
                        let neg = noise.sample(&mut rng);
                        if neg == context {
                            continue;
                        }
                        update(neg, 0.0, &mut grad);
                    }
                    for k in 0..d {
                        node_vectors[u + k] += grad[k];
                    }
                }
            }
        }
        epoch_losses.push(loss_now(&node_vectors, &context_vectors));
    }

    Ok(Trained {
        dimension: d,
        node_vectors,
        context_vectors,
        epoch_losses,
        initial_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus() {
        let params = TrainParams::default();
        assert_eq!(train_embeddings(&[], 3, &params, 0), Err(TrainError::EmptyCorpus));
        assert_eq!(train_embeddings(&[vec![0]], 3, &params, 0), Err(TrainError::EmptyCorpus));
    }

    #[test]
    fn rejects_bad_params() {
        let corpus = vec![vec![0, 1]];
        let params = TrainParams { dimension: 1, ..Default::default() };
        assert!(matches!(train_embeddings(&corpus, 2, &params, 0), Err(TrainError::InvalidParameter(_))));
        assert_eq!(
            train_embeddings(&[vec![0, 5]], 2, &TrainParams::default(), 0),
            Err(TrainError::UnknownNode(5))
        );
    }

    #[test]
    fn shape_and_init_range() {
        let corpus = vec![vec![0, 1, 2, 1, 0]];
        let params = TrainParams { dimension: 8, epochs: 0, ..Default::default() };
        let t = train_embeddings(&corpus, 3, &params, 4).unwrap();
        assert_eq!(t.node_vectors.len(), 24);
        assert!(t.node_vectors.iter().all(|x| x.abs() <= 0.5 / 8.0));
        assert!(t.context_vectors.iter().all(|x| *x == 0.0));
        // with zero context vectors every σ term is ln 2
        let expected = (1.0 + 5.0) * std::f64::consts::LN_2;
        assert!((t.initial_loss - expected).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let corpus = vec![vec![0, 1, 2, 3, 2, 1], vec![3, 2, 1, 0, 1]];
        let params = TrainParams { dimension: 8, ..Default::default() };
        let a = train_embeddings(&corpus, 4, &params, 11).unwrap();
        let b = train_embeddings(&corpus, 4, &params, 11).unwrap();
        assert_eq!(a, b);
        let c = train_embeddings(&corpus, 4, &params, 12).unwrap();
        assert_ne!(a.node_vectors, c.node_vectors);
    }

    #[test]
    fn noise_distribution_follows_powered_counts() {
        let corpus = vec![vec![0, 0, 0, 0, 1], vec![1, 2]];
        let noise = NoiseDistribution::from_corpus(&corpus, 4);
        let w = [4f64.powf(0.75), 2f64.powf(0.75), 1.0, 0.0];
        let total: f64 = w.iter().sum();
        for (p, wi) in noise.probabilities().iter().zip(w) {
            assert!((p - wi / total).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..1000).all(|_| noise.sample(&mut rng) != 3));
    }

    #[test]
    fn pair_enumeration() {
        let mut pairs = Vec::new();
        for_each_pair(&[vec![7, 8, 9]], 1, |c, o| pairs.push((c, o)));
        assert_eq!(pairs, vec![(7, 8), (8, 7), (8, 9), (9, 8)]);
    }

    #[test]
    fn stable_log_sigmoid() {
        assert!((neg_log_sigmoid(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(neg_log_sigmoid(800.0).is_finite());
        assert!((neg_log_sigmoid(-800.0) - 800.0).abs() < 1e-9);
    }
}
