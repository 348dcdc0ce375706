//! Skip-gram with negative sampling over walk corpora.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::walk::WalkCorpus;

#[derive(Debug, Error, PartialEq)]
pub enum EmbedError {
    #[error("invalid skip-gram parameter: {0}")]
    InvalidParameter(String),
    #[error("walk corpus is empty")]
    EmptyCorpus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial rate, decayed linearly to near zero over training.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

/// One `dim`-dimensional vector per real node.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `{"dim":d,"vectors":{id:[...]}}`, keys sorted.
    pub fn to_json(&self, ids: &[String]) -> String {
        let vectors: serde_json::Map<String, serde_json::Value> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), serde_json::json!(self.row(i))))
            .collect();
        serde_json::json!({ "dim": self.dim, "vectors": vectors }).to_string()
    }

    /// One `id v1 … vd` line per node.
    pub fn to_text(&self, ids: &[String]) -> String {
        let mut out = String::new();
        for (i, id) in ids.iter().enumerate() {
            out.push_str(id);
            for v in self.row(i) {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Real nodes that never occurred in the corpus and kept a zero vector.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Coverage {
    pub uncovered: Vec<usize>,
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// Eight independent partial sums so the loop vectorizes.
#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f32 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    acc.iter().sum::<f32>() + tail
}

/// Trains skip-gram embeddings for every corpus token and returns the rows of
/// the real nodes.
pub fn train_skipgram(
    corpus: &WalkCorpus,
    config: &SkipGramConfig,
) -> Result<(EmbeddingMatrix, Coverage), EmbedError> {
    if config.dim < 2 {
        return Err(EmbedError::InvalidParameter("dim must be at least 2".into()));
    }
    if config.window == 0 || config.epochs == 0 {
        return Err(EmbedError::InvalidParameter("window and epochs must be positive".into()));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(EmbedError::InvalidParameter("learning_rate must be positive".into()));
    }
    let freq = corpus.token_frequencies();
    let total_tokens: usize = freq.iter().sum();
    if corpus.is_empty() || total_tokens == 0 {
        return Err(EmbedError::EmptyCorpus);
    }

    let dim = config.dim;
    let vocab = corpus.token_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input = vec![0.0f32; vocab * dim];
    for (t, &f) in freq.iter().enumerate() {
        if f > 0 {
            for v in &mut input[t * dim..(t + 1) * dim] {
                *v = (rng.random::<f32>() - 0.5) / dim as f32;
            }
        }
    }
    let mut output = vec![0.0f32; vocab * dim];
    let noise = WeightedIndex::new(freq.iter().map(|&f| (f as f64).powf(0.75)))
        .expect("at least one token has positive frequency");

    let schedule = (config.epochs * total_tokens) as f64;
    let mut processed = 0usize;
    let mut grad = vec![0.0f32; dim];
    for _ in 0..config.epochs {
        for walk in corpus.walks() {
            for (pos, &center) in walk.iter().enumerate() {
                let lr = (config.learning_rate * (1.0 - processed as f64 / schedule).max(1e-4)) as f32;
                processed += 1;
                let reach = config.window - rng.random_range(0..config.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(walk.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let context = walk[ctx_pos];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let center_vec = &input[center * dim..(center + 1) * dim];
                    for d in 0..=config.negatives {
                        let (target, label) = if d == 0 {
                            (context, 1.0)
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out_vec = &mut output[target * dim..(target + 1) * dim];
                        let g = (label - sigmoid(dot(center_vec, out_vec))) * lr;
                        for ((gk, ok), ck) in grad.iter_mut().zip(out_vec.iter_mut()).zip(center_vec) {
                            *gk += g * *ok;
                            *ok += g * ck;
                        }
                    }
                    for (ck, gk) in input[center * dim..(center + 1) * dim].iter_mut().zip(&grad) {
                        *ck += gk;
                    }
                }
            }
        }
    }

    let real = corpus.real_count();
    let data = input[..real * dim].iter().map(|&v| v as f64).collect();
    let uncovered = (0..real).filter(|&t| freq[t] == 0).collect();
    Ok((EmbeddingMatrix { dim, data }, Coverage { uncovered }))
}
