//! Second-order biased random walks over the attribute-extended graph.
//!
//! The next step from `cur` is drawn proportionally to a weight that depends
//! on the previous node: `1/r` whenever `cur` or the candidate is an attribute
//! node, otherwise `1/p` for returning to `prev`, `1` for candidates adjacent
//! to `prev`, and `1/q` for everything further away.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ExtendedGraph;

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error("invalid walk parameter: {0}")]
    InvalidParameter(String),
    #[error("({cur}, {next}) is not an edge of the extended graph")]
    NotAnEdge { cur: usize, next: usize },
    #[error("graph has no real nodes")]
    EmptyGraph,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    /// Return bias.
    pub p: f64,
    /// In-out bias.
    pub q: f64,
    /// Attribute bias.
    pub r: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 0.5,
            r: 0.5,
            walk_length: 80,
            walks_per_node: 10,
            seed: 0,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<(), WalkError> {
        for (name, v) in [("p", self.p), ("q", self.q), ("r", self.r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(WalkError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.walk_length < 2 {
            return Err(WalkError::InvalidParameter("walk_length must be at least 2".into()));
        }
        Ok(())
    }
}

/// Which neighborhood notion a walk regime emphasizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proximity {
    Local,
    Global,
    Attribute,
}

impl Proximity {
    pub const ALL: [Proximity; 3] = [Proximity::Local, Proximity::Global, Proximity::Attribute];

    pub fn as_str(&self) -> &'static str {
        match self {
            Proximity::Local => "local",
            Proximity::Global => "global",
            Proximity::Attribute => "attribute",
        }
    }
}

impl fmt::Display for Proximity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Proximity {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(Proximity::Local),
            "global" => Ok(Proximity::Global),
            "attribute" => Ok(Proximity::Attribute),
            other => Err(WalkError::InvalidParameter(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProximityPreset {
    pub proximity: Proximity,
    pub params: WalkParams,
}

impl ProximityPreset {
    /// Standard preset: the emphasized bias is 0.25, the other two are 1.
    pub fn standard(proximity: Proximity, base: WalkParams) -> Self {
        let (p, q, r) = match proximity {
            Proximity::Local => (0.25, 1.0, 1.0),
            Proximity::Global => (1.0, 0.25, 1.0),
            Proximity::Attribute => (1.0, 1.0, 0.25),
        };
        Self {
            proximity,
            params: WalkParams { p, q, r, ..base },
        }
    }

    /// Checks the regime inequality, e.g. `p < min(q, r, 1)` for local.
    pub fn is_consistent(&self) -> bool {
        let WalkParams { p, q, r, .. } = self.params;
        match self.proximity {
            Proximity::Local => p < q.min(r).min(1.0),
            Proximity::Global => q < p.min(r).min(1.0),
            Proximity::Attribute => r < p.min(q).min(1.0),
        }
    }
}

/// Unnormalized probability of stepping `cur → next` after arriving from `prev`.
pub fn transition_weight(
    prev: Option<usize>,
    cur: usize,
    next: usize,
    params: &WalkParams,
    g: &ExtendedGraph,
) -> Result<f64, WalkError> {
    let n = g.node_count();
    if cur >= n || next >= n || !g.has_edge(cur, next) {
        return Err(WalkError::NotAnEdge { cur, next });
    }
    Ok(weight(prev, cur, next, params, g))
}

#[inline]
fn weight(prev: Option<usize>, cur: usize, next: usize, params: &WalkParams, g: &ExtendedGraph) -> f64 {
    if g.is_virtual(cur) || g.is_virtual(next) {
        return 1.0 / params.r;
    }
    match prev {
        None => 1.0,
        Some(prev) if prev == next => 1.0 / params.p,
        Some(prev) if g.has_edge(prev, next) => 1.0,
        Some(_) => 1.0 / params.q,
    }
}

/// Normalized next-step distribution over `cur`'s neighbors in E′.
pub fn step_distribution(
    prev: Option<usize>,
    cur: usize,
    params: &WalkParams,
    g: &ExtendedGraph,
) -> Vec<(usize, f64)> {
    let weights: Vec<(usize, f64)> = g
        .neighbors(cur)
        .iter()
        .map(|&x| (x, weight(prev, cur, x, params, g)))
        .collect();
    let z: f64 = weights.iter().map(|w| w.1).sum();
    weights.into_iter().map(|(x, w)| (x, w / z)).collect()
}

/// Draws one step; `None` when `cur` has no neighbors.
pub fn sample_step<R: Rng>(
    prev: Option<usize>,
    cur: usize,
    params: &WalkParams,
    g: &ExtendedGraph,
    rng: &mut R,
    cumulative: &mut Vec<f64>,
) -> Option<usize> {
    let neighbors = g.neighbors(cur);
    if neighbors.is_empty() {
        return None;
    }
    cumulative.clear();
    let mut total = 0.0;
    for &x in neighbors {
        total += weight(prev, cur, x, params, g);
        cumulative.push(total);
    }
    let u = rng.random::<f64>() * total;
    let idx = cumulative.partition_point(|&c| c <= u).min(neighbors.len() - 1);
    Some(neighbors[idx])
}

/// Token sequences over V′; every walk starts at a real node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkCorpus {
    walks: Vec<Vec<usize>>,
    real_count: usize,
    token_count: usize,
}

impl WalkCorpus {
    pub fn new(walks: Vec<Vec<usize>>, real_count: usize, token_count: usize) -> Self {
        Self {
            walks,
            real_count,
            token_count,
        }
    }

    pub fn walks(&self) -> &[Vec<usize>] {
        &self.walks
    }

    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn real_count(&self) -> usize {
        self.real_count
    }

    /// `|V′|`, the vocabulary size.
    pub fn token_count(&self) -> usize {
        self.token_count
    }

    #[inline]
    pub fn is_virtual(&self, token: usize) -> bool {
        token >= self.real_count
    }

    pub fn token_frequencies(&self) -> Vec<usize> {
        let mut freq = vec![0; self.token_count];
        for t in self.walks.iter().flatten() {
            freq[*t] += 1;
        }
        freq
    }

    /// One walk per line, tokens named by `g`.
    pub fn to_text(&self, g: &ExtendedGraph) -> String {
        let mut out = String::new();
        for walk in &self.walks {
            let names: Vec<String> = walk.iter().map(|&t| g.token_name(t)).collect();
            out.push_str(&names.join(" "));
            out.push('\n');
        }
        out
    }
}

fn walks_from(start: usize, g: &ExtendedGraph, params: &WalkParams) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(start as u64);
    let mut cumulative = Vec::new();
    (0..params.walks_per_node)
        .map(|_| {
            let mut walk = Vec::with_capacity(params.walk_length);
            walk.push(start);
            let mut prev = None;
            while walk.len() < params.walk_length {
                let cur = *walk.last().expect("walk is non-empty");
                match sample_step(prev, cur, params, g, &mut rng, &mut cumulative) {
                    Some(next) => {
                        prev = Some(cur);
                        walk.push(next);
                    }
                    None => break,
                }
            }
            walk
        })
        .collect()
}

/// Generates `walks_per_node` walks from every real node.
///
/// Each start node draws from its own stream of the seeded generator, so the
/// corpus does not depend on how work is spread across threads. Walks are
/// ordered round by round, nodes ascending within a round.
pub fn generate_walks(g: &ExtendedGraph, params: &WalkParams) -> Result<WalkCorpus, WalkError> {
    params.validate()?;
    let n = g.real_count();
    if n == 0 {
        return Err(WalkError::EmptyGraph);
    }
    let per_node: Vec<Vec<Vec<usize>>> = (0..n)
        .into_par_iter()
        .map(|start| walks_from(start, g, params))
        .collect();
    let mut walks = Vec::with_capacity(n * params.walks_per_node);
    for round in 0..params.walks_per_node {
        for node_walks in &per_node {
            walks.push(node_walks[round].clone());
        }
    }
    Ok(WalkCorpus::new(walks, n, g.node_count()))
}
