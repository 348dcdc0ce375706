//! Insights derived from embeddings: pairwise similarity, communities and
//! TF-IDF community centralities.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbeddingMatrix;
use crate::matrix::SquareMatrix;
use crate::walk::WalkCorpus;

#[derive(Debug, Error, PartialEq)]
pub enum InsightError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `n × n` similarities in `[0, 1]`: one minus the min-max normalized
/// Euclidean distance between embedding vectors.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimilarityMatrix(SquareMatrix);

impl SimilarityMatrix {
    /// Wraps a precomputed matrix; `None` unless it is symmetric with entries in `[0, 1]`.
    pub fn from_matrix(m: SquareMatrix) -> Option<Self> {
        let valid = m.is_symmetric(0.0) && m.as_slice().iter().all(|x| (0.0..=1.0).contains(x));
        valid.then_some(Self(m))
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0.get(a, b)
    }

    pub fn row(&self, a: usize) -> &[f64] {
        self.0.row(a)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Normalization runs over off-diagonal distances only; a zero range
/// (all vectors equidistant) yields an all-ones matrix.
pub fn similarity_matrix(emb: &EmbeddingMatrix) -> Result<SimilarityMatrix, InsightError> {
    let n = emb.len();
    if n < 2 {
        return Err(InsightError::InvalidParameter(format!(
            "similarity needs at least 2 vectors, got {n}"
        )));
    }
    let dist = SquareMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { euclidean(emb.row(i), emb.row(j)) });
    let (lo, hi) = dist.off_diagonal_range().expect("n >= 2");
    let range = hi - lo;
    Ok(SimilarityMatrix(SquareMatrix::from_fn(n, |i, j| {
        if i == j || range <= 0.0 {
            1.0
        } else {
            (1.0 - (dist.get(i, j) - lo) / range).clamp(0.0, 1.0)
        }
    })))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommunitySource {
    Labels,
    Kmeans,
}

/// Dense community ids `0..k`, one per node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommunityAssignment {
    pub membership: Vec<usize>,
    pub k: usize,
    pub source: CommunitySource,
    /// Label text of each community when derived from labels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

impl CommunityAssignment {
    /// Re-indexes arbitrary ids densely in order of first appearance.
    pub fn from_ids(ids: &[usize], source: CommunitySource) -> Self {
        let mut dense: BTreeMap<usize, usize> = BTreeMap::new();
        let membership: Vec<usize> = ids
            .iter()
            .map(|id| {
                let next = dense.len();
                *dense.entry(*id).or_insert(next)
            })
            .collect();
        Self {
            k: dense.len(),
            membership,
            source,
            names: None,
        }
    }

    /// Communities from class labels; `None` if any node is unlabeled.
    pub fn from_labels(labels: &[Option<String>]) -> Option<Self> {
        let mut dense: BTreeMap<&str, usize> = BTreeMap::new();
        let mut names = Vec::new();
        let mut membership = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_deref()?;
            let id = *dense.entry(label).or_insert_with(|| {
                names.push(label.to_string());
                names.len() - 1
            });
            membership.push(id);
        }
        Some(Self {
            k: names.len(),
            membership,
            source: CommunitySource::Labels,
            names: Some(names),
        })
    }

    pub fn len(&self) -> usize {
        self.membership.len()
    }

    pub fn is_empty(&self) -> bool {
        self.membership.is_empty()
    }

    pub fn of(&self, node: usize) -> usize {
        self.membership[node]
    }

    pub fn members(&self, community: usize) -> Vec<usize> {
        (0..self.membership.len())
            .filter(|&v| self.membership[v] == community)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.membership {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Result of one K-Means run.
#[derive(Clone, Debug)]
pub struct KMeansRun {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(c, center)| (c, sq_dist(point, center)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// K-Means with k-means++ seeding and Lloyd iterations.
pub fn kmeans(points: &[&[f64]], k: usize, seed: u64, max_iter: usize) -> Result<KMeansRun, InsightError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(InsightError::InvalidParameter(format!("k must be in 1..={n}, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let pick = match WeightedIndex::new(d2.iter().zip(&chosen).map(|(&d, &c)| if c { 0.0 } else { d })) {
            Ok(dist) => dist.sample(&mut rng),
            // Every remaining point coincides with a center.
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen[pick] = true;
        centers.push(points[pick].to_vec());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }

    let dim = points[0].len();
    let mut labels = vec![usize::MAX; n];
    let mut objective = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            total += d;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        objective.push(total);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i]].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    Ok(KMeansRun {
        labels,
        centers,
        objective,
    })
}

/// Clusters embedding rows into at most `k` communities (fewer only when
/// coincident vectors leave a center empty).
pub fn cluster_nodes(emb: &EmbeddingMatrix, k: usize, seed: u64) -> Result<CommunityAssignment, InsightError> {
    let rows: Vec<&[f64]> = emb.rows().collect();
    let run = kmeans(&rows, k, seed, 300)?;
    Ok(CommunityAssignment::from_ids(&run.labels, CommunitySource::Kmeans))
}

/// Per-node TF-IDF weights and one representative node per community.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CentralityTable {
    pub weights: Vec<f64>,
    /// `None` for a community without members.
    pub representatives: Vec<Option<usize>>,
}

/// Each community's document is the concatenation of the walks that start at
/// its members; virtual tokens are ignored. A node's weight is its term
/// frequency in its own community's document times `ln(k / (1 + df))`,
/// clamped at zero.
///
/// The representative maximizes the weight; ties fall back to the raw term
/// frequency and then to the lowest node index.
pub fn centrality(corpus: &WalkCorpus, communities: &CommunityAssignment) -> Result<CentralityTable, InsightError> {
    let n = communities.len();
    let k = communities.k;
    if corpus.is_empty() {
        return Err(InsightError::InvalidParameter("corpus is empty".into()));
    }
    if corpus.real_count() != n {
        return Err(InsightError::InvalidParameter(format!(
            "corpus covers {} nodes, communities cover {n}",
            corpus.real_count()
        )));
    }
    let mut counts = vec![vec![0usize; n]; k];
    let mut lengths = vec![0usize; k];
    for walk in corpus.walks() {
        let Some(&start) = walk.first() else { continue };
        if corpus.is_virtual(start) {
            continue;
        }
        let doc = communities.of(start);
        for &t in walk.iter().filter(|&&t| !corpus.is_virtual(t)) {
            counts[doc][t] += 1;
            lengths[doc] += 1;
        }
    }
    let mut tf = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for v in 0..n {
        let own = communities.of(v);
        let df = (0..k).filter(|&d| counts[d][v] > 0).count();
        let idf = (k as f64 / (1.0 + df as f64)).ln();
        tf[v] = if lengths[own] == 0 {
            0.0
        } else {
            counts[own][v] as f64 / lengths[own] as f64
        };
        weights[v] = (tf[v] * idf).max(0.0);
    }
    let mut representatives = vec![None; k];
    for v in 0..n {
        let c = communities.of(v);
        let better = match representatives[c] {
            None => true,
            Some(best) => (weights[v], tf[v]) > (weights[best], tf[best]),
        };
        if better {
            representatives[c] = Some(v);
        }
    }
    Ok(CentralityTable {
        weights,
        representatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(rows: &[&[f64]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn three_points_on_a_line() {
        let s = similarity_matrix(&emb(&[&[0.0], &[1.0], &[3.0]])).unwrap();
        assert!((s.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((s.get(1, 2) - 0.5).abs() < 1e-12);
        assert!(s.get(0, 2).abs() < 1e-12);
        assert_eq!(s.get(2, 2), 1.0);
    }

    #[test]
    fn identical_vectors_are_fully_similar() {
        let s = similarity_matrix(&emb(&[&[1.0, 1.0], &[1.0, 1.0], &[4.0, 5.0]])).unwrap();
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(0, 2), 0.0);
        let all_same = similarity_matrix(&emb(&[&[2.0], &[2.0], &[2.0]])).unwrap();
        assert!(all_same.matrix().as_slice().iter().all(|&v| v == 1.0));
        assert!(similarity_matrix(&emb(&[&[2.0]])).is_err());
    }

    #[test]
    fn kmeans_degenerate_k() {
        let e = emb(&[&[0.0], &[1.0], &[5.0], &[9.0]]);
        let one = cluster_nodes(&e, 1, 3).unwrap();
        assert_eq!(one.membership, vec![0; 4]);
        let all = cluster_nodes(&e, 4, 3).unwrap();
        assert_eq!(all.k, 4);
        let mut sorted = all.membership.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
        assert!(cluster_nodes(&e, 5, 3).is_err());
        assert!(cluster_nodes(&e, 0, 3).is_err());
    }

    #[test]
    fn labels_become_dense_communities() {
        let labels = vec![Some("b".to_string()), Some("a".to_string()), Some("b".to_string())];
        let c = CommunityAssignment::from_labels(&labels).unwrap();
        assert_eq!(c.membership, vec![0, 1, 0]);
        assert_eq!(c.names.as_deref(), Some(&["b".to_string(), "a".to_string()][..]));
        assert!(CommunityAssignment::from_labels(&[Some("x".into()), None]).is_none());
    }

    #[test]
    fn ubiquitous_node_weight_is_clamped() {
        // Node 0 appears in both documents: idf = ln(2/3) < 0.
        let corpus = WalkCorpus::new(vec![vec![0, 1], vec![1, 0], vec![2, 0]], 3, 3);
        let comm = CommunityAssignment::from_ids(&[0, 0, 1], CommunitySource::Kmeans);
        let table = centrality(&corpus, &comm).unwrap();
        assert_eq!(table.weights[0], 0.0);
    }

    #[test]
    fn single_document_picks_most_frequent() {
        let corpus = WalkCorpus::new(vec![vec![0, 2, 1, 2], vec![1, 2, 2]], 3, 3);
        let comm = CommunityAssignment::from_ids(&[0, 0, 0], CommunitySource::Kmeans);
        let table = centrality(&corpus, &comm).unwrap();
        assert_eq!(table.representatives, vec![Some(2)]);
    }

    #[test]
    fn empty_community_has_no_representative() {
        let corpus = WalkCorpus::new(vec![vec![0, 1]], 2, 2);
        let comm = CommunityAssignment {
            membership: vec![0, 0],
            k: 2,
            source: CommunitySource::Labels,
            names: None,
        };
        assert_eq!(centrality(&corpus, &comm).unwrap().representatives[1], None);
    }
}
