//! End-to-end runs: graph → walks → embedding → communities → layout, and the
//! session state the explorer queries.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{train_skipgram, Coverage, EmbedError, EmbeddingMatrix, SkipGramConfig};
use crate::explore::{build_aggregation, AggregationStyle, AggregationView, ExploreError};
use crate::graph::{
    discretize_all, extend_graph, load_graph_file, AttributeBinning, AttributedGraph, ChiMergeConfig, ExtendedGraph,
    GraphError,
};
use crate::insight::{
    centrality, cluster_nodes, similarity_matrix, CentralityTable, CommunityAssignment, InsightError,
    SimilarityMatrix,
};
use crate::layout::{enhanced_adjacency, fr_layout, EnhancedAdjacency, FrConfig, LayoutError, LayoutResult};
use crate::metrics::{full_report, LayoutUnderTest, MetricParams, MetricsReport};
use crate::render::{LayoutDocument, LayoutNode};
use crate::walk::{generate_walks, Proximity, ProximityPreset, WalkCorpus, WalkError, WalkParams};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Insight(#[from] InsightError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("dataset {0:?} not found")]
    DatasetNotFound(String),
}

/// How communities are chosen for layout and the metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommunityMode {
    /// Labels when every node has one, K-Means otherwise.
    #[default]
    Auto,
    Labels,
    Kmeans,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub k: usize,
    pub communities: CommunityMode,
    pub w: f64,
    pub t_ein: f64,
    pub t_eout: f64,
    pub iterations: usize,
    pub initial_temperature: f64,
    pub seed: u64,
    /// Use the node label as a nominal attribute when the graph has none.
    pub label_attribute: bool,
    pub max_bins: usize,
    pub confidence: f64,
    pub metrics: MetricParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 0.5,
            r: 0.5,
            walk_length: 80,
            walks_per_node: 10,
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            k: 8,
            communities: CommunityMode::Auto,
            w: 0.4,
            t_ein: 0.4,
            t_eout: 0.6,
            iterations: 500,
            initial_temperature: 0.1,
            seed: 0,
            label_attribute: true,
            max_bins: 8,
            confidence: 0.95,
            metrics: MetricParams::default(),
        }
    }
}

impl PipelineConfig {
    /// Plain force-directed settings: `A_E` reduces to the adjacency matrix.
    pub fn baseline(self) -> Self {
        Self {
            w: 1.0,
            t_ein: 0.0,
            t_eout: 0.0,
            ..self
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.w == 1.0 && self.t_ein == 0.0 && self.t_eout == 0.0
    }

    pub fn walk_params(&self) -> WalkParams {
        WalkParams {
            p: self.p,
            q: self.q,
            r: self.r,
            walk_length: self.walk_length,
            walks_per_node: self.walks_per_node,
            seed: derive_seed(self.seed, Stage::Walks),
        }
    }

    pub fn skipgram(&self) -> SkipGramConfig {
        SkipGramConfig {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed: derive_seed(self.seed, Stage::SkipGram),
        }
    }

    pub fn fr(&self) -> FrConfig {
        FrConfig {
            iterations: self.iterations,
            initial_temperature: self.initial_temperature,
            spacing: None,
            seed: derive_seed(self.seed, Stage::Layout),
        }
    }

    pub fn chi_merge(&self) -> ChiMergeConfig {
        ChiMergeConfig {
            max_bins: self.max_bins,
            confidence: self.confidence,
        }
    }

    /// Copy with the walk biases of a standard proximity preset.
    pub fn with_preset(&self, proximity: Proximity) -> Self {
        let preset = ProximityPreset::standard(proximity, self.walk_params());
        Self {
            p: preset.params.p,
            q: preset.params.q,
            r: preset.params.r,
            ..*self
        }
    }
}

#[derive(Clone, Copy)]
enum Stage {
    Walks,
    SkipGram,
    Kmeans,
    Layout,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn derive_seed(seed: u64, stage: Stage) -> u64 {
    splitmix64(seed ^ splitmix64(stage as u64 + 1))
}

const DEFAULT_DATA_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");

/// Finds a dataset file: the path as given, then `GEGRAPH_DATA_DIR`, then the
/// bundled data directory. A bare name also tries `<name>.json`.
pub fn resolve_dataset(name: &str) -> Result<PathBuf, PipelineError> {
    let direct = Path::new(name);
    if direct.is_file() {
        return Ok(direct.to_path_buf());
    }
    let mut dirs = Vec::new();
    if let Ok(dir) = std::env::var("GEGRAPH_DATA_DIR") {
        dirs.push(PathBuf::from(dir));
    }
    dirs.push(PathBuf::from(DEFAULT_DATA_DIR));
    for dir in dirs {
        for candidate in [dir.join(name), dir.join(format!("{name}.json"))] {
            if candidate.is_file() {
                return Ok(candidate);
            }
        }
    }
    Err(PipelineError::DatasetNotFound(name.to_string()))
}

pub fn load_dataset(name: &str) -> Result<AttributedGraph, PipelineError> {
    Ok(load_graph_file(&resolve_dataset(name)?)?)
}

/// The attributed graph actually embedded, with its extension.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub graph: AttributedGraph,
    pub binnings: Vec<AttributeBinning>,
    pub extended: ExtendedGraph,
}

pub fn prepare(g: &AttributedGraph, config: &PipelineConfig) -> Result<Prepared, PipelineError> {
    let graph = if config.label_attribute && g.schema().is_empty() && g.labels().iter().any(Option::is_some) {
        g.with_label_attribute("label")
    } else {
        g.clone()
    };
    let binnings = discretize_all(&graph, config.chi_merge())?;
    let extended = extend_graph(&graph, &binnings)?;
    Ok(Prepared {
        graph,
        binnings,
        extended,
    })
}

#[derive(Clone, Debug)]
pub struct EmbeddingRun {
    pub corpus: WalkCorpus,
    pub embedding: EmbeddingMatrix,
    pub coverage: Coverage,
    pub similarity: SimilarityMatrix,
}

pub fn embed(prepared: &Prepared, config: &PipelineConfig) -> Result<EmbeddingRun, PipelineError> {
    let corpus = generate_walks(&prepared.extended, &config.walk_params())?;
    let (embedding, coverage) = train_skipgram(&corpus, &config.skipgram())?;
    let similarity = similarity_matrix(&embedding)?;
    Ok(EmbeddingRun {
        corpus,
        embedding,
        coverage,
        similarity,
    })
}

pub fn choose_communities(
    g: &AttributedGraph,
    embedding: &EmbeddingMatrix,
    config: &PipelineConfig,
) -> Result<CommunityAssignment, PipelineError> {
    let from_labels = || CommunityAssignment::from_labels(g.labels());
    let kmeans = || cluster_nodes(embedding, config.k.min(g.node_count()), derive_seed(config.seed, Stage::Kmeans));
    Ok(match config.communities {
        CommunityMode::Labels => from_labels().ok_or_else(|| {
            InsightError::InvalidParameter("label communities need a label on every node".into())
        })?,
        CommunityMode::Kmeans => kmeans()?,
        CommunityMode::Auto => match from_labels() {
            Some(c) => c,
            None => kmeans()?,
        },
    })
}

#[derive(Clone, Debug)]
pub struct LayoutRun {
    pub config: PipelineConfig,
    pub prepared: Prepared,
    pub embedding: EmbeddingRun,
    pub enhanced: EnhancedAdjacency,
    pub layout: LayoutResult,
}

impl LayoutRun {
    pub fn graph(&self) -> &AttributedGraph {
        &self.prepared.graph
    }

    pub fn communities(&self) -> &CommunityAssignment {
        &self.layout.communities
    }

    pub fn metrics(&self) -> MetricsReport {
        let l = LayoutUnderTest {
            positions: &self.layout.positions,
            edges: self.graph().edges(),
            communities: &self.layout.communities.membership,
        };
        full_report(&l, self.config.metrics)
    }

    pub fn document(&self) -> LayoutDocument {
        let g = self.graph();
        let mut params = serde_json::to_value(self.config).expect("config always serializes");
        let extra = serde_json::json!({
            "method": if self.config.is_baseline() { "fr" } else { "gegraph" },
            "baseline": self.config.is_baseline(),
            "spacing": self.layout.provenance.spacing,
            "community_source": self.layout.communities.source,
            "community_count": self.layout.communities.k,
        });
        if let (Some(map), serde_json::Value::Object(more)) = (params.as_object_mut(), extra) {
            map.extend(more);
        }
        LayoutDocument {
            params,
            nodes: self
                .layout
                .positions
                .iter()
                .enumerate()
                .map(|(v, p)| LayoutNode {
                    id: g.id(v).to_string(),
                    x: p[0],
                    y: p[1],
                    community: self.layout.communities.of(v),
                })
                .collect(),
            edges: g.edges().iter().map(|&(u, v)| [g.id(u).to_string(), g.id(v).to_string()]).collect(),
        }
    }
}

pub fn run_layout(g: &AttributedGraph, config: &PipelineConfig) -> Result<LayoutRun, PipelineError> {
    let prepared = prepare(g, config)?;
    let embedding = embed(&prepared, config)?;
    let communities = choose_communities(&prepared.graph, &embedding.embedding, config)?;
    let enhanced = enhanced_adjacency(
        &prepared.graph.adjacency_matrix(),
        embedding.similarity.matrix(),
        &communities,
        config.w,
        config.t_ein,
        config.t_eout,
    )?;
    let layout = fr_layout(&enhanced, &communities, &config.fr())?;
    Ok(LayoutRun {
        config: *config,
        prepared,
        embedding,
        enhanced,
        layout,
    })
}

/// Everything the explorer serves for one dataset.
#[derive(Clone, Debug)]
pub struct Session {
    pub run: LayoutRun,
    pub spaces: BTreeMap<Proximity, SimilarityMatrix>,
    pub centrality: CentralityTable,
    pub aggregation: AggregationView,
    pub metrics: MetricsReport,
}

impl Session {
    pub fn build(g: &AttributedGraph, config: &PipelineConfig) -> Result<Self, PipelineError> {
        let prepared = prepare(g, config)?;
        let (run, presets) = rayon::join(
            || run_layout(g, config),
            || {
                Proximity::ALL
                    .par_iter()
                    .map(|&proximity| Ok((proximity, embed(&prepared, &config.with_preset(proximity))?.similarity)))
                    .collect::<Result<Vec<_>, PipelineError>>()
            },
        );
        let run = run?;
        let spaces: BTreeMap<_, _> = presets?.into_iter().collect();
        let centrality = centrality(&run.embedding.corpus, run.communities())?;
        let aggregation = build_aggregation(
            &run.layout.positions,
            run.graph().edges(),
            run.communities(),
            &centrality,
            run.graph().ids(),
            AggregationStyle::default(),
        );
        let metrics = run.metrics();
        Ok(Self {
            run,
            spaces,
            centrality,
            aggregation,
            metrics,
        })
    }

    pub fn graph(&self) -> &AttributedGraph {
        self.run.graph()
    }
}
