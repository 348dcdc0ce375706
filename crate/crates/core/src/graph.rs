//! Attributed undirected graphs and their loaders.
//!
//! Nodes carry external string ids that are mapped to dense `0..n` indices at
//! load time. Every node may carry one value per attribute of a fixed schema;
//! string values are nominal, numbers are quantitative.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::SquareMatrix;

/// Where in the source a loader error was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    Node(usize),
    Edge(usize),
    Line(usize),
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Node(i) => write!(f, "node #{i}"),
            Position::Edge(i) => write!(f, "edge #{i}"),
            Position::Line(i) => write!(f, "line {i}"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{at}: duplicate node id {id:?}")]
    DuplicateNode { id: String, at: Position },
    #[error("{at}: edge references unknown node {id:?}")]
    UnknownNode { id: String, at: Position },
    #[error("{at}: self-loop on node {id:?}")]
    SelfLoop { id: String, at: Position },
    #[error("{at}: duplicate edge ({a:?}, {b:?})")]
    DuplicateEdge { a: String, b: String, at: Position },
    #[error("{at}: attribute {attribute:?} has {found} value, expected {expected}")]
    AttributeKind {
        attribute: String,
        expected: AttrKind,
        found: AttrKind,
        at: Position,
    },
    #[error("{at}: attribute {attribute:?} has an unsupported or non-finite value")]
    BadAttributeValue { attribute: String, at: Position },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no binning supplied for quantitative attribute {0:?}")]
    MissingBinning(String),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Nominal,
    Quantitative,
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttrKind::Nominal => "nominal",
            AttrKind::Quantitative => "quantitative",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AttrValue {
    Nominal(String),
    Quantitative(f64),
}

impl AttrValue {
    pub fn kind(&self) -> AttrKind {
        match self {
            AttrValue::Nominal(_) => AttrKind::Nominal,
            AttrValue::Quantitative(_) => AttrKind::Quantitative,
        }
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Nominal(s.to_string())
    }
}

impl From<f64> for AttrValue {
    fn from(v: f64) -> Self {
        AttrValue::Quantitative(v)
    }
}

/// An undirected graph `G = (V, E, Λ)` with optional class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    labels: Vec<Option<String>>,
    schema: Vec<String>,
    kinds: Vec<AttrKind>,
    attrs: Vec<Vec<Option<AttrValue>>>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl AttributedGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    /// Attribute-free graph on nodes `"0".."n-1"`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut b = GraphBuilder::default();
        for i in 0..n {
            b.add_node(&i.to_string())?;
        }
        for &(u, v) in edges {
            b.add_edge(&u.to_string(), &v.to_string())?;
        }
        Ok(b.build())
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn label(&self, node: usize) -> Option<&str> {
        self.labels[node].as_deref()
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    /// True when every node carries a class label.
    pub fn fully_labeled(&self) -> bool {
        !self.labels.is_empty() && self.labels.iter().all(Option::is_some)
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn attribute_kind(&self, attr: usize) -> AttrKind {
        self.kinds[attr]
    }

    pub fn attribute(&self, node: usize, attr: usize) -> Option<&AttrValue> {
        self.attrs[node][attr].as_ref()
    }

    /// Edges as `(u, v)` with `u < v`, in source order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// 0/1 symmetric adjacency matrix.
    pub fn adjacency_matrix(&self) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(self.node_count());
        for &(u, v) in &self.edges {
            m.set(u, v, 1.0);
            m.set(v, u, 1.0);
        }
        m
    }

    /// Copy of this graph with the class label added as a nominal attribute.
    /// Nodes without a label get no value for it.
    pub fn with_label_attribute(&self, name: &str) -> AttributedGraph {
        let mut g = self.clone();
        if g.schema.iter().any(|s| s == name) {
            return g;
        }
        g.schema.push(name.to_string());
        g.kinds.push(AttrKind::Nominal);
        for (row, label) in g.attrs.iter_mut().zip(&self.labels) {
            row.push(label.clone().map(AttrValue::Nominal));
        }
        g
    }

    /// JSON graph document in the loader's input format.
    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            nodes: (0..self.node_count())
                .map(|i| NodeDocument {
                    id: self.ids[i].clone(),
                    label: self.labels[i].clone(),
                    attrs: self
                        .schema
                        .iter()
                        .enumerate()
                        .filter_map(|(a, name)| {
                            self.attrs[i][a].clone().map(|v| (name.clone(), v))
                        })
                        .collect(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(u, v)| [self.ids[u].clone(), self.ids[v].clone()])
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphDocument {
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<[String; 2]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeDocument {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub attrs: BTreeMap<String, AttrValue>,
}

/// Incremental, validating graph construction.
#[derive(Default, Debug)]
pub struct GraphBuilder {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    labels: Vec<Option<String>>,
    raw_attrs: Vec<BTreeMap<String, AttrValue>>,
    kinds: BTreeMap<String, AttrKind>,
    edges: Vec<(usize, usize)>,
    seen: HashSet<(usize, usize)>,
}

impl GraphBuilder {
    pub fn add_node(&mut self, id: &str) -> Result<usize, GraphError> {
        self.add_node_with(id, None, BTreeMap::new())
    }

    pub fn add_node_with(
        &mut self,
        id: &str,
        label: Option<String>,
        attrs: BTreeMap<String, AttrValue>,
    ) -> Result<usize, GraphError> {
        let at = Position::Node(self.ids.len());
        self.insert_node(id, label, attrs, at)
    }

    fn insert_node(
        &mut self,
        id: &str,
        label: Option<String>,
        attrs: BTreeMap<String, AttrValue>,
        at: Position,
    ) -> Result<usize, GraphError> {
        if self.index.contains_key(id) {
            return Err(GraphError::DuplicateNode {
                id: id.to_string(),
                at,
            });
        }
        for (name, value) in &attrs {
            if let AttrValue::Quantitative(v) = value {
                if !v.is_finite() {
                    return Err(GraphError::BadAttributeValue {
                        attribute: name.clone(),
                        at,
                    });
                }
            }
            match self.kinds.get(name) {
                Some(&kind) if kind != value.kind() => {
                    return Err(GraphError::AttributeKind {
                        attribute: name.clone(),
                        expected: kind,
                        found: value.kind(),
                        at,
                    })
                }
                Some(_) => {}
                None => {
                    self.kinds.insert(name.clone(), value.kind());
                }
            }
        }
        let idx = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), idx);
        self.labels.push(label);
        self.raw_attrs.push(attrs);
        Ok(idx)
    }

    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<(), GraphError> {
        let at = Position::Edge(self.edges.len());
        self.insert_edge(a, b, at)
    }

    fn insert_edge(&mut self, a: &str, b: &str, at: Position) -> Result<(), GraphError> {
        let lookup = |id: &str| {
            self.index.get(id).copied().ok_or_else(|| GraphError::UnknownNode {
                id: id.to_string(),
                at,
            })
        };
        let u = lookup(a)?;
        let v = lookup(b)?;
        if u == v {
            return Err(GraphError::SelfLoop {
                id: a.to_string(),
                at,
            });
        }
        let key = (u.min(v), u.max(v));
        if !self.seen.insert(key) {
            return Err(GraphError::DuplicateEdge {
                a: a.to_string(),
                b: b.to_string(),
                at,
            });
        }
        self.edges.push(key);
        Ok(())
    }

    fn ensure_node(&mut self, id: &str, at: Position) -> Result<(), GraphError> {
        if !self.index.contains_key(id) {
            self.insert_node(id, None, BTreeMap::new(), at)?;
        }
        Ok(())
    }

    pub fn build(self) -> AttributedGraph {
        let schema: Vec<String> = self.kinds.keys().cloned().collect();
        let kinds: Vec<AttrKind> = self.kinds.values().copied().collect();
        let attrs = self
            .raw_attrs
            .into_iter()
            .map(|mut row| schema.iter().map(|name| row.remove(name)).collect())
            .collect();
        let mut neighbors = vec![Vec::new(); self.ids.len()];
        for &(u, v) in &self.edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        AttributedGraph {
            ids: self.ids,
            index: self.index,
            labels: self.labels,
            schema,
            kinds,
            attrs,
            edges: self.edges,
            neighbors,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    nodes: Vec<RawNode>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

#[derive(Deserialize)]
struct RawNode {
    id: String,
    #[serde(default)]
    label: Option<serde_json::Value>,
    #[serde(default)]
    attrs: BTreeMap<String, serde_json::Value>,
}

/// Parses a graph from JSON (`{"nodes":[...],"edges":[...]}`) or, when the
/// content does not start with `{`, from a whitespace-separated edge list.
pub fn load_graph(source: &str) -> Result<AttributedGraph, GraphError> {
    if source.trim_start().starts_with('{') {
        load_json(source)
    } else {
        load_edge_list(source)
    }
}

pub fn load_graph_file(path: &Path) -> Result<AttributedGraph, GraphError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
    load_graph(&text)
}

fn load_json(source: &str) -> Result<AttributedGraph, GraphError> {
    let raw: RawGraph = serde_json::from_str(source).map_err(|e| GraphError::Parse(e.to_string()))?;
    let mut b = GraphBuilder::default();
    for (i, node) in raw.nodes.into_iter().enumerate() {
        let at = Position::Node(i);
        let label = match node.label {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(s)) => Some(s),
            Some(serde_json::Value::Number(n)) => Some(n.to_string()),
            Some(_) => return Err(GraphError::Parse(format!("{at}: label must be a string"))),
        };
        let mut attrs = BTreeMap::new();
        for (name, value) in node.attrs {
            let v = match value {
                serde_json::Value::Null => continue,
                serde_json::Value::String(s) => AttrValue::Nominal(s),
                serde_json::Value::Number(n) => match n.as_f64() {
                    Some(x) => AttrValue::Quantitative(x),
                    None => return Err(GraphError::BadAttributeValue { attribute: name, at }),
                },
                _ => return Err(GraphError::BadAttributeValue { attribute: name, at }),
            };
            attrs.insert(name, v);
        }
        b.insert_node(&node.id, label, attrs, at)?;
    }
    for (i, (a, c)) in raw.edges.iter().enumerate() {
        b.insert_edge(a, c, Position::Edge(i))?;
    }
    Ok(b.build())
}

fn load_edge_list(source: &str) -> Result<AttributedGraph, GraphError> {
    let mut b = GraphBuilder::default();
    for (lineno, line) in source.lines().enumerate() {
        let at = Position::Line(lineno + 1);
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (a, c) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(c), None) => (a, c),
            _ => return Err(GraphError::Parse(format!("{at}: expected \"idA idB\""))),
        };
        b.ensure_node(a, at)?;
        b.ensure_node(c, at)?;
        b.insert_edge(a, c, at)?;
    }
    Ok(b.build())
}

/// Quantitative attribute discretization settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiMergeConfig {
    pub max_bins: usize,
    pub confidence: f64,
}

impl Default for ChiMergeConfig {
    fn default() -> Self {
        Self {
            max_bins: 8,
            confidence: 0.95,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub min: f64,
    pub max: f64,
    /// Arithmetic mean of the member values.
    pub representative: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributeBinning {
    pub attribute: String,
    /// Ordered, non-overlapping bins covering the observed values.
    pub bins: Vec<Bin>,
}

impl AttributeBinning {
    /// Cut points between consecutive bins (midpoints of the gaps).
    pub fn boundaries(&self) -> Vec<f64> {
        self.bins
            .windows(2)
            .map(|w| 0.5 * (w[0].max + w[1].min))
            .collect()
    }

    pub fn bin_of(&self, value: f64) -> usize {
        self.boundaries().partition_point(|&cut| cut < value)
    }

    pub fn representative(&self, value: f64) -> f64 {
        self.bins[self.bin_of(value)].representative
    }
}

#[derive(Clone, Debug)]
struct Interval {
    min: f64,
    max: f64,
    sum: f64,
    total: usize,
    counts: Vec<usize>,
}

fn chi_square(a: &Interval, b: &Interval) -> f64 {
    let n = (a.total + b.total) as f64;
    let mut chi = 0.0;
    for j in 0..a.counts.len() {
        let col = (a.counts[j] + b.counts[j]) as f64;
        if col == 0.0 {
            continue;
        }
        for row in [a, b] {
            let expected = row.total as f64 * col / n;
            let diff = row.counts[j] as f64 - expected;
            chi += diff * diff / expected;
        }
    }
    chi
}

/// Quartile membership of each value within its own distribution; equal
/// values share a class.
pub fn quartile_classes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len();
    values
        .iter()
        .map(|&v| {
            let rank = sorted.partition_point(|&x| x < v);
            (4 * rank / n).min(3)
        })
        .collect()
}

/// Bottom-up Chi-Merge discretization of one quantitative attribute.
///
/// Class membership comes from `labels` (indexed by node) when every valued
/// node is labeled, otherwise from quartile pseudo-classes. Adjacent intervals
/// with the lowest chi-square statistic are merged while that statistic is
/// below the threshold at `confidence`, or while more than `max_bins`
/// intervals remain.
pub fn discretize_attribute(
    attribute: &str,
    values: &[(usize, f64)],
    labels: Option<&[Option<String>]>,
    config: ChiMergeConfig,
) -> Result<AttributeBinning, GraphError> {
    if config.max_bins == 0 {
        return Err(GraphError::InvalidParameter("max_bins must be at least 1".into()));
    }
    if !(config.confidence > 0.0 && config.confidence < 1.0) {
        return Err(GraphError::InvalidParameter("confidence must lie in (0, 1)".into()));
    }
    if values.is_empty() {
        return Err(GraphError::InvalidParameter(format!(
            "attribute {attribute:?} has no values to discretize"
        )));
    }
    if values.iter().any(|(_, v)| !v.is_finite()) {
        return Err(GraphError::InvalidParameter(format!(
            "attribute {attribute:?} has non-finite values"
        )));
    }

    let labeled: Option<Vec<&str>> = labels.and_then(|labels| {
        values
            .iter()
            .map(|&(node, _)| labels.get(node).and_then(|l| l.as_deref()))
            .collect()
    });
    let classes: Vec<usize> = match labeled {
        Some(names) => {
            let mut dense: BTreeMap<&str, usize> = BTreeMap::new();
            for name in &names {
                let next = dense.len();
                dense.entry(name).or_insert(next);
            }
            names.iter().map(|n| dense[n]).collect()
        }
        None => quartile_classes(&values.iter().map(|&(_, v)| v).collect::<Vec<_>>()),
    };
    let class_count = classes.iter().max().map_or(1, |m| m + 1);
    let present: BTreeSet<usize> = classes.iter().copied().collect();

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].1.total_cmp(&values[b].1));
    let mut intervals: Vec<Interval> = Vec::new();
    for idx in order {
        let v = values[idx].1;
        match intervals.last_mut() {
            Some(last) if last.max == v => {
                last.sum += v;
                last.total += 1;
                last.counts[classes[idx]] += 1;
            }
            _ => {
                let mut counts = vec![0; class_count];
                counts[classes[idx]] = 1;
                intervals.push(Interval {
                    min: v,
                    max: v,
                    sum: v,
                    total: 1,
                    counts,
                });
            }
        }
    }

    let threshold = chi_square_threshold(present.len().saturating_sub(1), config.confidence);
    while intervals.len() > 1 {
        let (best, chi) = intervals
            .windows(2)
            .map(|w| chi_square(&w[0], &w[1]))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
        if intervals.len() <= config.max_bins && chi >= threshold {
            break;
        }
        let right = intervals.remove(best + 1);
        let left = &mut intervals[best];
        left.max = right.max;
        left.sum += right.sum;
        left.total += right.total;
        for (c, r) in left.counts.iter_mut().zip(&right.counts) {
            *c += r;
        }
    }

    Ok(AttributeBinning {
        attribute: attribute.to_string(),
        bins: intervals
            .into_iter()
            .map(|iv| Bin {
                min: iv.min,
                max: iv.max,
                representative: (iv.sum / iv.total as f64).clamp(iv.min, iv.max),
                count: iv.total,
            })
            .collect(),
    })
}

/// Chi-square critical value; with a single class every merge is accepted.
fn chi_square_threshold(dof: usize, confidence: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    if dof == 0 {
        return f64::INFINITY;
    }
    ChiSquared::new(dof as f64)
        .map(|d| d.inverse_cdf(confidence))
        .unwrap_or(f64::INFINITY)
}

/// Discretizes every quantitative attribute of `g`, using node labels as
/// classes when available.
pub fn discretize_all(
    g: &AttributedGraph,
    config: ChiMergeConfig,
) -> Result<Vec<AttributeBinning>, GraphError> {
    let mut out = Vec::new();
    for (a, name) in g.schema().iter().enumerate() {
        if g.attribute_kind(a) != AttrKind::Quantitative {
            continue;
        }
        let values: Vec<(usize, f64)> = (0..g.node_count())
            .filter_map(|v| match g.attribute(v, a) {
                Some(AttrValue::Quantitative(x)) => Some((v, *x)),
                _ => None,
            })
            .collect();
        if values.is_empty() {
            continue;
        }
        out.push(discretize_attribute(name, &values, Some(g.labels()), config)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VirtualValue {
    Nominal(String),
    Bin(usize),
}

/// One attribute value materialized as a node of the extended graph.
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualNode {
    pub attribute: String,
    pub value: VirtualValue,
    /// Bin mean for quantitative attributes.
    pub representative: Option<f64>,
}

impl VirtualNode {
    pub fn name(&self) -> String {
        match (&self.value, self.representative) {
            (VirtualValue::Nominal(s), _) => format!("{}={}", self.attribute, s),
            (VirtualValue::Bin(_), Some(r)) => format!("{}={}", self.attribute, r),
            (VirtualValue::Bin(b), None) => format!("{}=bin{}", self.attribute, b),
        }
    }
}

/// `G′ = (V′, E′)`: the base graph plus one virtual node per attribute value.
///
/// Real nodes keep their indices `0..|V|`; virtual nodes occupy `|V|..|V′|`.
#[derive(Clone, Debug)]
pub struct ExtendedGraph {
    base: AttributedGraph,
    virtual_nodes: Vec<VirtualNode>,
    virtual_edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl ExtendedGraph {
    pub fn base(&self) -> &AttributedGraph {
        &self.base
    }

    pub fn real_count(&self) -> usize {
        self.base.node_count()
    }

    /// `|V′|`.
    pub fn node_count(&self) -> usize {
        self.base.node_count() + self.virtual_nodes.len()
    }

    /// `|E′|`.
    pub fn edge_count(&self) -> usize {
        self.base.edge_count() + self.virtual_edges.len()
    }

    pub fn virtual_nodes(&self) -> &[VirtualNode] {
        &self.virtual_nodes
    }

    /// `(real, virtual)` index pairs.
    pub fn virtual_edges(&self) -> &[(usize, usize)] {
        &self.virtual_edges
    }

    #[inline]
    pub fn is_virtual(&self, node: usize) -> bool {
        node >= self.base.node_count()
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn token_name(&self, node: usize) -> String {
        if self.is_virtual(node) {
            self.virtual_nodes[node - self.real_count()].name()
        } else {
            self.base.id(node).to_string()
        }
    }
}

/// Adds a virtual node for every distinct nominal value and every occupied
/// bin of a quantitative attribute, linked to each node carrying it.
pub fn extend_graph(
    g: &AttributedGraph,
    binnings: &[AttributeBinning],
) -> Result<ExtendedGraph, GraphError> {
    let n = g.node_count();
    let mut keyed: BTreeMap<(usize, VirtualValue), Vec<usize>> = BTreeMap::new();
    let mut reps: HashMap<(usize, usize), f64> = HashMap::new();
    for (a, name) in g.schema().iter().enumerate() {
        let binning = match g.attribute_kind(a) {
            AttrKind::Nominal => None,
            AttrKind::Quantitative => {
                let has_values = (0..n).any(|v| g.attribute(v, a).is_some());
                match binnings.iter().find(|b| &b.attribute == name) {
                    Some(b) => Some(b),
                    None if !has_values => None,
                    None => return Err(GraphError::MissingBinning(name.clone())),
                }
            }
        };
        for v in 0..n {
            let key = match (g.attribute(v, a), binning) {
                (None, _) => continue,
                (Some(AttrValue::Nominal(s)), _) => VirtualValue::Nominal(s.clone()),
                (Some(AttrValue::Quantitative(x)), Some(b)) => {
                    let bin = b.bin_of(*x);
                    reps.insert((a, bin), b.bins[bin].representative);
                    VirtualValue::Bin(bin)
                }
                (Some(AttrValue::Quantitative(_)), None) => unreachable!("binning resolved above"),
            };
            keyed.entry((a, key)).or_default().push(v);
        }
    }

    let mut neighbors: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v).to_vec()).collect();
    let mut virtual_nodes = Vec::with_capacity(keyed.len());
    let mut virtual_edges = Vec::new();
    for ((a, value), members) in keyed {
        let idx = n + virtual_nodes.len();
        let representative = match value {
            VirtualValue::Bin(bin) => reps.get(&(a, bin)).copied(),
            VirtualValue::Nominal(_) => None,
        };
        virtual_nodes.push(VirtualNode {
            attribute: g.schema()[a].clone(),
            value,
            representative,
        });
        for &m in &members {
            virtual_edges.push((m, idx));
            neighbors[m].push(idx);
        }
        neighbors.push(members);
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    Ok(ExtendedGraph {
        base: g.clone(),
        virtual_nodes,
        virtual_edges,
        neighbors,
    })
}
