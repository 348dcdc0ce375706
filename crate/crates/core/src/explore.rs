//! Exploration views over a finished layout: the community aggregation,
//! Focus+Context expansion of one community, and related-node search.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::insight::{CentralityTable, CommunityAssignment, SimilarityMatrix};
use crate::render::community_color;
use crate::walk::Proximity;

#[derive(Debug, Error, PartialEq)]
pub enum ExploreError {
    #[error("unknown community {0}")]
    UnknownCommunity(usize),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("no similarity space for strategy {0}")]
    UnknownStrategy(String),
    #[error("k must be at least 1")]
    ZeroK,
}

/// Rendering ranges for aggregated nodes (unit-square radius) and edges (stroke width).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationStyle {
    pub r_min: f64,
    pub r_max: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl Default for AggregationStyle {
    fn default() -> Self {
        Self {
            r_min: 0.02,
            r_max: 0.08,
            w_min: 1.0,
            w_max: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregatedNode {
    pub community: usize,
    pub size: usize,
    pub center: [f64; 2],
    pub radius: f64,
    pub representative: Option<usize>,
    /// Id of the representative node.
    pub label: Option<String>,
    pub color: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregatedEdge {
    pub source: usize,
    pub target: usize,
    pub count: usize,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregationView {
    pub nodes: Vec<AggregatedNode>,
    pub edges: Vec<AggregatedEdge>,
    pub style: AggregationStyle,
}

impl AggregationView {
    pub fn node(&self, community: usize) -> Option<&AggregatedNode> {
        self.nodes.iter().find(|n| n.community == community)
    }
}

/// Aggregates each non-empty community into one node at its centroid with a
/// radius growing as the square root of its size, and joins communities by
/// edges whose width grows linearly with the number of real edges between them.
pub fn build_aggregation(
    positions: &[[f64; 2]],
    edges: &[(usize, usize)],
    communities: &CommunityAssignment,
    centrality: &CentralityTable,
    ids: &[String],
    style: AggregationStyle,
) -> AggregationView {
    let sizes = communities.sizes();
    let largest = sizes.iter().copied().max().unwrap_or(0).max(1) as f64;
    let nodes = (0..communities.k)
        .filter(|&c| sizes[c] > 0)
        .map(|c| {
            let members = communities.members(c);
            let m = members.len() as f64;
            let center = [
                members.iter().map(|&v| positions[v][0]).sum::<f64>() / m,
                members.iter().map(|&v| positions[v][1]).sum::<f64>() / m,
            ];
            let representative = centrality.representatives.get(c).copied().flatten();
            AggregatedNode {
                community: c,
                size: sizes[c],
                center,
                radius: style.r_min + (style.r_max - style.r_min) * (m / largest).sqrt(),
                representative,
                label: representative.map(|v| ids[v].clone()),
                color: community_color(c),
            }
        })
        .collect();

    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(u, v) in edges {
        let (a, b) = (communities.of(u), communities.of(v));
        if a != b {
            *counts.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let max_count = counts.values().copied().max().unwrap_or(1) as f64;
    let edges = counts
        .into_iter()
        .map(|((source, target), count)| AggregatedEdge {
            source,
            target,
            count,
            width: style.w_min + (style.w_max - style.w_min) * count as f64 / max_count,
        })
        .collect();
    AggregationView { nodes, edges, style }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpandedMember {
    pub node: usize,
    pub id: String,
    pub position: [f64; 2],
}

/// A real edge leaving the focused community, drawn as a straight segment to
/// the boundary anchor and a cubic Bezier from the anchor to the far community.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossEdge {
    pub inner: usize,
    pub outer: usize,
    pub far_community: usize,
    pub interior: [f64; 2],
    pub anchor: [f64; 2],
    pub exterior: [f64; 2],
    pub controls: [[f64; 2]; 2],
    pub color: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionGeometry {
    pub community: usize,
    pub center: [f64; 2],
    pub radius: f64,
    pub members: Vec<ExpandedMember>,
    pub cross_edges: Vec<CrossEdge>,
}

const EXPANSION_SCALE: f64 = 1.5;
const MEMBER_FILL: f64 = 0.85;
const BEZIER_OFFSET: f64 = 0.1;

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn add_scaled(a: [f64; 2], d: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] + d[0] * s, a[1] + d[1] * s]
}

fn norm(a: [f64; 2]) -> f64 {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

/// Where the ray from `start` (inside the circle) along `dir` leaves the circle.
fn exit_point(start: [f64; 2], dir: [f64; 2], center: [f64; 2], radius: f64) -> [f64; 2] {
    let f = sub(start, center);
    let a = dir[0] * dir[0] + dir[1] * dir[1];
    let b = 2.0 * (f[0] * dir[0] + f[1] * dir[1]);
    let c = f[0] * f[0] + f[1] * f[1] - radius * radius;
    let t = (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a);
    add_scaled(start, dir, t)
}

/// Replaces one aggregated community by its members, rescaled from their
/// global bounding box into a circle 1.5× the aggregated radius.
pub fn expand_community(
    view: &AggregationView,
    positions: &[[f64; 2]],
    edges: &[(usize, usize)],
    communities: &CommunityAssignment,
    ids: &[String],
    community: usize,
) -> Result<ExpansionGeometry, ExploreError> {
    let focus = view.node(community).ok_or(ExploreError::UnknownCommunity(community))?;
    let center = focus.center;
    let radius = EXPANSION_SCALE * focus.radius;

    let members = communities.members(community);
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for &v in &members {
        for a in 0..2 {
            lo[a] = lo[a].min(positions[v][a]);
            hi[a] = hi[a].max(positions[v][a]);
        }
    }
    let box_center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let half_diag = norm(sub(hi, lo)) / 2.0;
    let scale = if half_diag > 0.0 { MEMBER_FILL * radius / half_diag } else { 0.0 };
    let local: BTreeMap<usize, [f64; 2]> = members
        .iter()
        .map(|&v| (v, add_scaled(center, sub(positions[v], box_center), scale)))
        .collect();

    let mut cross_edges = Vec::new();
    for &(u, v) in edges {
        let (inner, outer) = match (communities.of(u) == community, communities.of(v) == community) {
            (true, false) => (u, v),
            (false, true) => (v, u),
            _ => continue,
        };
        let far_community = communities.of(outer);
        let Some(far) = view.node(far_community) else { continue };
        let interior = local[&inner];
        let exterior = far.center;
        let mut dir = sub(exterior, interior);
        if norm(dir) < 1e-12 {
            dir = sub(exterior, center);
        }
        if norm(dir) < 1e-12 {
            dir = [1.0, 0.0];
        }
        let anchor = exit_point(interior, dir, center, radius);
        let chord = sub(exterior, anchor);
        let length = norm(chord);
        let mut normal = if length > 0.0 {
            [-chord[1] / length, chord[0] / length]
        } else {
            [0.0, 0.0]
        };
        let mid = add_scaled(anchor, chord, 0.5);
        let outward = sub(mid, center);
        if normal[0] * outward[0] + normal[1] * outward[1] < 0.0 {
            normal = [-normal[0], -normal[1]];
        }
        let offset = BEZIER_OFFSET * length;
        let controls = [
            add_scaled(add_scaled(anchor, chord, 1.0 / 3.0), normal, offset),
            add_scaled(add_scaled(anchor, chord, 2.0 / 3.0), normal, offset),
        ];
        cross_edges.push(CrossEdge {
            inner,
            outer,
            far_community,
            interior,
            anchor,
            exterior,
            controls,
            color: community_color(far_community),
        });
    }

    Ok(ExpansionGeometry {
        community,
        center,
        radius,
        members: local
            .into_iter()
            .map(|(node, position)| ExpandedMember {
                node,
                id: ids[node].clone(),
                position,
            })
            .collect(),
        cross_edges,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelatedNode {
    pub node: usize,
    pub id: String,
    pub similarity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub query: usize,
    pub query_id: String,
    pub strategy: Proximity,
    pub results: Vec<RelatedNode>,
}

/// Top-`k` nodes of the strategy's similarity row, query excluded, ties by
/// lowest index.
pub fn related_nodes(
    query: usize,
    strategy: Proximity,
    k: usize,
    spaces: &BTreeMap<Proximity, SimilarityMatrix>,
    ids: &[String],
) -> Result<SearchResult, ExploreError> {
    if k == 0 {
        return Err(ExploreError::ZeroK);
    }
    let sim = spaces
        .get(&strategy)
        .ok_or_else(|| ExploreError::UnknownStrategy(strategy.to_string()))?;
    if query >= sim.dim() || query >= ids.len() {
        return Err(ExploreError::UnknownNode(query.to_string()));
    }
    let row = sim.row(query);
    let mut ranked: Vec<usize> = (0..row.len()).filter(|&v| v != query).collect();
    ranked.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    ranked.truncate(k);
    Ok(SearchResult {
        query,
        query_id: ids[query].clone(),
        strategy,
        results: ranked
            .into_iter()
            .map(|v| RelatedNode {
                node: v,
                id: ids[v].clone(),
                similarity: row[v],
            })
            .collect(),
    })
}
