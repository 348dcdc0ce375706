//! Readability metrics for node-link layouts.
//!
//! Every metric reads positions in the unit square, the edge list and a
//! community id per node. Smaller is better for all of them except the
//! minimum-angle score `M_a`, which is reported in its `1 − deviation` form
//! alongside the raw mean deviation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A positioned graph with communities, borrowed from its owners.
#[derive(Clone, Copy, Debug)]
pub struct LayoutUnderTest<'a> {
    pub positions: &'a [[f64; 2]],
    pub edges: &'a [(usize, usize)],
    pub communities: &'a [usize],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricParams {
    /// Node pairs closer than this are occluding.
    pub occlusion_threshold: f64,
    /// Cells per side of the entropy grid.
    pub grid_size: usize,
    /// Neighborhood radius of the spatial autocorrelation.
    pub radius: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            occlusion_threshold: 0.01 * std::f64::consts::SQRT_2,
            grid_size: 8,
            radius: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    #[serde(rename = "N_sp")]
    pub node_spread: f64,
    #[serde(rename = "N_oc")]
    pub node_occlusions: f64,
    #[serde(rename = "E_c")]
    pub edge_crossings: f64,
    #[serde(rename = "E_c_outside")]
    pub edge_crossings_outside: f64,
    #[serde(rename = "M_a")]
    pub minimum_angle: f64,
    #[serde(rename = "M_l")]
    pub edge_length_variation: f64,
    #[serde(rename = "G_o")]
    pub group_overlap: f64,
    #[serde(rename = "H")]
    pub community_entropy: f64,
    #[serde(rename = "C")]
    pub spatial_autocorrelation: f64,
    /// Mean relative angle deviation, i.e. `1 − M_a`.
    pub minimum_angle_deviation: f64,
    pub params: MetricParams,
}

impl MetricsReport {
    pub const COLUMNS: [&'static str; 9] = ["N_sp", "N_oc", "E_c", "E_c_outside", "M_a", "M_l", "G_o", "H", "C"];

    fn zero(params: MetricParams) -> Self {
        Self {
            node_spread: 0.0,
            node_occlusions: 0.0,
            edge_crossings: 0.0,
            edge_crossings_outside: 0.0,
            minimum_angle: 0.0,
            edge_length_variation: 0.0,
            group_overlap: 0.0,
            community_entropy: 0.0,
            spatial_autocorrelation: 0.0,
            minimum_angle_deviation: 0.0,
            params,
        }
    }

    /// The nine scores in column order.
    pub fn values(&self) -> [f64; 9] {
        [
            self.node_spread,
            self.node_occlusions,
            self.edge_crossings,
            self.edge_crossings_outside,
            self.minimum_angle,
            self.edge_length_variation,
            self.group_overlap,
            self.community_entropy,
            self.spatial_autocorrelation,
        ]
    }
}

#[inline]
fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn groups(communities: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &c) in communities.iter().enumerate() {
        out.entry(c).or_default().push(v);
    }
    out
}

/// Mean over communities of the mean member distance to the community centroid.
pub fn node_spread(l: &LayoutUnderTest) -> f64 {
    let groups = groups(l.communities);
    if groups.is_empty() {
        return 0.0;
    }
    let total: f64 = groups
        .values()
        .map(|members| {
            let m = members.len() as f64;
            let cx = members.iter().map(|&v| l.positions[v][0]).sum::<f64>() / m;
            let cy = members.iter().map(|&v| l.positions[v][1]).sum::<f64>() / m;
            members.iter().map(|&v| dist(&l.positions[v], &[cx, cy])).sum::<f64>() / m
        })
        .sum();
    total / groups.len() as f64
}

/// Fraction of node pairs closer than `threshold`.
pub fn node_occlusions(l: &LayoutUnderTest, threshold: f64) -> f64 {
    let n = l.positions.len();
    if n < 2 {
        return 0.0;
    }
    let mut close = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if dist(&l.positions[i], &l.positions[j]) < threshold {
                close += 1;
            }
        }
    }
    close as f64 / (n * (n - 1) / 2) as f64
}

#[inline]
fn orient(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// True when the open segments `ab` and `cd` cross at a single interior point.
pub fn segments_cross(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2], d: &[f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn crossing_ratio(l: &LayoutUnderTest, edges: &[(usize, usize)]) -> f64 {
    let m = edges.len();
    if m < 2 {
        return 0.0;
    }
    let mut crossings = 0usize;
    for i in 0..m {
        let (a, b) = edges[i];
        for &(c, d) in &edges[i + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            let p = l.positions;
            if segments_cross(&p[a], &p[b], &p[c], &p[d]) {
                crossings += 1;
            }
        }
    }
    crossings as f64 / (m * (m - 1) / 2) as f64
}

/// `(E_c, E_c_outside)`: crossing edge pairs over all pairs, and the same
/// ratio among cross-community edges only.
pub fn edge_crossings(l: &LayoutUnderTest) -> (f64, f64) {
    let outside: Vec<(usize, usize)> = l
        .edges
        .iter()
        .copied()
        .filter(|&(u, v)| l.communities[u] != l.communities[v])
        .collect();
    (crossing_ratio(l, l.edges), crossing_ratio(l, &outside))
}

fn incident_angles(l: &LayoutUnderTest) -> Vec<Vec<f64>> {
    let mut angles = vec![Vec::new(); l.positions.len()];
    for &(u, v) in l.edges {
        let (pu, pv) = (l.positions[u], l.positions[v]);
        angles[u].push((pv[1] - pu[1]).atan2(pv[0] - pu[0]).to_degrees());
        angles[v].push((pu[1] - pv[1]).atan2(pu[0] - pv[0]).to_degrees());
    }
    angles
}

/// Mean of `|(θ_ideal − θ_real) / θ_ideal|` over nodes of degree ≥ 2, or
/// `None` when there is no such node.
pub fn minimum_angle_deviation(l: &LayoutUnderTest) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for mut a in incident_angles(l) {
        if a.len() < 2 {
            continue;
        }
        a.sort_by(f64::total_cmp);
        let wrap = 360.0 - (a[a.len() - 1] - a[0]);
        let real = a.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min);
        let ideal = 360.0 / a.len() as f64;
        sum += ((ideal - real) / ideal).abs();
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// `1 −` the mean relative deviation; 1 when no node has degree ≥ 2.
pub fn minimum_angle(l: &LayoutUnderTest) -> f64 {
    1.0 - minimum_angle_deviation(l).unwrap_or(0.0)
}

/// Population coefficient of variation of edge lengths.
pub fn edge_length_variation(l: &LayoutUnderTest) -> f64 {
    if l.edges.is_empty() {
        return 0.0;
    }
    let lengths: Vec<f64> = l.edges.iter().map(|&(u, v)| dist(&l.positions[u], &l.positions[v])).collect();
    let m = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / m;
    if mean <= 0.0 {
        return 0.0;
    }
    let var = lengths.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    var.sqrt() / mean
}

#[inline]
fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    orient(o, a, b)
}

/// Counter-clockwise convex hull without collinear vertices.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Closed containment in a counter-clockwise convex polygon of ≥ 3 vertices.
fn in_hull(hull: &[[f64; 2]], p: &[f64; 2]) -> bool {
    let h = hull.len();
    (0..h).all(|i| cross(&hull[i], &hull[(i + 1) % h], p) >= -1e-12)
}

/// Mean over communities of the fraction of other communities' nodes lying in
/// the community's convex hull (boundary included). Hulls with fewer than
/// three non-collinear points contain nothing.
pub fn group_overlap(l: &LayoutUnderTest) -> f64 {
    let groups = groups(l.communities);
    if groups.len() < 2 {
        return 0.0;
    }
    let n = l.positions.len();
    let total: f64 = groups
        .iter()
        .map(|(&c, members)| {
            let pts: Vec<[f64; 2]> = members.iter().map(|&v| l.positions[v]).collect();
            let hull = convex_hull(&pts);
            let others = n - members.len();
            if hull.len() < 3 || others == 0 {
                return 0.0;
            }
            let inside = (0..n)
                .filter(|&v| l.communities[v] != c && in_hull(&hull, &l.positions[v]))
                .count();
            inside as f64 / others as f64
        })
        .sum();
    total / groups.len() as f64
}

/// Mean Shannon entropy (bits) of community proportions over the non-empty
/// cells of a `grid_size × grid_size` partition of the unit square.
pub fn community_entropy(l: &LayoutUnderTest, grid_size: usize) -> f64 {
    let g = grid_size.max(1);
    let cell = |x: f64| ((x * g as f64).floor().max(0.0) as usize).min(g - 1);
    let mut cells: BTreeMap<(usize, usize), BTreeMap<usize, usize>> = BTreeMap::new();
    for (p, &c) in l.positions.iter().zip(l.communities) {
        *cells.entry((cell(p[0]), cell(p[1]))).or_default().entry(c).or_default() += 1;
    }
    if cells.is_empty() {
        return 0.0;
    }
    let total: f64 = cells
        .values()
        .map(|counts| {
            let n: usize = counts.values().sum();
            -counts
                .values()
                .map(|&k| {
                    let p = k as f64 / n as f64;
                    p * p.log2()
                })
                .sum::<f64>()
        })
        .sum();
    total / cells.len() as f64
}

/// `C_i` for one node: distance-weighted share of different-community
/// neighbors strictly within `radius`, or `None` without neighbors.
pub fn node_autocorrelation(l: &LayoutUnderTest, i: usize, radius: f64) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..l.positions.len() {
        if i == j {
            continue;
        }
        let d = dist(&l.positions[i], &l.positions[j]);
        if d < radius {
            let w = 1.0 - d / radius;
            den += w;
            if l.communities[i] != l.communities[j] {
                num += w;
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Mean of `C_i` over nodes that have at least one neighbor within `radius`.
pub fn spatial_autocorrelation(l: &LayoutUnderTest, radius: f64) -> f64 {
    let values: Vec<f64> = (0..l.positions.len())
        .filter_map(|i| node_autocorrelation(l, i, radius))
        .collect();
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// All nine metrics under one parameter set. An empty layout scores zero everywhere.
pub fn full_report(l: &LayoutUnderTest, params: MetricParams) -> MetricsReport {
    if l.positions.is_empty() {
        return MetricsReport::zero(params);
    }
    let (e_c, e_c_outside) = edge_crossings(l);
    let deviation = minimum_angle_deviation(l).unwrap_or(0.0);
    MetricsReport {
        node_spread: node_spread(l),
        node_occlusions: node_occlusions(l, params.occlusion_threshold),
        edge_crossings: e_c,
        edge_crossings_outside: e_c_outside,
        minimum_angle: 1.0 - deviation,
        edge_length_variation: edge_length_variation(l),
        group_overlap: group_overlap(l),
        community_entropy: community_entropy(l, params.grid_size),
        spatial_autocorrelation: spatial_autocorrelation(l, params.radius),
        minimum_angle_deviation: deviation,
        params,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lut<'a>(p: &'a [[f64; 2]], e: &'a [(usize, usize)], c: &'a [usize]) -> LayoutUnderTest<'a> {
        LayoutUnderTest { positions: p, edges: e, communities: c }
    }

    #[test]
    fn spread_examples() {
        let p = [[0.0, 0.0], [1.0, 0.0]];
        assert!((node_spread(&lut(&p, &[], &[0, 0])) - 0.5).abs() < 1e-12);
        let p2 = [[0.0, 0.0], [1.0, 0.0], [0.0, 0.5], [1.0, 0.5]];
        assert!((node_spread(&lut(&p2, &[], &[0, 0, 1, 1])) - 0.5).abs() < 1e-12);
        let same = [[0.3, 0.3], [0.3, 0.3]];
        assert_eq!(node_spread(&lut(&same, &[], &[0, 0])), 0.0);
    }

    #[test]
    fn occlusion_examples() {
        let p = [[0.1, 0.1], [0.1, 0.1], [0.9, 0.9]];
        assert!((node_occlusions(&lut(&p, &[], &[0; 3]), 0.01) - 1.0 / 3.0).abs() < 1e-12);
        let all = [[0.5, 0.5]; 4];
        assert_eq!(node_occlusions(&lut(&all, &[], &[0; 4]), 0.01), 1.0);
        assert_eq!(node_occlusions(&lut(&all[..1], &[], &[0]), 0.01), 0.0);
    }

    #[test]
    fn crossing_examples() {
        let x = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        assert_eq!(edge_crossings(&lut(&x, &[(0, 1), (2, 3)], &[0; 4])).0, 1.0);
        assert_eq!(edge_crossings(&lut(&x, &[(0, 1), (0, 2)], &[0; 4])).0, 0.0);
        // Square with both diagonals: one crossing pair among 15.
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let e = [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2), (1, 3)];
        let (ec, _) = edge_crossings(&lut(&sq, &e, &[0; 4]));
        assert!((ec - 1.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn crossings_outside_communities() {
        let x = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let (ec, out) = edge_crossings(&lut(&x, &[(0, 1), (2, 3)], &[0, 1, 0, 1]));
        assert_eq!((ec, out), (1.0, 1.0));
        let (_, inside_only) = edge_crossings(&lut(&x, &[(0, 1), (2, 3)], &[0, 0, 1, 1]));
        assert_eq!(inside_only, 0.0);
    }

    #[test]
    fn angle_examples() {
        let straight = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!((minimum_angle(&lut(&straight, &[(0, 1), (1, 2)], &[0; 3])) - 1.0).abs() < 1e-12);
        let star = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        let e = [(0, 1), (0, 2), (0, 3), (0, 4)];
        assert!(minimum_angle_deviation(&lut(&star, &e, &[0; 5])).unwrap().abs() < 1e-12);
        let folded = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(minimum_angle(&lut(&folded, &[(0, 1), (0, 2)], &[0; 3])).abs() < 1e-12);
        assert_eq!(minimum_angle(&lut(&folded, &[(0, 1)], &[0; 3])), 1.0);
    }

    #[test]
    fn length_variation_examples() {
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 4.0]];
        assert!((edge_length_variation(&lut(&p, &[(0, 1), (2, 3)], &[0; 4])) - 0.5).abs() < 1e-12);
        assert_eq!(edge_length_variation(&lut(&p, &[(0, 1)], &[0; 4])), 0.0);
        let z = [[0.2, 0.2]; 2];
        assert_eq!(edge_length_variation(&lut(&z, &[(0, 1)], &[0; 2])), 0.0);
    }

    #[test]
    fn overlap_examples() {
        let disjoint = [[0.0, 0.0], [0.2, 0.0], [0.0, 0.2], [0.8, 0.8], [1.0, 0.8], [0.8, 1.0]];
        assert_eq!(group_overlap(&lut(&disjoint, &[], &[0, 0, 0, 1, 1, 1])), 0.0);
        // B (two points) inside A's triangle; B's hull is degenerate.
        let nested = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.2, 0.2], [0.3, 0.2]];
        assert!((group_overlap(&lut(&nested, &[], &[0, 0, 0, 1, 1])) - 0.5).abs() < 1e-12);
        let twin = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert_eq!(group_overlap(&lut(&twin, &[], &[0, 0, 0, 1, 1, 1])), 1.0);
        assert_eq!(group_overlap(&lut(&twin, &[], &[0; 6])), 0.0);
    }

    #[test]
    fn entropy_examples() {
        let pure = [[0.05, 0.05], [0.06, 0.06], [0.9, 0.9]];
        assert_eq!(community_entropy(&lut(&pure, &[], &[0, 0, 1]), 8), 0.0);
        let mixed = [[0.05, 0.05], [0.06, 0.06], [0.9, 0.9]];
        assert!((community_entropy(&lut(&mixed, &[], &[0, 1, 1]), 8) - 0.5).abs() < 1e-12);
        let four = [[0.5, 0.5], [0.51, 0.5], [0.5, 0.51], [0.51, 0.51]];
        assert!((community_entropy(&lut(&four, &[], &[0, 1, 2, 3]), 1) - 2.0).abs() < 1e-12);
        assert_eq!(community_entropy(&lut(&[], &[], &[]), 8), 0.0);
    }

    #[test]
    fn autocorrelation_examples() {
        let r = 0.4;
        let p = [[0.5, 0.5], [0.6, 0.5], [0.5, 0.8]];
        // Node 0: same-community neighbor at 0.25r, different one at 0.75r.
        let c = [0, 0, 1];
        let l = lut(&p, &[], &c);
        assert!((node_autocorrelation(&l, 0, r).unwrap() - 0.25).abs() < 1e-12);
        let all_same = [0, 0, 0];
        assert_eq!(spatial_autocorrelation(&lut(&p, &[], &all_same), r), 0.0);
        let all_diff = [0, 1, 2];
        assert!((spatial_autocorrelation(&lut(&p, &[], &all_diff), r) - 1.0).abs() < 1e-12);
        assert!(spatial_autocorrelation(&l, r) > 0.0);
        assert_eq!(spatial_autocorrelation(&l, 0.01), 0.0);
    }

    #[test]
    fn empty_report_is_zero() {
        let r = full_report(&lut(&[], &[], &[]), MetricParams::default());
        assert!(r.values().iter().all(|&v| v == 0.0));
    }
}
