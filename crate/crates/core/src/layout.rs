//! Embedding-enhanced adjacency and the weighted Fruchterman-Reingold simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::insight::CommunityAssignment;
use crate::matrix::SquareMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid layout parameter: {0}")]
    InvalidParameter(String),
}

/// `0` below the threshold, identity at or above it.
#[inline]
pub fn truncate(x: f64, threshold: f64) -> f64 {
    if x < threshold {
        0.0
    } else {
        x
    }
}

/// Truncated, normalized `w·A + (1−w)·S`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnhancedAdjacency {
    pub matrix: SquareMatrix,
    pub w: f64,
    pub t_ein: f64,
    pub t_eout: f64,
}

impl EnhancedAdjacency {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.matrix.get(u, v)
    }

    /// Nonzero upper-triangle entries as `(u, v, weight)`.
    pub fn weighted_edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let w = self.matrix.get(u, v);
                if w > 0.0 {
                    out.push((u, v, w));
                }
            }
        }
        out
    }
}

/// `N = w·A + (1−w)·S` before normalization.
pub fn combine(adj: &SquareMatrix, sim: &SquareMatrix, w: f64) -> Result<SquareMatrix, LayoutError> {
    if adj.dim() != sim.dim() {
        return Err(LayoutError::DimensionMismatch(format!(
            "adjacency is {0}x{0}, similarity is {1}x{1}",
            adj.dim(),
            sim.dim()
        )));
    }
    Ok(SquareMatrix::from_fn(adj.dim(), |i, j| w * adj.get(i, j) + (1.0 - w) * sim.get(i, j)))
}

/// Min-max normalizes the off-diagonal of `N`, truncates each entry with the
/// intra-community threshold `t_ein` or inter-community threshold `t_eout`,
/// and zeroes the diagonal.
///
/// When every off-diagonal entry is equal, nonzero entries map to 1 and zero
/// entries stay 0.
pub fn enhanced_adjacency(
    adj: &SquareMatrix,
    sim: &SquareMatrix,
    communities: &CommunityAssignment,
    w: f64,
    t_ein: f64,
    t_eout: f64,
) -> Result<EnhancedAdjacency, LayoutError> {
    if !(0.0..=1.0).contains(&w) {
        return Err(LayoutError::InvalidParameter(format!("w must lie in [0, 1], got {w}")));
    }
    for (name, t) in [("t_ein", t_ein), ("t_eout", t_eout)] {
        if !(0.0..=1.0).contains(&t) {
            return Err(LayoutError::InvalidParameter(format!("{name} must lie in [0, 1], got {t}")));
        }
    }
    if communities.len() != adj.dim() {
        return Err(LayoutError::DimensionMismatch(format!(
            "{} community entries for {} nodes",
            communities.len(),
            adj.dim()
        )));
    }
    let n = combine(adj, sim, w)?;
    let (lo, hi) = n.off_diagonal_range().unwrap_or((0.0, 0.0));
    let range = hi - lo;
    let matrix = SquareMatrix::from_fn(n.dim(), |u, v| {
        if u == v {
            return 0.0;
        }
        let x = n.get(u, v);
        let normalized = if range > 0.0 {
            ((x - lo) / range).clamp(0.0, 1.0)
        } else if x > 0.0 {
            1.0
        } else {
            0.0
        };
        let threshold = if communities.of(u) == communities.of(v) { t_ein } else { t_eout };
        truncate(normalized, threshold)
    });
    Ok(EnhancedAdjacency { matrix, w, t_ein, t_eout })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrConfig {
    pub iterations: usize,
    /// Fraction of the initial layout width used as starting temperature.
    pub initial_temperature: f64,
    /// Ideal spacing `k`; defaults to `sqrt(1/n)`.
    pub spacing: Option<f64>,
    pub seed: u64,
}

impl Default for FrConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            initial_temperature: 0.1,
            spacing: None,
            seed: 0,
        }
    }
}

/// Raw simulation output before rescaling.
#[derive(Clone, Debug)]
pub struct FrTrace {
    pub positions: Vec<[f64; 2]>,
    /// Sum over nodes of the applied displacement length, per iteration.
    pub displacement: Vec<f64>,
    pub spacing: f64,
}

/// Runs the simulation: unweighted repulsion `k²/d` between all pairs,
/// attraction `weight·d²/k` along nonzero entries. Every node moves along its
/// net force by the current temperature, which cools linearly towards zero.
pub fn fr_simulate(weights: &SquareMatrix, config: &FrConfig) -> Result<FrTrace, LayoutError> {
    if config.iterations == 0 {
        return Err(LayoutError::InvalidParameter("iterations must be at least 1".into()));
    }
    let n = weights.dim();
    let spacing = config.spacing.unwrap_or_else(|| (1.0 / n.max(1) as f64).sqrt());
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(LayoutError::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pos: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    if n < 2 {
        return Ok(FrTrace {
            positions: pos,
            displacement: vec![0.0; config.iterations],
            spacing,
        });
    }

    let mut attract = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let w = weights.get(u, v);
            if w > 0.0 {
                attract.push((u, v, w));
            }
        }
    }

    let t0 = config.initial_temperature * extent(&pos).max(1e-9);
    let k2 = spacing * spacing;
    let mut disp = vec![[0.0f64; 2]; n];
    let mut displacement = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let temperature = t0 * (1.0 - it as f64 / config.iterations as f64);
        disp.iter_mut().for_each(|d| *d = [0.0, 0.0]);
        for i in 0..n {
            for j in i + 1..n {
                let (dx, dy, d) = separation(&pos[i], &pos[j]);
                let f = k2 / d;
                let (fx, fy) = (dx / d * f, dy / d * f);
                disp[i][0] += fx;
                disp[i][1] += fy;
                disp[j][0] -= fx;
                disp[j][1] -= fy;
            }
        }
        for &(u, v, w) in &attract {
            let (dx, dy, d) = separation(&pos[u], &pos[v]);
            let f = w * d * d / spacing;
            let (fx, fy) = (dx / d * f, dy / d * f);
            disp[u][0] -= fx;
            disp[u][1] -= fy;
            disp[v][0] += fx;
            disp[v][1] += fy;
        }
        let mut moved = 0.0;
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if len > 0.0 {
                p[0] += d[0] / len * temperature;
                p[1] += d[1] / len * temperature;
                moved += temperature;
            }
        }
        displacement.push(moved);
    }
    Ok(FrTrace {
        positions: pos,
        displacement,
        spacing,
    })
}

/// Vector from `b` to `a` and its length; coincident points get a tiny fixed offset.
#[inline]
fn separation(a: &[f64; 2], b: &[f64; 2]) -> (f64, f64, f64) {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let d = (dx * dx + dy * dy).sqrt();
    if d < 1e-12 {
        (1e-12, 0.0, 1e-12)
    } else {
        (dx, dy, d)
    }
}

fn bounds(pos: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pos {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

fn extent(pos: &[[f64; 2]]) -> f64 {
    let (lo, hi) = bounds(pos);
    (hi[0] - lo[0]).max(hi[1] - lo[1])
}

/// Uniformly scales positions into the unit square, centered; a single point
/// (or fully coincident layout) lands at `(0.5, 0.5)`.
pub fn rescale_unit(pos: &[[f64; 2]]) -> Vec<[f64; 2]> {
    if pos.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = bounds(pos);
    let size = extent(pos);
    if !(size > 0.0) {
        return vec![[0.5, 0.5]; pos.len()];
    }
    let off = [(1.0 - (hi[0] - lo[0]) / size) / 2.0, (1.0 - (hi[1] - lo[1]) / size) / 2.0];
    pos.iter()
        .map(|p| {
            [
                ((p[0] - lo[0]) / size + off[0]).clamp(0.0, 1.0),
                ((p[1] - lo[1]) / size + off[1]).clamp(0.0, 1.0),
            ]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayoutProvenance {
    pub w: f64,
    pub t_ein: f64,
    pub t_eout: f64,
    pub iterations: usize,
    pub spacing: f64,
    pub seed: u64,
}

/// Node positions in the unit square plus the communities they were laid out with.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayoutResult {
    pub positions: Vec<[f64; 2]>,
    pub communities: CommunityAssignment,
    pub provenance: LayoutProvenance,
}

pub fn fr_layout(
    m: &EnhancedAdjacency,
    communities: &CommunityAssignment,
    config: &FrConfig,
) -> Result<LayoutResult, LayoutError> {
    if communities.len() != m.dim() {
        return Err(LayoutError::DimensionMismatch(format!(
            "{} community entries for {} nodes",
            communities.len(),
            m.dim()
        )));
    }
    let trace = fr_simulate(&m.matrix, config)?;
    Ok(LayoutResult {
        positions: rescale_unit(&trace.positions),
        communities: communities.clone(),
        provenance: LayoutProvenance {
            w: m.w,
            t_ein: m.t_ein,
            t_eout: m.t_eout,
            iterations: config.iterations,
            spacing: trace.spacing,
            seed: config.seed,
        },
    })
}
