use std::collections::BTreeMap;

use gegraph::embed::EmbeddingMatrix;
use gegraph::explore::{build_aggregation, expand_community, related_nodes, AggregationStyle};
use gegraph::insight::{similarity_matrix, CentralityTable, CommunityAssignment, CommunitySource, SimilarityMatrix};
use gegraph::matrix::SquareMatrix;
use gegraph::walk::Proximity;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

struct Fixture {
    pos: Vec<[f64; 2]>,
    edges: Vec<(usize, usize)>,
    comm: CommunityAssignment,
    ids: Vec<String>,
}

fn fixture(rng: &mut ChaCha8Rng) -> Fixture {
    let n = rng.random_range(2..25);
    let k = rng.random_range(1..5).min(n);
    let mut ids: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    ids[..k].iter_mut().enumerate().for_each(|(i, c)| *c = i);
    let pos = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.2) {
                edges.push((u, v));
            }
        }
    }
    Fixture {
        pos,
        edges,
        comm: CommunityAssignment::from_ids(&ids, CommunitySource::Kmeans),
        ids: (0..n).map(|i| format!("v{i}")).collect(),
    }
}

fn no_centrality(f: &Fixture) -> CentralityTable {
    CentralityTable {
        weights: vec![0.0; f.pos.len()],
        representatives: vec![None; f.comm.k],
    }
}

#[test]
fn aggregation_accounts_for_every_node_and_cross_edge() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let f = fixture(&mut rng);
        let view = build_aggregation(&f.pos, &f.edges, &f.comm, &no_centrality(&f), &f.ids, AggregationStyle::default());
        assert_eq!(view.nodes.iter().map(|n| n.size).sum::<usize>(), f.pos.len());
        let cross = f.edges.iter().filter(|&&(u, v)| f.comm.of(u) != f.comm.of(v)).count();
        assert_eq!(view.edges.iter().map(|e| e.count).sum::<usize>(), cross);
        for a in &view.edges {
            assert!(a.count >= 1);
            for b in &view.edges {
                if a.count > b.count {
                    assert!(a.width > b.width);
                }
            }
        }
    }
}

#[test]
fn expansion_geometry_holds_on_random_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let f = fixture(&mut rng);
        let view = build_aggregation(&f.pos, &f.edges, &f.comm, &no_centrality(&f), &f.ids, AggregationStyle::default());
        for c in 0..f.comm.k {
            let g = expand_community(&view, &f.pos, &f.edges, &f.comm, &f.ids, c).unwrap();
            assert_eq!(g.members.len(), f.comm.members(c).len());
            for m in &g.members {
                assert!(dist(m.position, g.center) < g.radius);
            }
            let cross = f.edges.iter().filter(|&&(u, v)| (f.comm.of(u) == c) != (f.comm.of(v) == c)).count();
            assert_eq!(g.cross_edges.len(), cross);
            for e in &g.cross_edges {
                assert!((dist(e.anchor, g.center) - g.radius).abs() < 1e-9);
                assert_eq!(e.exterior, view.node(e.far_community).unwrap().center);
                // The anchor sits on the segment from the interior endpoint towards the far center.
                let along = dist(e.interior, e.anchor) + dist(e.anchor, e.exterior) - dist(e.interior, e.exterior);
                if dist(e.exterior, g.center) > g.radius {
                    assert!(along.abs() < 1e-9);
                }
            }
        }
        assert!(expand_community(&view, &f.pos, &f.edges, &f.comm, &f.ids, f.comm.k + 3).is_err());
    }
}

fn random_spaces(rng: &mut ChaCha8Rng, n: usize) -> BTreeMap<Proximity, SimilarityMatrix> {
    Proximity::ALL
        .into_iter()
        .map(|p| {
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            (p, similarity_matrix(&EmbeddingMatrix::from_rows(&rows).unwrap()).unwrap())
        })
        .collect()
}

#[test]
fn top_one_is_row_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 20;
    let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let spaces = random_spaces(&mut rng, n);
    for (&strategy, sim) in &spaces {
        for _ in 0..20 {
            let q = rng.random_range(0..n);
            let mut best = None;
            for v in (0..n).filter(|&v| v != q) {
                if best.is_none_or(|b: usize| sim.get(q, v) > sim.get(q, b)) {
                    best = Some(v);
                }
            }
            let r = related_nodes(q, strategy, 5, &spaces, &ids).unwrap();
            assert_eq!(r.results[0].node, best.unwrap());
            assert_eq!(r.results.len(), 5);
            assert!(r.results.windows(2).all(|w| w[0].similarity >= w[1].similarity));
            assert!(r.results.iter().all(|x| x.node != q));
        }
        let all = related_nodes(0, strategy, 100, &spaces, &ids).unwrap();
        assert_eq!(all.results.len(), n - 1);
    }
}

#[test]
fn ranking_survives_monotone_transforms() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 15;
    let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    for _ in 0..30 {
        let spaces = random_spaces(&mut rng, n);
        let transformed: BTreeMap<_, _> = spaces
            .iter()
            .map(|(&p, s)| {
                let m = SquareMatrix::from_fn(n, |u, v| s.get(u, v).powi(3));
                (p, SimilarityMatrix::from_matrix(m).unwrap())
            })
            .collect();
        for q in 0..n {
            let a = related_nodes(q, Proximity::Local, n, &spaces, &ids).unwrap();
            let b = related_nodes(q, Proximity::Local, n, &transformed, &ids).unwrap();
            let order = |r: &gegraph::explore::SearchResult| r.results.iter().map(|x| x.node).collect::<Vec<_>>();
            assert_eq!(order(&a), order(&b));
        }
    }
}
