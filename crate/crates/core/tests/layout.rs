use gegraph::insight::{CommunityAssignment, CommunitySource};
use gegraph::layout::{combine, enhanced_adjacency, fr_layout, fr_simulate, FrConfig};
use gegraph::matrix::SquareMatrix;
use proptest::prelude::*;

fn symmetric(n: usize, upper: &[f64], diag: f64) -> SquareMatrix {
    let mut m = SquareMatrix::filled(n, diag);
    let mut it = upper.iter();
    for u in 0..n {
        for v in u + 1..n {
            let x = *it.next().unwrap();
            m.set(u, v, x);
            m.set(v, u, x);
        }
    }
    m
}

fn fixture() -> impl Strategy<Value = (usize, Vec<bool>, Vec<f64>, Vec<usize>)> {
    (2usize..9).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            Just(n),
            prop::collection::vec(any::<bool>(), pairs),
            prop::collection::vec(0.0f64..=1.0, pairs),
            prop::collection::vec(0usize..3, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn enhanced_adjacency_invariants(
        (n, edges, sims, comm) in fixture(),
        w in 0.0f64..=1.0,
        t_ein in 0.0f64..=1.0,
        gap in 0.0f64..=1.0,
    ) {
        let t_eout = t_ein + (1.0 - t_ein) * gap;
        let a = symmetric(n, &edges.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect::<Vec<_>>(), 0.0);
        let s = symmetric(n, &sims, 1.0);
        let c = CommunityAssignment::from_ids(&comm, CommunitySource::Labels);
        let m = enhanced_adjacency(&a, &s, &c, w, t_ein, t_eout).unwrap();
        prop_assert!(m.matrix.is_symmetric(0.0));
        for u in 0..n {
            prop_assert_eq!(m.get(u, u), 0.0);
            for v in 0..n {
                let x = m.get(u, v);
                prop_assert!((0.0..=1.0).contains(&x));
                if u != v && x != 0.0 {
                    let t = if c.of(u) == c.of(v) { t_ein } else { t_eout };
                    prop_assert!(x >= t);
                }
            }
        }
    }

    #[test]
    fn combination_is_affine_in_w((n, edges, sims, _) in fixture()) {
        let a = symmetric(n, &edges.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect::<Vec<_>>(), 0.0);
        let s = symmetric(n, &sims, 1.0);
        let n0 = combine(&a, &s, 0.0).unwrap();
        let n1 = combine(&a, &s, 1.0).unwrap();
        let half = combine(&a, &s, 0.5).unwrap();
        for ((h, x), y) in half.as_slice().iter().zip(n0.as_slice()).zip(n1.as_slice()) {
            prop_assert!((h - 0.5 * (x + y)).abs() < 1e-12);
        }
    }
}

#[test]
fn weight_one_without_thresholds_is_adjacency() {
    let a = symmetric(4, &[1.0, 0.0, 1.0, 1.0, 0.0, 0.0], 0.0);
    let s = symmetric(4, &[0.3, 0.9, 0.1, 0.5, 0.7, 0.2], 1.0);
    let c = CommunityAssignment::from_ids(&[0, 0, 1, 1], CommunitySource::Labels);
    let m = enhanced_adjacency(&a, &s, &c, 1.0, 0.0, 0.0).unwrap();
    assert_eq!(m.matrix, a);
}

#[test]
fn two_node_fixture() {
    let a = symmetric(2, &[1.0], 0.0);
    let s = symmetric(2, &[0.5], 1.0);
    let c = CommunityAssignment::from_ids(&[0, 0], CommunitySource::Labels);
    assert!((combine(&a, &s, 0.4).unwrap().get(0, 1) - 0.7).abs() < 1e-12);
    assert_eq!(enhanced_adjacency(&a, &s, &c, 0.4, 0.4, 0.6).unwrap().get(0, 1), 1.0);
}

#[test]
fn connected_pair_settles_at_spacing() {
    let m = symmetric(2, &[1.0], 0.0);
    for seed in 0..10 {
        let trace = fr_simulate(&m, &FrConfig { iterations: 2000, seed, ..Default::default() }).unwrap();
        let [a, b] = [trace.positions[0], trace.positions[1]];
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        assert!((d - trace.spacing).abs() <= 0.05 * trace.spacing, "d = {d}, k = {}", trace.spacing);
    }
}

fn two_blocks(size: usize) -> SquareMatrix {
    SquareMatrix::from_fn(2 * size, |u, v| if u != v && u / size == v / size { 1.0 } else { 0.0 })
}

fn centroid(p: &[[f64; 2]]) -> [f64; 2] {
    let n = p.len() as f64;
    [p.iter().map(|x| x[0]).sum::<f64>() / n, p.iter().map(|x| x[1]).sum::<f64>() / n]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[test]
fn disconnected_blocks_separate() {
    let size = 8;
    let m = two_blocks(size);
    let c = CommunityAssignment::from_ids(&(0..2 * size).map(|i| i / size).collect::<Vec<_>>(), CommunitySource::Labels);
    let em = enhanced_adjacency(&m, &SquareMatrix::filled(2 * size, 0.0), &c, 1.0, 0.0, 0.0).unwrap();
    for seed in 0..5 {
        let l = fr_layout(&em, &c, &FrConfig { seed, ..Default::default() }).unwrap();
        let (left, right) = l.positions.split_at(size);
        let (ca, cb) = (centroid(left), centroid(right));
        let spread = (left.iter().map(|&p| dist(p, ca)).sum::<f64>() + right.iter().map(|&p| dist(p, cb)).sum::<f64>())
            / (2 * size) as f64;
        assert!(dist(ca, cb) >= spread, "seed {seed}: {} < {spread}", dist(ca, cb));
    }
}

#[test]
fn displacement_shrinks_at_the_end() {
    let m = SquareMatrix::from_fn(20, |u, v| if u != v && (u + 1) % 20 == v || (v + 1) % 20 == u || (u * 7) % 20 == v { 1.0 } else { 0.0 });
    let m = SquareMatrix::from_fn(20, |u, v| if u != v { m.get(u, v).max(m.get(v, u)) } else { 0.0 });
    for seed in 0..5 {
        let trace = fr_simulate(&m, &FrConfig { seed, ..Default::default() }).unwrap();
        let tail = &trace.displacement[trace.displacement.len() * 9 / 10..];
        for w in tail.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "seed {seed}: {tail:?}");
        }
    }
}

#[test]
fn layout_is_deterministic_and_in_unit_square() {
    let m = two_blocks(5);
    let c = CommunityAssignment::from_ids(&[0; 10], CommunitySource::Labels);
    let em = enhanced_adjacency(&m, &SquareMatrix::filled(10, 0.5), &c, 0.4, 0.4, 0.6).unwrap();
    let a = fr_layout(&em, &c, &FrConfig::default()).unwrap();
    let b = fr_layout(&em, &c, &FrConfig::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.positions.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
}
