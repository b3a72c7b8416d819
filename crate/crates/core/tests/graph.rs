mod common;

use common::*;
use rand::Rng;
use sevq_core::graph::AnchorSet;
use sevq_core::{attach_query, build_graph, Error, FeatureMatrix};

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    ab / (aa.sqrt() * bb.sqrt())
}

#[test]
fn edges_match_brute_force_cosine() {
    let mut rng = rng(21);
    for round in 0..40 {
        let rows = rng.random_range(2..40);
        let cols = rng.random_range(1..8);
        let x = random_matrix(&mut rng, rows, cols);
        let tau = [-0.5, 0.0, 0.2, 0.5, 0.9][round % 5];
        let g = build_graph(&x, tau).unwrap();
        for i in 0..rows {
            for j in 0..rows {
                let got = g.weight(i, j);
                if i == j {
                    assert_eq!(got, None);
                    continue;
                }
                let sim = oracle_cosine(x.row(i), x.row(j));
                if (sim - tau).abs() < 1e-12 || sim.abs() < 1e-12 {
                    continue;
                }
                if sim >= tau && sim > 0.0 {
                    assert!((got.expect("edge expected") - sim).abs() < 1e-12);
                } else {
                    assert_eq!(got, None, "unexpected edge {i}-{j} sim {sim} tau {tau}");
                }
            }
        }
        assert!(g.caches_consistent(1e-12));
    }
}

#[test]
fn spec_threshold_example() {
    let x = FeatureMatrix::from_rows(&[[1.0, 0.0], [0.6, 0.8], [0.0, 1.0]]).unwrap();
    let g = build_graph(&x, 0.5).unwrap();
    assert_eq!(g.edge_count(), 2);
    assert!((g.weight(0, 1).unwrap() - 0.6).abs() < 1e-12);
    assert!((g.weight(1, 2).unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(g.weight(0, 2), None);
}

#[test]
fn zero_rows_and_bad_thresholds_are_rejected() {
    let x = FeatureMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
    assert!(matches!(
        build_graph(&x, 0.2),
        Err(Error::ZeroNorm { row: 1 })
    ));
    let x = FeatureMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
    assert!(build_graph(&x, 1.0).is_err());
    assert!(build_graph(&x, f64::NAN).is_err());
}

#[test]
fn construction_ignores_thread_count() {
    let mut rng = rng(22);
    let x = random_matrix(&mut rng, 300, 6);
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| build_graph(&x, 0.2).unwrap());
    let b = four.install(|| build_graph(&x, 0.2).unwrap());
    assert_eq!(a, b);
}

#[test]
fn query_weights_equal_graph_weights() {
    let mut rng = rng(23);
    for _ in 0..30 {
        let rows = rng.random_range(2..30);
        let x = random_matrix(&mut rng, rows, 5);
        let g = build_graph(&x, 0.2).unwrap();
        let last = rows - 1;
        let anchors = x.select_rows(&(0..last).collect::<Vec<_>>()).unwrap();
        let q = attach_query(&anchors, x.row(last), 0.2).unwrap();
        let expected: Vec<(usize, f64)> = g.neighbors(last).to_vec();
        assert_eq!(q.incident, expected);
        assert_eq!(q.degree, g.degree(last));
    }
}

#[test]
fn attach_checks_dimension_and_norm() {
    let set = AnchorSet::new(FeatureMatrix::from_rows(&[[1.0, 0.0, 0.0]]).unwrap()).unwrap();
    assert!(matches!(
        set.attach(&[1.0, 0.0], 0.2),
        Err(Error::Dimension {
            expected: 3,
            found: 2
        })
    ));
    assert!(matches!(
        set.attach(&[0.0, 0.0, 0.0], 0.2),
        Err(Error::ZeroNorm { .. })
    ));
    assert!(set.attach(&[0.0, 1.0, 0.0], 0.2).unwrap().is_isolated());
}

#[test]
fn induced_subgraph_keeps_inner_edges() {
    let mut rng = rng(24);
    let g = random_graph(&mut rng, 20, 0.3);
    let keep = [3usize, 7, 1, 15, 12];
    let sub = g.induced_subgraph(&keep).unwrap();
    let sorted = [1usize, 3, 7, 12, 15];
    assert_eq!(sub.len(), 5);
    for (a, &u) in sorted.iter().enumerate() {
        for (b, &v) in sorted.iter().enumerate() {
            assert_eq!(sub.weight(a, b), if a == b { None } else { g.weight(u, v) });
        }
    }
    assert!(sub.caches_consistent(1e-12));
    assert!(matches!(
        g.induced_subgraph(&[25]),
        Err(Error::VertexOutOfRange { vertex: 25, n: 20 })
    ));
}
