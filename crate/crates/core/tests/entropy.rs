mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use sevq_core::entropy::{one_dim_entropy, JoinContext};
use sevq_core::{
    assign_delta, encoding_tree_se, merge_delta, partition_se, EncodingTree, Error, FeatureGraph,
    Partition, QueryAttachment,
};

#[test]
fn partition_se_matches_pairwise_oracle() {
    let mut rng = rng(11);
    for _ in 0..200 {
        let n = rng.random_range(2..=24);
        let g = random_nonempty_graph(&mut rng, n, 0.3);
        let k = rng.random_range(1..=n);
        let clusters = random_clusters(&mut rng, n, k);
        let p = Partition::from_clusters(&g, clusters.clone()).unwrap();
        let se = partition_se(&g, &p).unwrap();
        assert!((se - direct_se(&g, &clusters)).abs() < 1e-9);
    }
}

#[test]
fn merge_delta_matches_recomputation() {
    let mut rng = rng(12);
    for _ in 0..1000 {
        let n = rng.random_range(3..=16);
        let g = random_nonempty_graph(&mut rng, n, 0.35);
        let k = rng.random_range(2..=n);
        let clusters = random_clusters(&mut rng, n, k);
        if clusters.len() < 2 {
            continue;
        }
        let p = Partition::from_clusters(&g, clusters.clone()).unwrap();
        let a = rng.random_range(0..p.len());
        let mut b = rng.random_range(0..p.len() - 1);
        if b >= a {
            b += 1;
        }
        let mut merged = clusters.clone();
        let moved = merged[b].clone();
        merged[a].extend(moved);
        merged.remove(b);
        let expected = direct_se(&g, &clusters) - direct_se(&g, &merged);
        let got = merge_delta(&g, &p, a, b).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }
}

/// Anchor graph plus the query as vertex `n`.
fn extended(g: &FeatureGraph, q: &QueryAttachment) -> FeatureGraph {
    let mut edges: Vec<(usize, usize, f64)> = g.edges().collect();
    edges.extend(q.incident.iter().map(|&(a, w)| (a, g.len(), w)));
    FeatureGraph::from_edges(g.len() + 1, &edges).unwrap()
}

fn random_query(rng: &mut impl Rng, n: usize) -> QueryAttachment {
    loop {
        let mut incident = Vec::new();
        for a in 0..n {
            if rng.random_bool(0.3) {
                incident.push((a, rng.random_range(0.2..=1.0)));
            }
        }
        if !incident.is_empty() {
            let degree = incident.iter().map(|&(_, w)| w).sum();
            return QueryAttachment { incident, degree };
        }
    }
}

#[test]
fn assign_delta_matches_recomputation() {
    let mut rng = rng(13);
    for _ in 0..1000 {
        let n = rng.random_range(2..=16);
        let g = random_graph(&mut rng, n, 0.3);
        let k = rng.random_range(1..=n);
        let clusters = random_clusters(&mut rng, n, k);
        let p = Partition::from_clusters(&g, clusters.clone()).unwrap();
        let q = random_query(&mut rng, n);
        let gx = extended(&g, &q);

        let mut alone = clusters.clone();
        alone.push(vec![n]);
        let before = direct_se(&gx, &alone);
        let (target, _) = q.incident[rng.random_range(0..q.incident.len())];
        let c = p.cluster_of(target);
        let mut joined = clusters.clone();
        joined[c].push(n);
        let after = direct_se(&gx, &joined);

        let d = assign_delta(&g, &p, &q, c).unwrap();
        assert!((d.delta - (before - after)).abs() < 1e-9);
        assert!((d.resulting_se - after).abs() < 1e-9);
    }
}

#[test]
fn join_gain_covers_clusters_without_edges() {
    let mut rng = rng(14);
    for _ in 0..300 {
        let n = rng.random_range(4..=14);
        let g = random_nonempty_graph(&mut rng, n, 0.4);
        let clusters = random_clusters(&mut rng, n, 4);
        let p = Partition::from_clusters(&g, clusters.clone()).unwrap();
        let q = random_query(&mut rng, n);
        let gx = extended(&g, &q);
        let ctx = JoinContext::new(&g, &p, &q).unwrap();
        let mut alone = clusters.clone();
        alone.push(vec![n]);
        assert!((ctx.baseline() - direct_se(&gx, &alone)).abs() < 1e-9);
        for k in 0..p.len() {
            let mut joined = clusters.clone();
            joined[k].push(n);
            let expected = ctx.baseline() - direct_se(&gx, &joined);
            assert!((ctx.join_gain(&p, k) - expected).abs() < 1e-9);
            if ctx.weight_into(k) == 0.0 {
                // Joining a cluster with no edge to the query never helps.
                assert!(expected <= 1e-12);
                assert!(matches!(
                    assign_delta(&g, &p, &q, k),
                    Err(Error::NoIncidentEdge { .. })
                ));
            }
        }
    }
}

#[test]
fn isolated_query_changes_nothing() {
    let g = FeatureGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 0.5)]).unwrap();
    let p = Partition::singletons(&g);
    let q = QueryAttachment {
        incident: vec![],
        degree: 0.0,
    };
    let d = assign_delta(&g, &p, &q, 1).unwrap();
    assert_eq!(d.delta, 0.0);
    assert!((d.resulting_se - partition_se(&g, &p).unwrap()).abs() < 1e-12);
}

#[test]
fn height_two_trees_agree_with_partitions() {
    let mut rng = rng(15);
    for _ in 0..200 {
        let n = rng.random_range(2..=32);
        let g = random_nonempty_graph(&mut rng, n, 0.25);
        let k = rng.random_range(1..=n);
        let p = Partition::from_clusters(&g, random_clusters(&mut rng, n, k)).unwrap();
        let tree = EncodingTree::from_partition(&p);
        let diff = encoding_tree_se(&g, &tree).unwrap() - partition_se(&g, &p).unwrap();
        assert!(diff.abs() < 1e-9);
    }
}

#[test]
fn trivial_partitions_give_one_dimensional_entropy() {
    let mut rng = rng(16);
    for _ in 0..50 {
        let n = rng.random_range(2..=20);
        let g = random_nonempty_graph(&mut rng, n, 0.3);
        let h1 = one_dim_entropy(&g).unwrap();
        let singles = partition_se(&g, &Partition::singletons(&g)).unwrap();
        let whole = partition_se(&g, &Partition::single_cluster(&g)).unwrap();
        assert!((singles - h1).abs() < 1e-9);
        assert!((whole - h1).abs() < 1e-9);
        assert!((encoding_tree_se(&g, &EncodingTree::flat(n)).unwrap() - h1).abs() < 1e-9);
    }
}

type Fixture = (usize, Vec<(usize, usize, f64)>, Vec<usize>, Vec<usize>);

fn graph_and_partition() -> impl Strategy<Value = Fixture> {
    (2usize..14).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let m = pairs.len();
        (
            Just(n),
            proptest::collection::vec(proptest::option::weighted(0.4, 0.05f64..1.0), m).prop_map(
                move |ws| {
                    pairs
                        .iter()
                        .zip(ws)
                        .filter_map(|(&(i, j), w)| w.map(|w| (i, j, w)))
                        .collect::<Vec<_>>()
                },
            ),
            proptest::collection::vec(0usize..4, n),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
    })
}

fn clusters_from_labels(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut clusters = vec![Vec::new(); 4];
    for (v, &l) in labels.iter().enumerate() {
        clusters[l].push(v);
    }
    clusters.retain(|c| !c.is_empty());
    clusters
}

proptest! {
    #[test]
    fn entropy_is_nonnegative_and_label_free((n, edges, labels, perm) in graph_and_partition()) {
        prop_assume!(!edges.is_empty());
        let g = FeatureGraph::from_edges(n, &edges).unwrap();
        let clusters = clusters_from_labels(&labels);
        let se = partition_se(&g, &Partition::from_clusters(&g, clusters.clone()).unwrap()).unwrap();
        prop_assert!(se >= -1e-12);
        prop_assert!(se <= one_dim_entropy(&g).unwrap() + (n as f64).log2() + 1e-9);

        // Reordering the clusters leaves the entropy alone.
        let mut reversed = clusters.clone();
        reversed.reverse();
        let se_rev = partition_se(&g, &Partition::from_clusters(&g, reversed).unwrap()).unwrap();
        prop_assert!((se - se_rev).abs() < 1e-9);

        // So does relabeling the vertices.
        let moved: Vec<(usize, usize, f64)> = edges.iter().map(|&(i, j, w)| (perm[i], perm[j], w)).collect();
        let gp = FeatureGraph::from_edges(n, &moved).unwrap();
        let cp: Vec<Vec<usize>> = clusters.iter().map(|c| c.iter().map(|&v| perm[v]).collect()).collect();
        let se_perm = partition_se(&gp, &Partition::from_clusters(&gp, cp).unwrap()).unwrap();
        prop_assert!((se - se_perm).abs() < 1e-9);
    }

    #[test]
    fn cached_cuts_and_volumes_stay_consistent((n, edges, labels, _perm) in graph_and_partition()) {
        let g = FeatureGraph::from_edges(n, &edges).unwrap();
        let p = Partition::from_clusters(&g, clusters_from_labels(&labels)).unwrap();
        prop_assert!(p.caches_consistent(&g, 1e-12));
        if p.len() >= 2 {
            prop_assert!(p.merged(&g, 0, 1).unwrap().caches_consistent(&g, 1e-12));
        }
    }
}
