#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sevq_core::{FeatureGraph, FeatureMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Each pair is an edge with probability `p`, weight uniform in (0.05, 1].
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> FeatureGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j, rng.random_range(0.05..=1.0)));
            }
        }
    }
    FeatureGraph::from_edges(n, &edges).unwrap()
}

/// Random graph with at least one edge.
pub fn random_nonempty_graph(rng: &mut impl Rng, n: usize, p: f64) -> FeatureGraph {
    loop {
        let g = random_graph(rng, n, p);
        if g.volume() > 0.0 {
            return g;
        }
    }
}

/// Dense blocks of consecutive vertices with sparse weak links between them.
pub fn planted_graph(
    rng: &mut impl Rng,
    sizes: &[usize],
    p_in: f64,
    p_out: f64,
) -> (FeatureGraph, Vec<usize>) {
    let labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
        .collect();
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] == labels[j] {
                if rng.random_bool(p_in) {
                    edges.push((i, j, rng.random_range(0.7..=1.0)));
                }
            } else if rng.random_bool(p_out) {
                edges.push((i, j, rng.random_range(0.05..=0.2)));
            }
        }
    }
    (FeatureGraph::from_edges(n, &edges).unwrap(), labels)
}

pub fn random_clusters(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut clusters = vec![Vec::new(); k];
    for v in 0..n {
        clusters[rng.random_range(0..k)].push(v);
    }
    clusters.retain(|c| !c.is_empty());
    clusters
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> FeatureMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    FeatureMatrix::new(rows, cols, data).unwrap()
}

/// Two-level structural entropy straight from pairwise weights.
pub fn direct_se(g: &FeatureGraph, clusters: &[Vec<usize>]) -> f64 {
    let n = g.len();
    let w = |i: usize, j: usize| g.weight(i, j).unwrap_or(0.0);
    let mut label = vec![usize::MAX; n];
    for (k, c) in clusters.iter().enumerate() {
        for &v in c {
            label[v] = k;
        }
    }
    let degree: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| w(i, j)).sum())
        .collect();
    let volume: f64 = degree.iter().sum();
    let mut h = 0.0;
    for (k, c) in clusters.iter().enumerate() {
        let vx: f64 = c.iter().map(|&i| degree[i]).sum();
        let gx: f64 = c
            .iter()
            .flat_map(|&i| (0..n).filter(|&j| label[j] != k).map(move |j| w(i, j)))
            .sum();
        for &i in c {
            if degree[i] > 0.0 {
                h -= degree[i] / volume * (degree[i] / vx).log2();
            }
        }
        if gx > 0.0 {
            h -= gx / volume * (vx / volume).log2();
        }
    }
    h
}

pub fn set_of_sets(mut clusters: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort();
    clusters
}
