//! Codebook discovery.
//!
//! The number of codewords is not chosen up front: it is the number of
//! clusters left when greedy structural entropy minimization stops. Each
//! codeword is the mean of its cluster, optionally pushed apart from the
//! others afterwards by [`disentangle`].

mod disentangle;
mod greedy;
mod vclub;

pub use disentangle::{
    cluster_samples, disentangle, DisentangleConfig, DisentangleOutcome, DisentangleProblem,
};
pub use greedy::{
    hierarchical_minimize, vanilla_greedy, vanilla_greedy_from, GreedyRun, DEFAULT_SUBSET_SIZE,
    MERGE_EPSILON,
};
pub use vclub::{
    vclub_contrastive, vclub_estimate, GaussianConditional, VariationalFit, VariationalModel,
};

use serde::{Deserialize, Serialize};

use crate::entropy::Partition;
use crate::error::{Error, Result};
use crate::features::{cosine, FeatureMatrix};
use crate::graph::FeatureGraph;

/// `K` codewords of dimension `H`, with the size of the cluster behind each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub centroids: FeatureMatrix,
    pub member_counts: Vec<usize>,
}

impl Codebook {
    pub fn new(centroids: FeatureMatrix, member_counts: Vec<usize>) -> Result<Self> {
        if member_counts.len() != centroids.rows() {
            return Err(Error::Shape(format!(
                "{} member counts for {} centroids",
                member_counts.len(),
                centroids.rows()
            )));
        }
        Ok(Self {
            centroids,
            member_counts,
        })
    }

    /// Number of codewords.
    pub fn len(&self) -> usize {
        self.centroids.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.centroids.cols()
    }

    pub fn centroid(&self, k: usize) -> &[f64] {
        self.centroids.row(k)
    }

    /// Index of the centroid closest to `x` in Euclidean distance, ties to the
    /// lower index.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, c) in self.centroids.iter_rows().enumerate() {
            let d = crate::features::squared_distance(c, x);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }
}

/// Cluster means of the rows of `x`; centroid `k` averages cluster `k` of `p`.
pub fn extract_centroids(p: &Partition, x: &FeatureMatrix) -> Result<Codebook> {
    if p.vertex_count() != x.rows() {
        return Err(Error::Shape(format!(
            "partition covers {} vertices but there are {} feature rows",
            p.vertex_count(),
            x.rows()
        )));
    }
    let h = x.cols();
    let mut data = Vec::with_capacity(p.len() * h);
    let mut counts = Vec::with_capacity(p.len());
    for (k, members) in p.clusters().iter().enumerate() {
        if members.is_empty() {
            return Err(Error::Invariant(format!("cluster {k} is empty")));
        }
        let mut sum = vec![0.0; h];
        for &v in members {
            for (s, &value) in sum.iter_mut().zip(x.row(v)) {
                *s += value;
            }
        }
        let n = members.len() as f64;
        data.extend(sum.into_iter().map(|s| s / n));
        counts.push(members.len());
    }
    Codebook::new(FeatureMatrix::new(p.len(), h, data)?, counts)
}

/// Moves every zero-degree vertex into the cluster of its most cosine-similar
/// vertex of positive degree, ties going to the lower cluster id.
///
/// Returns the partition with clusters ordered by smallest member. Leaves the
/// partition alone when no vertex has positive degree. Folding never changes
/// the entropy, since the moved vertices carry no volume and no cut.
pub fn fold_isolated(g: &FeatureGraph, p: &Partition, x: &FeatureMatrix) -> Result<Partition> {
    if x.rows() != g.len() {
        return Err(Error::Shape(format!(
            "graph has {} vertices but there are {} feature rows",
            g.len(),
            x.rows()
        )));
    }
    let connected: Vec<usize> = (0..g.len()).filter(|&v| g.degree(v) > 0.0).collect();
    if connected.is_empty() || connected.len() == g.len() {
        return Partition::from_clusters(g, p.canonical_sets());
    }
    let mut labels = p.labels().to_vec();
    for v in (0..g.len()).filter(|&v| g.degree(v) == 0.0) {
        let mut best: Option<(f64, usize)> = None;
        for &u in &connected {
            let sim = cosine(x.row(v), x.row(u)).unwrap_or(0.0);
            let cluster = p.cluster_of(u);
            let better = match best {
                None => true,
                Some((s, c)) => sim > s || (sim == s && cluster < c),
            };
            if better {
                best = Some((sim, cluster));
            }
        }
        labels[v] = best.expect("at least one connected vertex").1;
    }
    let mut clusters = vec![Vec::new(); p.len()];
    for (v, &l) in labels.iter().enumerate() {
        clusters[l].push(v);
    }
    clusters.retain(|c| !c.is_empty());
    clusters.sort_by_key(|c| c[0]);
    Partition::from_clusters(g, clusters)
}
