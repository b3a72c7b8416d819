//! Synthetic inputs with known structure.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::FeatureGraph;
use crate::rng;

/// Isotropic Gaussian mixture whose component means sit on distinct
/// coordinate axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSpec {
    pub components: usize,
    pub samples: usize,
    pub dim: usize,
    /// Distance of each component mean from the origin.
    pub separation: f64,
    /// Per-coordinate standard deviation.
    pub noise: f64,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        Self {
            components: 5,
            samples: 500,
            dim: 16,
            separation: 4.0,
            noise: 0.5,
        }
    }
}

/// Draws `spec.samples` rows; row `t` comes from component `t % components`.
/// Returns the rows and their component labels.
pub fn gaussian_mixture(spec: &MixtureSpec, seed: u64) -> Result<(FeatureMatrix, Vec<usize>)> {
    if spec.components == 0 || spec.components > spec.dim {
        return Err(Error::InvalidArgument(format!(
            "need 1..={} components for dimension {}, got {}",
            spec.dim, spec.dim, spec.components
        )));
    }
    let mut rng = rng::stream(seed, 0);
    let mut data = Vec::with_capacity(spec.samples * spec.dim);
    let mut labels = Vec::with_capacity(spec.samples);
    for t in 0..spec.samples {
        let c = t % spec.components;
        labels.push(c);
        for d in 0..spec.dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mean = if d == c { spec.separation } else { 0.0 };
            data.push(mean + spec.noise * z);
        }
    }
    Ok((FeatureMatrix::new(spec.samples, spec.dim, data)?, labels))
}

/// `count` cliques of `size` vertices with `internal` weight inside each
/// clique and `cross` weight between every pair in different cliques.
/// Cliques occupy consecutive vertex ids. Returns the graph and the clique
/// label of each vertex.
pub fn planted_cliques(
    count: usize,
    size: usize,
    internal: f64,
    cross: f64,
) -> Result<(FeatureGraph, Vec<usize>)> {
    let n = count * size;
    let labels: Vec<usize> = (0..n).map(|v| v / size).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = if labels[i] == labels[j] {
                internal
            } else {
                cross
            };
            if w > 0.0 {
                edges.push((i, j, w));
            }
        }
    }
    Ok((FeatureGraph::from_edges(n, &edges)?, labels))
}

/// Four vertices joined by two disjoint unit edges, `0-1` and `2-3`.
pub fn two_disjoint_edges() -> FeatureGraph {
    FeatureGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).expect("valid edges")
}

/// Standard-normal matrix.
pub fn standard_normal(rows: usize, cols: usize, seed: u64) -> Result<FeatureMatrix> {
    let mut rng = rng::stream(seed, 0);
    let data = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    FeatureMatrix::new(rows, cols, data)
}
