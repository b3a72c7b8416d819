//! Reference solutions: exhaustive entropy minimization for small graphs,
//! k-means, and Euclidean residual quantization.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::codebook::Codebook;
use crate::entropy::{partition_se, Partition};
use crate::error::{Error, Result};
use crate::features::{squared_distance, FeatureMatrix};
use crate::graph::FeatureGraph;
use crate::quantizer::{CodecModel, ModelMetadata, StageModel, TokenSequence, TrainConfig};
use crate::rng;

/// Largest graph [`brute_force_min_se`] accepts. `B(12) = 4_213_597`.
pub const EXACT_VERTEX_CAP: usize = 12;
/// Lloyd iteration limit.
pub const KMEANS_MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub best_partition: Partition,
    pub best_se: f64,
    pub partitions_evaluated: u64,
}

/// Minimum two-level entropy over every set partition of the vertices.
///
/// Partitions are visited as restricted-growth strings in lexicographic
/// order; among equal minima the first visited wins.
pub fn brute_force_min_se(g: &FeatureGraph) -> Result<ExactResult> {
    let n = g.len();
    if n > EXACT_VERTEX_CAP {
        return Err(Error::TooLarge {
            n,
            cap: EXACT_VERTEX_CAP,
        });
    }
    let v = g.volume();
    if v <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let edges: Vec<(usize, usize, f64)> = g.edges().collect();
    let degrees = g.degrees();

    let mut labels = vec![0usize; n];
    // blocks[i] = max(labels[..i]) + 1 for i >= 1.
    let mut blocks = vec![1usize; n + 1];
    let mut volume = vec![0.0; n];
    let mut cut = vec![0.0; n];
    let mut best_labels = labels.clone();
    let mut best = f64::INFINITY;
    let mut evaluated = 0u64;

    loop {
        evaluated += 1;
        let k = blocks[n];
        volume[..k].fill(0.0);
        cut[..k].fill(0.0);
        for (i, &d) in degrees.iter().enumerate() {
            volume[labels[i]] += d;
        }
        for &(i, j, w) in &edges {
            if labels[i] != labels[j] {
                cut[labels[i]] += w;
                cut[labels[j]] += w;
            }
        }
        let mut se = 0.0;
        for (i, &d) in degrees.iter().enumerate() {
            if d > 0.0 {
                se -= d / v * (d / volume[labels[i]]).log2();
            }
        }
        for c in 0..k {
            if cut[c] > 0.0 {
                se -= cut[c] / v * (volume[c] / v).log2();
            }
        }
        if se < best {
            best = se;
            best_labels.copy_from_slice(&labels);
        }

        // Next restricted-growth string: bump the rightmost position that can
        // grow, reset everything after it.
        let mut i = n;
        loop {
            if i <= 1 {
                let best_partition = Partition::from_labels(g, &best_labels)?;
                let best_se = partition_se(g, &best_partition)?;
                return Ok(ExactResult {
                    best_partition,
                    best_se,
                    partitions_evaluated: evaluated,
                });
            }
            i -= 1;
            if labels[i] < blocks[i] {
                labels[i] += 1;
                blocks[i + 1] = blocks[i].max(labels[i] + 1);
                for j in i + 1..n {
                    labels[j] = 0;
                    blocks[j + 1] = blocks[j];
                }
                break;
            }
        }
    }
}

/// A k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub codebook: Codebook,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares after seeding and after each iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, x);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng>(x: &FeatureMatrix, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.random_range(0..x.rows())];
    let mut d2: Vec<f64> = x
        .iter_rows()
        .map(|r| squared_distance(r, x.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // Every point coincides with a centroid already.
            Err(_) => (0..x.rows())
                .find(|i| !chosen.contains(i))
                .expect("k <= rows"),
        };
        chosen.push(next);
        for (d, r) in d2.iter_mut().zip(x.iter_rows()) {
            *d = d.min(squared_distance(r, x.row(next)));
        }
    }
    chosen.into_iter().map(|i| x.row(i).to_vec()).collect()
}

/// Lloyd's algorithm from k-means++ seeding.
///
/// Stops when no assignment changes or after [`KMEANS_MAX_ITERATIONS`]. An
/// emptied cluster keeps its previous centroid.
pub fn kmeans_detailed(x: &FeatureMatrix, k: usize, seed: u64) -> Result<KMeansRun> {
    kmeans_stream(x, k, seed, rng::STREAM_KMEANS)
}

fn kmeans_stream(x: &FeatureMatrix, k: usize, seed: u64, stream: u64) -> Result<KMeansRun> {
    if k == 0 || k > x.rows() {
        return Err(Error::InvalidArgument(format!(
            "k-means needs 1 <= K <= {} rows, got K = {k}",
            x.rows()
        )));
    }
    let mut rng = rng::stream(seed, stream);
    let mut centroids = seed_plus_plus(x, k, &mut rng);
    let assign = |centroids: &[Vec<f64>]| {
        let (labels, dists): (Vec<usize>, Vec<f64>) =
            x.iter_rows().map(|r| nearest(centroids, r)).unzip();
        (labels, dists.iter().sum::<f64>())
    };
    let (mut labels, objective) = assign(&centroids);
    let mut trace = vec![objective];
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITERATIONS {
        iterations += 1;
        let mut sums = vec![vec![0.0; x.cols()]; k];
        let mut counts = vec![0usize; k];
        for (r, &l) in x.iter_rows().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(r) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let (next, objective) = assign(&centroids);
        trace.push(objective);
        let stable = next == labels;
        labels = next;
        if stable {
            break;
        }
    }
    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l] += 1;
    }
    let data = centroids.concat();
    Ok(KMeansRun {
        codebook: Codebook::new(FeatureMatrix::new(k, x.cols(), data)?, counts)?,
        labels,
        objective_trace: trace,
        iterations,
    })
}

/// k-means codebook with `k` centroids.
pub fn kmeans(x: &FeatureMatrix, k: usize, seed: u64) -> Result<Codebook> {
    Ok(kmeans_detailed(x, k, seed)?.codebook)
}

/// Residual quantizer with a k-means codebook of size `ks[s]` at stage `s`
/// and nearest-centroid assignment. Returns the model and the tokens of `x`.
pub fn euclidean_rvq(
    x: &FeatureMatrix,
    ks: &[usize],
    seed: u64,
) -> Result<(CodecModel, TokenSequence)> {
    if ks.is_empty() {
        return Err(Error::InvalidArgument(
            "stage count must be at least 1".into(),
        ));
    }
    let mut residual = x.clone();
    let mut stages = Vec::with_capacity(ks.len());
    for (s, &k) in ks.iter().enumerate() {
        let run = kmeans_stream(&residual, k, seed, rng::STREAM_KMEANS + s as u64)?;
        for (t, &l) in run.labels.iter().enumerate() {
            let c = run.codebook.centroid(l).to_vec();
            for (r, v) in residual.row_mut(t).iter_mut().zip(c) {
                *r -= v;
            }
        }
        stages.push(StageModel::euclidean(run.codebook));
    }
    let metadata = ModelMetadata {
        config: TrainConfig {
            stages: ks.len(),
            seed,
            ..TrainConfig::default()
        },
        training_rows: x.rows(),
        stages_trained: ks.len(),
        early_stop: None,
    };
    let model = CodecModel::new(x.cols(), stages, metadata)?;
    let tokens = model.encode(x)?;
    Ok((model, tokens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::two_disjoint_edges;

    #[test]
    fn two_edges_exact() {
        let r = brute_force_min_se(&two_disjoint_edges()).unwrap();
        assert_eq!(r.partitions_evaluated, 15);
        assert!((r.best_se - 1.0).abs() < 1e-12);
        assert_eq!(
            r.best_partition.canonical_sets(),
            vec![vec![0, 1], vec![2, 3]]
        );
    }

    #[test]
    fn single_edge_exact() {
        let g = FeatureGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let r = brute_force_min_se(&g).unwrap();
        assert_eq!(r.partitions_evaluated, 2);
        assert!((r.best_se - 1.0).abs() < 1e-12);
    }

    #[test]
    fn edgeless_and_oversized_graphs_fail() {
        let g = FeatureGraph::from_edges(3, &[]).unwrap();
        assert!(matches!(brute_force_min_se(&g), Err(Error::EmptyGraph)));
        let g = FeatureGraph::from_edges(13, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            brute_force_min_se(&g),
            Err(Error::TooLarge { n: 13, cap: 12 })
        ));
    }

    #[test]
    fn kmeans_k_equals_rows() {
        let x = FeatureMatrix::from_rows(&[[0.0, 1.0], [3.0, -1.0], [2.0, 2.0]]).unwrap();
        let cb = kmeans(&x, 3, 7).unwrap();
        let mut rows = cb.centroids.to_rows();
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(rows, vec![vec![0.0, 1.0], vec![2.0, 2.0], vec![3.0, -1.0]]);
        assert!(kmeans(&x, 4, 0).is_err());
        assert!(kmeans(&x, 0, 0).is_err());
    }

    #[test]
    fn single_stage_single_codeword_is_the_mean() {
        let x = FeatureMatrix::from_rows(&[[1.0, 2.0], [3.0, 6.0]]).unwrap();
        let (model, tokens) = euclidean_rvq(&x, &[1], 0).unwrap();
        let r = model.decode(&tokens).unwrap();
        assert_eq!(r.to_rows(), vec![vec![2.0, 4.0], vec![2.0, 4.0]]);
    }
}
