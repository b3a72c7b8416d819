//! Cosine-similarity feature graphs.
//!
//! Vertices are feature rows. An undirected edge joins two distinct rows whose
//! cosine similarity is at least the threshold `tau` and strictly positive;
//! its weight is that similarity. Adjacency lists are kept sorted by neighbor
//! index so every traversal happens in a fixed order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{dot, norm, FeatureMatrix};

/// Default edge threshold.
pub const DEFAULT_TAU: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    volume: f64,
    threshold: f64,
}

impl FeatureGraph {
    fn from_adjacency(adjacency: Vec<Vec<(usize, f64)>>, threshold: f64) -> Self {
        let degree: Vec<f64> = adjacency
            .iter()
            .map(|adj| adj.iter().map(|&(_, w)| w).sum())
            .collect();
        let volume = degree.iter().sum();
        Self {
            adjacency,
            degree,
            volume,
            threshold,
        }
    }

    /// Graph from an explicit undirected edge list.
    ///
    /// Each pair may appear once (in either orientation); weights must be
    /// positive and finite. The recorded threshold is the smallest weight,
    /// or zero for an edgeless graph.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            for v in [i, j] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self-loop on vertex {i}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i},{j}) has non-positive or non-finite weight {w}"
                )));
            }
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for (v, adj) in adjacency.iter_mut().enumerate() {
            adj.sort_by_key(|&(u, _)| u);
            if adj.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge at vertex {v}"
                )));
            }
        }
        let threshold = edges.iter().map(|e| e.2).fold(f64::INFINITY, f64::min);
        let threshold = if threshold.is_finite() {
            threshold
        } else {
            0.0
        };
        Ok(Self::from_adjacency(adjacency, threshold))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> f64 {
        self.degree[v]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degree
    }

    /// Sum of all vertex degrees.
    #[inline]
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Weight of edge `(i, j)`, if present.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let adj = &self.adjacency[i];
        adj.binary_search_by_key(&j, |&(u, _)| u)
            .ok()
            .map(|k| adj[k].1)
    }

    /// Each undirected edge once, as `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, adj)| {
            adj.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// True when the cached degrees and volume match a fresh summation.
    pub fn caches_consistent(&self, rel_tol: f64) -> bool {
        let mut total = 0.0;
        for (v, adj) in self.adjacency.iter().enumerate() {
            let d: f64 = adj.iter().map(|&(_, w)| w).sum();
            if !close(d, self.degree[v], rel_tol) {
                return false;
            }
            total += d;
        }
        close(total, self.volume, rel_tol)
    }

    /// Subgraph induced by `vertices`.
    ///
    /// Vertices are sorted and deduplicated; local vertex `k` of the result is
    /// the `k`-th smallest requested id. Degrees count only retained edges.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<FeatureGraph> {
        let n = self.len();
        let mut ids = vertices.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if let Some(&v) = ids.iter().find(|&&v| v >= n) {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
        let mut local = vec![usize::MAX; n];
        for (k, &v) in ids.iter().enumerate() {
            local[v] = k;
        }
        let adjacency = ids
            .iter()
            .map(|&v| {
                self.adjacency[v]
                    .iter()
                    .filter(|&&(u, _)| local[u] != usize::MAX)
                    .map(|&(u, w)| (local[u], w))
                    .collect()
            })
            .collect();
        Ok(Self::from_adjacency(adjacency, self.threshold))
    }
}

fn close(a: f64, b: f64, rel_tol: f64) -> bool {
    (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(1.0)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "similarity threshold must be finite and below 1, got {tau}"
        )))
    }
}

#[inline]
fn keep(sim: f64, tau: f64) -> bool {
    sim >= tau && sim > 0.0
}

fn row_norms(x: &FeatureMatrix) -> Result<Vec<f64>> {
    x.iter_rows()
        .enumerate()
        .map(|(row, r)| {
            let n = norm(r);
            if n > 0.0 {
                Ok(n)
            } else {
                Err(Error::ZeroNorm { row })
            }
        })
        .collect()
}

/// Builds the thresholded cosine-similarity graph over the rows of `x`.
pub fn build_graph(x: &FeatureMatrix, tau: f64) -> Result<FeatureGraph> {
    check_tau(tau)?;
    let norms = row_norms(x)?;
    let n = x.rows();

    let upper: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            ((i + 1)..n)
                .filter_map(|j| {
                    let sim = (dot(xi, x.row(j)) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
                    keep(sim, tau).then_some((j, sim))
                })
                .collect()
        })
        .collect();

    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in upper.into_iter().enumerate() {
        for &(j, w) in &row {
            adjacency[j].push((i, w));
        }
        adjacency[i].extend(row);
    }
    Ok(FeatureGraph::from_adjacency(adjacency, tau))
}

/// A query vector attached to an anchor set as an extra vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryAttachment {
    /// `(anchor index, weight)` in ascending anchor order.
    pub incident: Vec<(usize, f64)>,
    pub degree: f64,
}

impl QueryAttachment {
    pub fn is_isolated(&self) -> bool {
        self.incident.is_empty()
    }
}

/// Anchor vectors with precomputed norms, for repeated query attachment.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    vectors: FeatureMatrix,
    norms: Vec<f64>,
}

impl AnchorSet {
    pub fn new(vectors: FeatureMatrix) -> Result<Self> {
        let norms = row_norms(&vectors)?;
        Ok(Self { vectors, norms })
    }

    pub fn vectors(&self) -> &FeatureMatrix {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Edges from `x` to every anchor with similarity at least `tau`.
    ///
    /// Uses the same arithmetic as [`build_graph`] with the anchors placed
    /// before the query, so the weights agree bit for bit.
    pub fn attach(&self, x: &[f64], tau: f64) -> Result<QueryAttachment> {
        check_tau(tau)?;
        if x.len() != self.vectors.cols() {
            return Err(Error::Dimension {
                expected: self.vectors.cols(),
                found: x.len(),
            });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, col });
        }
        let nx = norm(x);
        if nx == 0.0 {
            return Err(Error::ZeroNorm { row: 0 });
        }
        let incident: Vec<(usize, f64)> = self
            .vectors
            .iter_rows()
            .zip(&self.norms)
            .enumerate()
            .filter_map(|(a, (row, &na))| {
                let sim = (dot(row, x) / (na * nx)).clamp(-1.0, 1.0);
                keep(sim, tau).then_some((a, sim))
            })
            .collect();
        let degree = incident.iter().map(|&(_, w)| w).sum();
        Ok(QueryAttachment { incident, degree })
    }
}

/// Attaches `x` to `anchors` without building a reusable [`AnchorSet`].
pub fn attach_query(anchors: &FeatureMatrix, x: &[f64], tau: f64) -> Result<QueryAttachment> {
    AnchorSet::new(anchors.clone())?.attach(x, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn orthogonal_rows_stay_isolated() {
        let g = build_graph(&m(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]), 0.2).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);
        assert_eq!(g.degree(2), 0.0);
    }

    #[test]
    fn unit_edge_has_volume_two() {
        let g = build_graph(&m(&[&[1.0, 0.0], &[1.0, 0.0]]), 0.2).unwrap();
        assert_eq!(g.volume(), 2.0);
    }

    #[test]
    fn negative_similarity_never_links() {
        let g = build_graph(&m(&[&[1.0, 0.0], &[-1.0, 0.1]]), -1.0).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn zero_row_is_reported() {
        match build_graph(&m(&[&[1.0, 0.0], &[0.0, 0.0]]), 0.2) {
            Err(Error::ZeroNorm { row: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_threshold_rejected() {
        assert!(build_graph(&m(&[&[1.0]]), 1.0).is_err());
        assert!(build_graph(&m(&[&[1.0]]), f64::NAN).is_err());
    }

    #[test]
    fn attach_examples() {
        let anchors = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let q = attach_query(&anchors, &[1.0, 0.0], 0.2).unwrap();
        assert_eq!(q.incident, vec![(0, 1.0)]);
        assert_eq!(q.degree, 1.0);

        let anchors = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let q = attach_query(&anchors, &[0.0, 0.0, 2.0], 0.2).unwrap();
        assert!(q.is_isolated());
        assert_eq!(q.degree, 0.0);

        assert!(matches!(
            attach_query(&anchors, &[0.0, 0.0, 0.0], 0.2),
            Err(Error::ZeroNorm { .. })
        ));
        assert!(matches!(
            attach_query(&anchors, &[1.0, 0.0], 0.2),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn subgraph_identity_and_single_vertex() {
        let x = m(&[&[1.0, 0.1], &[0.9, 0.3], &[0.2, 1.0], &[0.5, 0.5]]);
        let g = build_graph(&x, 0.0).unwrap();
        assert_eq!(g.induced_subgraph(&[3, 2, 1, 0]).unwrap(), g);
        let one = g.induced_subgraph(&[2]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.volume(), 0.0);
        assert!(matches!(
            g.induced_subgraph(&[4]),
            Err(Error::VertexOutOfRange { vertex: 4, n: 4 })
        ));
    }

    #[test]
    fn from_edges_validates() {
        assert!(FeatureGraph::from_edges(2, &[(0, 0, 1.0)]).is_err());
        assert!(FeatureGraph::from_edges(2, &[(0, 1, 0.0)]).is_err());
        assert!(FeatureGraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).is_err());
        let g = FeatureGraph::from_edges(3, &[(2, 0, 0.5), (0, 1, 1.0)]).unwrap();
        assert_eq!(g.neighbors(0), &[(1, 1.0), (2, 0.5)]);
        assert_eq!(g.threshold(), 0.5);
        assert!(g.caches_consistent(1e-12));
    }
}
