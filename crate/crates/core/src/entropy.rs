//! Structural entropy of weighted graphs under encoding trees and partitions.
//!
//! All logarithms are base 2 and `0 * log 0` is taken as 0, so zero-degree
//! vertices and zero-cut clusters contribute nothing.
//!
//! For a partition `P` of `G` the two-level entropy is
//!
//! ```text
//! H(G; P) = - sum_X sum_{i in X} d_i / V_G * log2(d_i / V_X)
//!           - sum_X g_X / V_G * log2(V_X / V_G)
//! ```
//!
//! with `d_i` the vertex degree, `V_X` the cluster volume and `g_X` the
//! weight of edges leaving `X`. Merging two clusters leaves every `d_i log d_i`
//! term unchanged, which is what makes the incremental deltas below cheap.

use crate::error::{Error, Result};
use crate::graph::{FeatureGraph, QueryAttachment};

#[inline]
pub(crate) fn xlog2(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// `weight * log2(part / whole)`, zero when `weight` is zero.
#[inline]
fn weighted_log_ratio(weight: f64, part: f64, whole: f64) -> f64 {
    if weight > 0.0 && part > 0.0 {
        weight * (part / whole).log2()
    } else {
        0.0
    }
}

/// Entropy decrease from merging clusters `a` and `b` in a graph of volume
/// `volume`, given their volumes, cuts and the weight between them.
#[inline]
pub(crate) fn merge_gain(volume: f64, va: f64, ga: f64, vb: f64, gb: f64, wab: f64) -> f64 {
    let vc = va + vb;
    let gc = (ga + gb - 2.0 * wab).max(0.0);
    (xlog2(va) + xlog2(vb)
        - xlog2(vc)
        - weighted_log_ratio(ga, va, volume)
        - weighted_log_ratio(gb, vb, volume)
        + weighted_log_ratio(gc, vc, volume))
        / volume
}

/// Disjoint clusters covering every vertex of a graph, with cached volumes
/// and cuts.
///
/// Cluster ids are positions in [`Partition::clusters`]; members are kept in
/// ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assign: Vec<usize>,
    clusters: Vec<Vec<usize>>,
    volume: Vec<f64>,
    cut: Vec<f64>,
}

impl Partition {
    /// One cluster per vertex, cluster `i` holding vertex `i`.
    pub fn singletons(g: &FeatureGraph) -> Self {
        Self::build(g, (0..g.len()).map(|v| vec![v]).collect())
    }

    pub fn single_cluster(g: &FeatureGraph) -> Self {
        Self::build(g, vec![(0..g.len()).collect()])
    }

    /// Partition with the given clusters, in the given order.
    pub fn from_clusters(g: &FeatureGraph, clusters: Vec<Vec<usize>>) -> Result<Self> {
        let n = g.len();
        let mut seen = vec![false; n];
        for (k, c) in clusters.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::InvalidPartition(format!("cluster {k} is empty")));
            }
            for &v in c {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidPartition(format!(
                        "vertex {v} appears more than once"
                    )));
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("vertex {v} is unassigned")));
        }
        let clusters = clusters
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        Ok(Self::build(g, clusters))
    }

    /// Partition from per-vertex labels in `0..k`, where every label is used.
    pub fn from_labels(g: &FeatureGraph, labels: &[usize]) -> Result<Self> {
        if labels.len() != g.len() {
            return Err(Error::InvalidPartition(format!(
                "{} labels for {} vertices",
                labels.len(),
                g.len()
            )));
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut clusters = vec![Vec::new(); k];
        for (v, &l) in labels.iter().enumerate() {
            clusters[l].push(v);
        }
        Self::from_clusters(g, clusters)
    }

    fn build(g: &FeatureGraph, clusters: Vec<Vec<usize>>) -> Self {
        let mut assign = vec![0; g.len()];
        for (k, c) in clusters.iter().enumerate() {
            for &v in c {
                assign[v] = k;
            }
        }
        let (volume, cut) = clusters
            .iter()
            .enumerate()
            .map(|(k, c)| cluster_volume_and_cut(g, &assign, k, c))
            .unzip();
        Self {
            assign,
            clusters,
            volume,
            cut,
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.assign.len()
    }

    /// Cluster id of each vertex.
    pub fn labels(&self) -> &[usize] {
        &self.assign
    }

    pub fn cluster_of(&self, v: usize) -> usize {
        self.assign[v]
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn members(&self, k: usize) -> &[usize] {
        &self.clusters[k]
    }

    pub fn volume(&self, k: usize) -> f64 {
        self.volume[k]
    }

    pub fn cut(&self, k: usize) -> f64 {
        self.cut[k]
    }

    fn check_cluster(&self, k: usize) -> Result<()> {
        if k < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownCluster {
                cluster: k,
                len: self.len(),
            })
        }
    }

    /// Total weight of edges between clusters `a` and `b`.
    pub fn weight_between(&self, g: &FeatureGraph, a: usize, b: usize) -> f64 {
        let (small, other) = if self.clusters[a].len() <= self.clusters[b].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.clusters[small]
            .iter()
            .flat_map(|&v| g.neighbors(v))
            .filter(|&&(u, _)| self.assign[u] == other)
            .map(|&(_, w)| w)
            .sum()
    }

    /// Copy with clusters `a` and `b` merged into the lower of the two ids;
    /// clusters after the higher id shift down by one.
    pub fn merged(&self, g: &FeatureGraph, a: usize, b: usize) -> Result<Partition> {
        self.check_cluster(a)?;
        self.check_cluster(b)?;
        if a == b {
            return Err(Error::InvalidArgument(format!(
                "cannot merge cluster {a} with itself"
            )));
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let mut clusters = self.clusters.clone();
        let moved = clusters.remove(hi);
        clusters[lo].extend(moved);
        clusters[lo].sort_unstable();
        Ok(Self::build(g, clusters))
    }

    /// Clusters as sorted vertex sets, ordered by smallest member.
    pub fn canonical_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = self.clusters.clone();
        sets.sort_by_key(|c| c[0]);
        sets
    }

    /// True when cached volumes and cuts match recomputation from `g`.
    pub fn caches_consistent(&self, g: &FeatureGraph, rel_tol: f64) -> bool {
        self.clusters.iter().enumerate().all(|(k, c)| {
            let (v, cut) = cluster_volume_and_cut(g, &self.assign, k, c);
            let ok = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(1.0);
            ok(v, self.volume[k]) && ok(cut, self.cut[k])
        })
    }
}

fn cluster_volume_and_cut(
    g: &FeatureGraph,
    assign: &[usize],
    k: usize,
    members: &[usize],
) -> (f64, f64) {
    let mut volume = 0.0;
    let mut cut = 0.0;
    for &v in members {
        volume += g.degree(v);
        for &(u, w) in g.neighbors(v) {
            if assign[u] != k {
                cut += w;
            }
        }
    }
    (volume, cut)
}

fn positive_volume(g: &FeatureGraph) -> Result<f64> {
    let v = g.volume();
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::EmptyGraph)
    }
}

/// Entropy of the stationary random walk: `-sum_i d_i/V log2(d_i/V)`.
pub fn one_dim_entropy(g: &FeatureGraph) -> Result<f64> {
    let v = positive_volume(g)?;
    Ok(-g
        .degrees()
        .iter()
        .map(|&d| weighted_log_ratio(d, d, v))
        .sum::<f64>()
        / v)
}

/// Two-level structural entropy of `g` under `p`.
pub fn partition_se(g: &FeatureGraph, p: &Partition) -> Result<f64> {
    let v = positive_volume(g)?;
    if p.vertex_count() != g.len() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} vertices, graph has {}",
            p.vertex_count(),
            g.len()
        )));
    }
    let mut leaves = 0.0;
    let mut modules = 0.0;
    for (k, members) in p.clusters().iter().enumerate() {
        let vx = p.volume(k);
        for &i in members {
            let d = g.degree(i);
            if d > 0.0 {
                if vx <= 0.0 {
                    return Err(Error::Invariant(format!(
                        "cluster {k} has zero volume but contains vertex {i} of degree {d}"
                    )));
                }
                leaves -= d / v * (d / vx).log2();
            }
        }
        modules -= weighted_log_ratio(p.cut(k), vx, v) / v;
    }
    Ok(leaves + modules)
}

/// Decrease in [`partition_se`] from merging clusters `a` and `b`.
///
/// Positive values mean the merge lowers the entropy.
pub fn merge_delta(g: &FeatureGraph, p: &Partition, a: usize, b: usize) -> Result<f64> {
    p.check_cluster(a)?;
    p.check_cluster(b)?;
    if a == b {
        return Err(Error::InvalidArgument(format!(
            "cannot merge cluster {a} with itself"
        )));
    }
    let v = positive_volume(g)?;
    let wab = p.weight_between(g, a, b);
    Ok(merge_gain(
        v,
        p.volume(a),
        p.cut(a),
        p.volume(b),
        p.cut(b),
        wab,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub vertices: Vec<usize>,
}

/// Rooted tree whose nodes carry vertex sets; node 0 is the root and carries
/// every vertex, leaves carry single vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingTree {
    nodes: Vec<TreeNode>,
}

impl EncodingTree {
    /// Validates `nodes` as an encoding tree over `n` vertices.
    pub fn from_nodes(n: usize, nodes: Vec<TreeNode>) -> Result<Self> {
        let t = Self { nodes };
        t.validate(n)?;
        Ok(t)
    }

    /// Root with one leaf per vertex.
    pub fn flat(n: usize) -> Self {
        let mut nodes = vec![TreeNode {
            parent: None,
            children: (1..=n).collect(),
            vertices: (0..n).collect(),
        }];
        nodes.extend((0..n).map(|v| TreeNode {
            parent: Some(0),
            children: vec![],
            vertices: vec![v],
        }));
        Self { nodes }
    }

    /// Height-two tree: root, one node per cluster, one leaf per vertex.
    pub fn from_partition(p: &Partition) -> Self {
        let mut nodes = vec![TreeNode {
            parent: None,
            children: vec![],
            vertices: (0..p.vertex_count()).collect(),
        }];
        for members in p.clusters() {
            let id = nodes.len();
            nodes[0].children.push(id);
            nodes.push(TreeNode {
                parent: Some(0),
                children: vec![],
                vertices: members.clone(),
            });
            for &v in members {
                let leaf = nodes.len();
                nodes[id].children.push(leaf);
                nodes.push(TreeNode {
                    parent: Some(id),
                    children: vec![],
                    vertices: vec![v],
                });
            }
        }
        Self { nodes }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTree(m));
        let Some(root) = self.nodes.first() else {
            return bad("tree has no nodes".into());
        };
        if root.parent.is_some() {
            return bad("root has a parent".into());
        }
        let mut root_set = root.vertices.clone();
        root_set.sort_unstable();
        if root_set != (0..n).collect::<Vec<_>>() {
            return bad("root does not carry exactly the vertex set".into());
        }
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(a) = stack.pop() {
            let node = &self.nodes[a];
            if node.children.is_empty() {
                if node.vertices.len() != 1 {
                    return bad(format!("leaf {a} carries {} vertices", node.vertices.len()));
                }
                continue;
            }
            let mut union = Vec::with_capacity(node.vertices.len());
            for &c in &node.children {
                if c >= self.nodes.len() || self.nodes[c].parent != Some(a) {
                    return bad(format!(
                        "child {c} of node {a} has a mismatched parent link"
                    ));
                }
                if std::mem::replace(&mut visited[c], true) {
                    return bad(format!("node {c} reached twice"));
                }
                union.extend_from_slice(&self.nodes[c].vertices);
                stack.push(c);
            }
            union.sort_unstable();
            let before = union.len();
            union.dedup();
            if union.len() != before {
                return bad(format!("children of node {a} overlap"));
            }
            let mut own = node.vertices.clone();
            own.sort_unstable();
            if union != own {
                return bad(format!("children of node {a} do not cover its vertex set"));
            }
        }
        if let Some(a) = visited.iter().position(|v| !v) {
            return bad(format!("node {a} is unreachable from the root"));
        }
        Ok(())
    }
}

/// Structural entropy of `g` under an arbitrary encoding tree.
pub fn encoding_tree_se(g: &FeatureGraph, t: &EncodingTree) -> Result<f64> {
    t.validate(g.len())?;
    let v = positive_volume(g)?;
    let mut inside = vec![false; g.len()];
    let stats: Vec<(f64, f64)> = t
        .nodes()
        .iter()
        .map(|node| {
            for &x in &node.vertices {
                inside[x] = true;
            }
            let mut vol = 0.0;
            let mut cut = 0.0;
            for &x in &node.vertices {
                vol += g.degree(x);
                for &(u, w) in g.neighbors(x) {
                    if !inside[u] {
                        cut += w;
                    }
                }
            }
            for &x in &node.vertices {
                inside[x] = false;
            }
            (vol, cut)
        })
        .collect();
    Ok(t.nodes()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(a, node)| {
            let (vol, cut) = stats[a];
            let parent_vol = stats[node.parent.expect("validated")].0;
            -weighted_log_ratio(cut, vol, parent_vol) / v
        })
        .sum())
}

/// Entropy change when a query vertex joins a cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SEDelta {
    pub cluster: usize,
    /// Decrease in entropy relative to leaving the query in its own cluster.
    pub delta: f64,
    /// Entropy of the graph after the join.
    pub resulting_se: f64,
}

/// Quantities shared by every candidate join of one query.
///
/// The extended graph adds the query `x` and its edges to the anchor graph.
/// The baseline partition keeps `x` in a cluster of its own; a join moves it
/// into an existing cluster.
#[derive(Debug, Clone)]
pub struct JoinContext {
    volume: f64,
    query_degree: f64,
    into_cluster: Vec<f64>,
    baseline: f64,
}

impl JoinContext {
    pub fn new(g: &FeatureGraph, p: &Partition, q: &QueryAttachment) -> Result<Self> {
        if p.vertex_count() != g.len() {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} vertices, graph has {}",
                p.vertex_count(),
                g.len()
            )));
        }
        let mut into_cluster = vec![0.0; p.len()];
        let mut extra_degree = vec![0.0; g.len()];
        for &(a, w) in &q.incident {
            if a >= g.len() {
                return Err(Error::VertexOutOfRange {
                    vertex: a,
                    n: g.len(),
                });
            }
            into_cluster[p.cluster_of(a)] += w;
            extra_degree[a] += w;
        }
        let dx = q.degree;
        let volume = g.volume() + 2.0 * dx;
        let baseline = if volume > 0.0 {
            let vertex_terms: f64 = g
                .degrees()
                .iter()
                .zip(&extra_degree)
                .map(|(&d, &e)| xlog2(d + e))
                .sum();
            let mut cluster_terms = 0.0;
            let mut module_terms = 0.0;
            for (k, &w) in into_cluster.iter().enumerate() {
                let vk = p.volume(k) + w;
                cluster_terms += xlog2(vk);
                module_terms += weighted_log_ratio(p.cut(k) + w, vk, volume);
            }
            module_terms += weighted_log_ratio(dx, dx, volume);
            (cluster_terms - vertex_terms - module_terms) / volume
        } else {
            0.0
        };
        Ok(Self {
            volume,
            query_degree: dx,
            into_cluster,
            baseline,
        })
    }

    /// Entropy of the extended graph with the query alone in its cluster.
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn query_degree(&self) -> f64 {
        self.query_degree
    }

    /// Edge weight from the query into cluster `k`.
    pub fn weight_into(&self, k: usize) -> f64 {
        self.into_cluster[k]
    }

    /// Clusters holding at least one anchor adjacent to the query, ascending.
    pub fn candidates(&self) -> impl Iterator<Item = usize> + '_ {
        self.into_cluster
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, _)| k)
    }

    /// Entropy decrease from joining cluster `k`, for any `k`.
    pub fn join_gain(&self, p: &Partition, k: usize) -> f64 {
        if self.query_degree <= 0.0 {
            return 0.0;
        }
        let w = self.into_cluster[k];
        let dx = self.query_degree;
        merge_gain(self.volume, p.volume(k) + w, p.cut(k) + w, dx, dx, w)
    }

    /// The four-term closed form for the join change, evaluated on the
    /// extended graph with `e` the cluster before the join and `e'` after it:
    ///
    /// ```text
    /// -g_e/V log(V_e/V) + g_e'/V log(V_e'/V) - g_e'/V log(V_e'/V_e) - d_x/V log(V/V_e)
    /// ```
    ///
    /// Kept for diagnostics; [`JoinContext::join_gain`] is what quantization uses.
    pub fn closed_form_gain(&self, p: &Partition, k: usize) -> f64 {
        if self.query_degree <= 0.0 {
            return 0.0;
        }
        let v = self.volume;
        let w = self.into_cluster[k];
        let dx = self.query_degree;
        let ve = p.volume(k) + w;
        let ge = p.cut(k) + w;
        let vj = ve + dx;
        let gj = (p.cut(k) + dx - w).max(0.0);
        let lg = |num: f64, den: f64| {
            if num > 0.0 && den > 0.0 {
                (num / den).log2()
            } else {
                0.0
            }
        };
        (-ge * lg(ve, v) + gj * lg(vj, v) - gj * lg(vj, ve) - dx * lg(v, ve)) / v
    }
}

/// Entropy change when query `q` joins cluster `k` of the anchor partition.
///
/// An isolated query has no effect on any cluster and gets a zero delta.
/// Otherwise `k` must hold at least one anchor adjacent to the query.
pub fn assign_delta(
    g: &FeatureGraph,
    p: &Partition,
    q: &QueryAttachment,
    k: usize,
) -> Result<SEDelta> {
    p.check_cluster(k)?;
    let ctx = JoinContext::new(g, p, q)?;
    if ctx.query_degree() > 0.0 && ctx.weight_into(k) <= 0.0 {
        return Err(Error::NoIncidentEdge { cluster: k });
    }
    let delta = ctx.join_gain(p, k);
    Ok(SEDelta {
        cluster: k,
        delta,
        resulting_se: ctx.baseline() - delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_edges() -> FeatureGraph {
        FeatureGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap()
    }

    #[test]
    fn one_dim_examples() {
        assert_eq!(one_dim_entropy(&two_edges()).unwrap(), 2.0);
        let g = FeatureGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(one_dim_entropy(&g).unwrap(), 1.0);
        let ring = FeatureGraph::from_edges(
            5,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 3, 1.0),
                (3, 4, 1.0),
                (4, 0, 1.0),
            ],
        )
        .unwrap();
        assert!((one_dim_entropy(&ring).unwrap() - 5f64.log2()).abs() < 1e-12);
        let empty = FeatureGraph::from_edges(3, &[]).unwrap();
        assert!(matches!(one_dim_entropy(&empty), Err(Error::EmptyGraph)));
    }

    #[test]
    fn partition_examples() {
        let g = two_edges();
        let pairs = Partition::from_clusters(&g, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(partition_se(&g, &pairs).unwrap(), 1.0);
        assert_eq!(partition_se(&g, &Partition::singletons(&g)).unwrap(), 2.0);
        assert_eq!(
            partition_se(&g, &Partition::single_cluster(&g)).unwrap(),
            2.0
        );
    }

    #[test]
    fn tree_examples() {
        let g = two_edges();
        let p = Partition::from_clusters(&g, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(
            encoding_tree_se(&g, &EncodingTree::from_partition(&p)).unwrap(),
            1.0
        );
        assert_eq!(encoding_tree_se(&g, &EncodingTree::flat(4)).unwrap(), 2.0);
        let star = EncodingTree::from_partition(&Partition::single_cluster(&g));
        assert_eq!(
            encoding_tree_se(&g, &star).unwrap(),
            partition_se(&g, &Partition::single_cluster(&g)).unwrap()
        );
    }

    #[test]
    fn malformed_trees_rejected() {
        let leaf = |p, v| TreeNode {
            parent: Some(p),
            children: vec![],
            vertices: vec![v],
        };
        let overlapping = vec![
            TreeNode {
                parent: None,
                children: vec![1, 2],
                vertices: vec![0, 1],
            },
            leaf(0, 0),
            leaf(0, 0),
        ];
        assert!(EncodingTree::from_nodes(2, overlapping).is_err());
        let wide_leaf = vec![TreeNode {
            parent: None,
            children: vec![],
            vertices: vec![0, 1],
        }];
        assert!(EncodingTree::from_nodes(2, wide_leaf).is_err());
        let wrong_parent = vec![
            TreeNode {
                parent: None,
                children: vec![1],
                vertices: vec![0],
            },
            leaf(1, 0),
        ];
        assert!(EncodingTree::from_nodes(1, wrong_parent).is_err());
    }

    #[test]
    fn merge_delta_examples() {
        let g = two_edges();
        let p = Partition::singletons(&g);
        assert_eq!(merge_delta(&g, &p, 0, 1).unwrap(), 0.5);
        assert!(merge_delta(&g, &p, 0, 0).is_err());
        assert!(matches!(
            merge_delta(&g, &p, 0, 9),
            Err(Error::UnknownCluster { cluster: 9, len: 4 })
        ));
    }

    #[test]
    fn partition_validation() {
        let g = two_edges();
        assert!(Partition::from_clusters(&g, vec![vec![0, 1], vec![2]]).is_err());
        assert!(Partition::from_clusters(&g, vec![vec![0, 1], vec![1, 2, 3]]).is_err());
        assert!(Partition::from_clusters(&g, vec![vec![0, 1, 2, 3], vec![]]).is_err());
        assert!(Partition::from_labels(&g, &[0, 0, 2, 2]).is_err());
        let p = Partition::from_labels(&g, &[1, 1, 0, 0]).unwrap();
        assert_eq!(p.members(0), &[2, 3]);
        assert!(p.caches_consistent(&g, 1e-12));
    }

    #[test]
    fn isolated_query_has_zero_delta() {
        let g = two_edges();
        let p = Partition::from_clusters(&g, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let q = QueryAttachment {
            incident: vec![],
            degree: 0.0,
        };
        for k in 0..2 {
            let d = assign_delta(&g, &p, &q, k).unwrap();
            assert_eq!(d.delta, 0.0);
        }
    }

    #[test]
    fn unconnected_forced_cluster_is_an_error() {
        let g = two_edges();
        let p = Partition::from_clusters(&g, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let q = QueryAttachment {
            incident: vec![(0, 1.0)],
            degree: 1.0,
        };
        assert!(matches!(
            assign_delta(&g, &p, &q, 1),
            Err(Error::NoIncidentEdge { cluster: 1 })
        ));
    }
}
