//! Greedy two-level structural entropy minimization.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;

use crate::entropy::{merge_gain, partition_se, Partition};
use crate::error::{Error, Result};
use crate::graph::FeatureGraph;

/// Merges must lower the entropy by more than this to be accepted.
pub const MERGE_EPSILON: f64 = 1e-12;

/// Default number of clusters considered together by [`hierarchical_minimize`].
pub const DEFAULT_SUBSET_SIZE: usize = 1024;

/// Result of a greedy run: the final partition and the entropy after each
/// accepted merge, starting with the entropy of the initial partition.
#[derive(Debug, Clone)]
pub struct GreedyRun {
    pub partition: Partition,
    pub se_trace: Vec<f64>,
}

impl GreedyRun {
    pub fn merges(&self) -> usize {
        self.se_trace.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    a: usize,
    b: usize,
    version_a: u32,
    version_b: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Max-heap: larger gain first, then the lexicographically smaller pair.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

/// Greedy minimization from singletons.
///
/// Repeatedly merges the edge-connected cluster pair whose merge lowers the
/// entropy the most, ties going to the lexicographically smallest pair of
/// cluster ids, until no merge lowers it by more than [`MERGE_EPSILON`].
pub fn vanilla_greedy(g: &FeatureGraph) -> Result<Partition> {
    if g.volume() <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    Ok(vanilla_greedy_from(g, &Partition::singletons(g))?.partition)
}

/// Greedy minimization starting from an arbitrary partition.
///
/// Cluster ids used for tie-breaking follow the order of smallest member
/// vertex, and a merged cluster keeps the smaller id. A graph without edges
/// is returned unchanged.
pub fn vanilla_greedy_from(g: &FeatureGraph, init: &Partition) -> Result<GreedyRun> {
    let volume = g.volume();
    let sets = init.canonical_sets();
    if volume <= 0.0 {
        return Ok(GreedyRun {
            partition: Partition::from_clusters(g, sets)?,
            se_trace: vec![],
        });
    }
    let start = Partition::from_clusters(g, sets)?;
    let mut se = partition_se(g, &start)?;
    let mut se_trace = vec![se];

    let k = start.len();
    let mut members: Vec<Vec<usize>> = start.clusters().to_vec();
    let mut vol: Vec<f64> = (0..k).map(|c| start.volume(c)).collect();
    let mut cut: Vec<f64> = (0..k).map(|c| start.cut(c)).collect();
    let mut alive = vec![true; k];
    let mut version = vec![0u32; k];
    let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
    let labels = start.labels();
    for (u, &cu) in labels.iter().enumerate() {
        for &(v, w) in g.neighbors(u) {
            let cv = labels[v];
            if cv != cu {
                *links[cu].entry(cv).or_insert(0.0) += w;
            }
        }
    }

    let candidate = |a: usize, b: usize, w: f64, vol: &[f64], cut: &[f64], version: &[u32]| {
        let (a, b) = (a.min(b), a.max(b));
        Candidate {
            gain: merge_gain(volume, vol[a], cut[a], vol[b], cut[b], w),
            a,
            b,
            version_a: version[a],
            version_b: version[b],
        }
    };

    let mut heap = BinaryHeap::new();
    for (a, adj) in links.iter().enumerate() {
        for (&b, &w) in adj.range(a + 1..) {
            let c = candidate(a, b, w, &vol, &cut, &version);
            if c.gain > MERGE_EPSILON {
                heap.push(c);
            }
        }
    }

    while let Some(c) = heap.pop() {
        let (a, b) = (c.a, c.b);
        if !(alive[a] && alive[b] && version[a] == c.version_a && version[b] == c.version_b) {
            continue;
        }
        let wab = links[a][&b];
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        vol[a] += vol[b];
        cut[a] = (cut[a] + cut[b] - 2.0 * wab).max(0.0);
        alive[b] = false;
        version[a] += 1;

        let b_links = std::mem::take(&mut links[b]);
        links[a].remove(&b);
        for (x, w) in b_links {
            if x == a {
                continue;
            }
            links[x].remove(&b);
            *links[a].entry(x).or_insert(0.0) += w;
            *links[x].entry(a).or_insert(0.0) += w;
        }

        se -= c.gain;
        se_trace.push(se);

        for (&x, &w) in &links[a] {
            let next = candidate(a, x, w, &vol, &cut, &version);
            if next.gain > MERGE_EPSILON {
                heap.push(next);
            }
        }
    }

    let clusters = members
        .into_iter()
        .zip(alive)
        .filter_map(|(m, alive)| alive.then_some(m))
        .collect();
    Ok(GreedyRun {
        partition: Partition::from_clusters(g, clusters)?,
        se_trace,
    })
}

/// Subset-wise greedy minimization.
///
/// Starts from singletons. Each round sorts the current clusters by smallest
/// member, cuts them into consecutive groups of `subset_size`, and runs
/// [`vanilla_greedy_from`] on the subgraph induced by each group. The round
/// that handles every cluster in a single group is the last. A round that
/// merges nothing doubles the group size.
pub fn hierarchical_minimize(g: &FeatureGraph, subset_size: usize) -> Result<Partition> {
    if subset_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "subset size must be at least 2, got {subset_size}"
        )));
    }
    let mut n = subset_size;
    let mut clusters: Vec<Vec<usize>> = (0..g.len()).map(|v| vec![v]).collect();
    loop {
        clusters.sort_by_key(|c| c[0]);
        let groups: Vec<&[Vec<usize>]> = clusters.chunks(n).collect();
        let last_round = groups.len() <= 1;
        let merged: Vec<Vec<Vec<usize>>> = groups
            .par_iter()
            .map(|group| minimize_group(g, group))
            .collect::<Result<_>>()?;
        let next: Vec<Vec<usize>> = merged.into_iter().flatten().collect();
        let changed = next.len() != clusters.len();
        clusters = next;
        if last_round {
            break;
        }
        if !changed {
            n = n.saturating_mul(2);
        }
    }
    Partition::from_clusters(g, clusters)
}

fn minimize_group(g: &FeatureGraph, group: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let mut vertices: Vec<usize> = group.iter().flatten().copied().collect();
    vertices.sort_unstable();
    let sub = g.induced_subgraph(&vertices)?;
    let local = |v: usize| vertices.binary_search(&v).expect("vertex in group");
    let init = group
        .iter()
        .map(|c| c.iter().map(|&v| local(v)).collect())
        .collect();
    let init = Partition::from_clusters(&sub, init)?;
    let run = vanilla_greedy_from(&sub, &init)?;
    Ok(run
        .partition
        .clusters()
        .iter()
        .map(|c| c.iter().map(|&l| vertices[l]).collect())
        .collect())
}
