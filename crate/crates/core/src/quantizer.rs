//! Residual multi-stage codec.
//!
//! Each stage owns a codebook discovered by entropy minimization over the
//! cosine graph of that stage's training residuals, plus a capped set of
//! anchor vectors with their cluster labels. To quantize a vector the stage
//! attaches it to the anchor graph as an extra vertex and picks the cluster
//! whose join lowers the graph's two-level entropy the most. Vectors with no
//! edge to any anchor fall back to the nearest centroid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{
    cluster_samples, disentangle, extract_centroids, fold_isolated, hierarchical_minimize,
    Codebook, DisentangleConfig, DEFAULT_SUBSET_SIZE,
};
use crate::entropy::{one_dim_entropy, partition_se, JoinContext, Partition, SEDelta};
use crate::error::{Error, Result};
use crate::features::{cosine, norm, FeatureMatrix};
use crate::graph::{build_graph, AnchorSet, FeatureGraph, DEFAULT_TAU};
use crate::rng;

/// Default number of residual stages.
pub const DEFAULT_STAGES: usize = 8;
/// Default cap on anchors kept per cluster.
pub const DEFAULT_ANCHORS_PER_CLUSTER: usize = 64;
/// Default cap on training rows.
pub const DEFAULT_MAX_NODES: usize = 10_000;
/// Residual rows with norm at most this fraction of the largest input row
/// norm are treated as exactly reconstructed.
pub const ZERO_RESIDUAL_RTOL: f64 = 1e-9;

/// How a stage maps a vector to a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// Join the anchor-graph cluster that minimizes structural entropy.
    StructuralEntropy,
    /// Nearest centroid.
    Euclidean,
}

#[derive(Debug, Clone)]
struct AnchorIndex {
    set: AnchorSet,
    labels: Vec<usize>,
    graph: FeatureGraph,
    partition: Partition,
}

/// One quantization stage.
#[derive(Debug, Clone)]
pub struct StageModel {
    codebook: Codebook,
    anchors: Option<AnchorIndex>,
    tau: f64,
    assignment: Assignment,
}

/// Which path produced a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Graph,
    IsolatedFallback,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignOutcome {
    pub token: usize,
    pub route: Route,
    /// Candidate joins, ascending by cluster, for graph-routed queries.
    pub deltas: Vec<SEDelta>,
}

impl StageModel {
    /// `anchors` pairs anchor vectors with the cluster label of each; it is
    /// required for structural-entropy assignment. Every cluster must own at
    /// least one anchor.
    pub fn new(
        codebook: Codebook,
        anchors: Option<(FeatureMatrix, Vec<usize>)>,
        tau: f64,
        assignment: Assignment,
    ) -> Result<Self> {
        let anchors = match anchors {
            None => None,
            Some((vectors, labels)) => {
                if vectors.cols() != codebook.dim() {
                    return Err(Error::Dimension {
                        expected: codebook.dim(),
                        found: vectors.cols(),
                    });
                }
                if labels.len() != vectors.rows() {
                    return Err(Error::Shape(format!(
                        "{} anchor labels for {} anchors",
                        labels.len(),
                        vectors.rows()
                    )));
                }
                let mut owned = vec![false; codebook.len()];
                for &l in &labels {
                    if l >= codebook.len() {
                        return Err(Error::UnknownCluster {
                            cluster: l,
                            len: codebook.len(),
                        });
                    }
                    owned[l] = true;
                }
                if let Some(k) = owned.iter().position(|o| !o) {
                    return Err(Error::InvalidPartition(format!(
                        "cluster {k} has no anchors"
                    )));
                }
                let graph = build_graph(&vectors, tau)?;
                let partition = Partition::from_labels(&graph, &labels)?;
                Some(AnchorIndex {
                    set: AnchorSet::new(vectors)?,
                    labels,
                    graph,
                    partition,
                })
            }
        };
        if assignment == Assignment::StructuralEntropy && anchors.is_none() {
            return Err(Error::InvalidArgument(
                "structural-entropy assignment needs anchors".into(),
            ));
        }
        Ok(Self {
            codebook,
            anchors,
            tau,
            assignment,
        })
    }

    /// Nearest-centroid stage without anchors.
    pub fn euclidean(codebook: Codebook) -> Self {
        Self {
            codebook,
            anchors: None,
            tau: 0.0,
            assignment: Assignment::Euclidean,
        }
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn len(&self) -> usize {
        self.codebook.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codebook.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn assignment(&self) -> Assignment {
        self.assignment
    }

    pub fn anchors(&self) -> Option<&FeatureMatrix> {
        self.anchors.as_ref().map(|a| a.set.vectors())
    }

    pub fn anchor_labels(&self) -> Option<&[usize]> {
        self.anchors.as_ref().map(|a| a.labels.as_slice())
    }

    pub fn anchor_graph(&self) -> Option<&FeatureGraph> {
        self.anchors.as_ref().map(|a| &a.graph)
    }

    pub fn anchor_partition(&self) -> Option<&Partition> {
        self.anchors.as_ref().map(|a| &a.partition)
    }

    /// Same stage with a different assignment rule.
    pub fn with_assignment(mut self, assignment: Assignment) -> Result<Self> {
        if assignment == Assignment::StructuralEntropy && self.anchors.is_none() {
            return Err(Error::InvalidArgument(
                "structural-entropy assignment needs anchors".into(),
            ));
        }
        self.assignment = assignment;
        Ok(self)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.codebook.dim() {
            return Err(Error::Dimension {
                expected: self.codebook.dim(),
                found: x.len(),
            });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, col });
        }
        Ok(())
    }

    pub fn assign(&self, x: &[f64]) -> Result<usize> {
        Ok(self.assign_detailed(x)?.token)
    }

    pub fn assign_detailed(&self, x: &[f64]) -> Result<AssignOutcome> {
        self.check_dim(x)?;
        let fallback = |route| AssignOutcome {
            token: self.codebook.nearest(x),
            route,
            deltas: vec![],
        };
        let index = match (&self.anchors, self.assignment) {
            (Some(index), Assignment::StructuralEntropy) => index,
            _ => return Ok(fallback(Route::Euclidean)),
        };
        if norm(x) == 0.0 {
            return Ok(fallback(Route::IsolatedFallback));
        }
        let query = index.set.attach(x, self.tau)?;
        if query.is_isolated() {
            return Ok(fallback(Route::IsolatedFallback));
        }
        let ctx = JoinContext::new(&index.graph, &index.partition, &query)?;
        let deltas: Vec<SEDelta> = ctx
            .candidates()
            .map(|k| {
                let delta = ctx.join_gain(&index.partition, k);
                SEDelta {
                    cluster: k,
                    delta,
                    resulting_se: ctx.baseline() - delta,
                }
            })
            .collect();
        let mut best = &deltas[0];
        for d in &deltas[1..] {
            if d.delta > best.delta {
                best = d;
            }
        }
        Ok(AssignOutcome {
            token: best.cluster,
            route: Route::Graph,
            deltas,
        })
    }

    /// Compares the four-term closed form against the exact join change for
    /// one query. `None` when the query does not take the graph route.
    pub fn closed_form_check(&self, x: &[f64]) -> Result<Option<ClosedFormCheck>> {
        let outcome = self.assign_detailed(x)?;
        if outcome.route != Route::Graph {
            return Ok(None);
        }
        let index = self.anchors.as_ref().expect("graph route has anchors");
        let query = index.set.attach(x, self.tau)?;
        let ctx = JoinContext::new(&index.graph, &index.partition, &query)?;
        let printed: Vec<(usize, f64)> = outcome
            .deltas
            .iter()
            .map(|d| (d.cluster, ctx.closed_form_gain(&index.partition, d.cluster)))
            .collect();
        let max_abs_difference = outcome
            .deltas
            .iter()
            .zip(&printed)
            .map(|(d, (_, p))| (d.delta - p).abs())
            .fold(0.0, f64::max);
        let pick = |better: fn(f64, f64) -> bool| {
            let mut best = printed[0];
            for &c in &printed[1..] {
                if better(c.1, best.1) {
                    best = c;
                }
            }
            best.0
        };
        Ok(Some(ClosedFormCheck {
            candidates: printed.len(),
            max_abs_difference,
            token: outcome.token,
            closed_form_argmax: pick(|a, b| a > b),
            closed_form_argmin: pick(|a, b| a < b),
        }))
    }
}

/// Closed form versus exact join change for one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormCheck {
    pub candidates: usize,
    pub max_abs_difference: f64,
    /// Token chosen by the exact change.
    pub token: usize,
    /// Candidate with the largest closed-form value.
    pub closed_form_argmax: usize,
    /// Candidate with the smallest closed-form value.
    pub closed_form_argmin: usize,
}

/// Aggregate of [`ClosedFormCheck`] over many queries.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClosedFormDiagnostic {
    pub queries: usize,
    pub graph_routed: usize,
    pub max_abs_difference: f64,
    pub argmax_disagreements: usize,
    pub argmin_disagreements: usize,
}

impl ClosedFormDiagnostic {
    pub fn record(&mut self, check: Option<ClosedFormCheck>) {
        self.queries += 1;
        if let Some(c) = check {
            self.graph_routed += 1;
            self.max_abs_difference = self.max_abs_difference.max(c.max_abs_difference);
            self.argmax_disagreements += usize::from(c.closed_form_argmax != c.token);
            self.argmin_disagreements += usize::from(c.closed_form_argmin != c.token);
        }
    }
}

/// Token for `x` at `stage`.
pub fn assign(stage: &StageModel, x: &[f64]) -> Result<usize> {
    stage.assign(x)
}

/// `T x S` token matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    frames: usize,
    stages: usize,
    data: Vec<u32>,
}

impl TokenSequence {
    pub fn new(frames: usize, stages: usize, data: Vec<u32>) -> Result<Self> {
        if stages == 0 {
            return Err(Error::Shape(
                "token sequences need at least one stage".into(),
            ));
        }
        if data.len() != frames * stages {
            return Err(Error::Shape(format!(
                "{frames}x{stages} tokens need {} values, got {}",
                frames * stages,
                data.len()
            )));
        }
        Ok(Self {
            frames,
            stages,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let stages = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * stages);
        for (t, r) in rows.iter().enumerate() {
            if r.as_ref().len() != stages {
                return Err(Error::Shape(format!(
                    "frame {t} has {} tokens, expected {stages}",
                    r.as_ref().len()
                )));
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), stages, data)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn get(&self, frame: usize, stage: usize) -> u32 {
        self.data[frame * self.stages + stage]
    }

    pub fn frame(&self, t: usize) -> &[u32] {
        &self.data[t * self.stages..(t + 1) * self.stages]
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.frames).map(|t| self.frame(t).to_vec()).collect()
    }
}

/// Training parameters, echoed into every saved model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub stages: usize,
    pub tau: f64,
    pub subset_size: usize,
    pub anchors_per_cluster: usize,
    /// Training rows beyond this many are subsampled uniformly at random.
    pub max_nodes: Option<usize>,
    pub seed: u64,
    pub disentangle: Option<DisentangleConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            stages: DEFAULT_STAGES,
            tau: DEFAULT_TAU,
            subset_size: DEFAULT_SUBSET_SIZE,
            anchors_per_cluster: DEFAULT_ANCHORS_PER_CLUSTER,
            max_nodes: Some(DEFAULT_MAX_NODES),
            seed: 0,
            disentangle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub config: TrainConfig,
    /// Rows used for training after subsampling.
    pub training_rows: usize,
    pub stages_trained: usize,
    /// Why training produced fewer stages than requested.
    pub early_stop: Option<String>,
}

/// Per-stage training statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageStats {
    pub stage: usize,
    pub codebook_size: usize,
    pub training_rows: usize,
    pub edges: usize,
    pub isolated_vertices: usize,
    /// Entropy of the singleton partition; absent for an edgeless graph.
    pub se_initial: Option<f64>,
    /// Entropy after minimization.
    pub se_minimized: Option<f64>,
    pub anchors: usize,
    pub disentangle_objective: Option<(f64, f64)>,
}

/// Trained residual codec.
#[derive(Debug, Clone)]
pub struct CodecModel {
    dim: usize,
    stages: Vec<StageModel>,
    metadata: ModelMetadata,
}

#[derive(Debug, Clone)]
pub struct TrainedCodec {
    pub model: CodecModel,
    pub stats: Vec<StageStats>,
}

impl CodecModel {
    pub fn new(dim: usize, stages: Vec<StageModel>, metadata: ModelMetadata) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Shape("a codec needs at least one stage".into()));
        }
        if let Some(s) = stages.iter().find(|s| s.codebook.dim() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: s.codebook.dim(),
            });
        }
        Ok(Self {
            dim,
            stages,
            metadata,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stages(&self) -> &[StageModel] {
        &self.stages
    }

    pub fn metadata(&self) -> &ModelMetadata {
        &self.metadata
    }

    pub fn codebook_sizes(&self) -> Vec<usize> {
        self.stages.iter().map(StageModel::len).collect()
    }

    /// Copy with stage `s` switched to another assignment rule.
    pub fn with_stage_assignment(&self, s: usize, assignment: Assignment) -> Result<Self> {
        let mut next = self.clone();
        let stage = next
            .stages
            .get_mut(s)
            .ok_or_else(|| Error::InvalidArgument(format!("no stage {s}")))?;
        *stage = stage.clone().with_assignment(assignment)?;
        Ok(next)
    }

    fn check_input(&self, x: &FeatureMatrix) -> Result<()> {
        if x.cols() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.cols(),
            });
        }
        Ok(())
    }

    fn encode_frame(&self, x: &[f64]) -> Result<Vec<u32>> {
        let mut residual = x.to_vec();
        self.stages
            .iter()
            .map(|stage| {
                let token = stage.assign(&residual)?;
                for (r, c) in residual.iter_mut().zip(stage.codebook.centroid(token)) {
                    *r -= c;
                }
                Ok(token as u32)
            })
            .collect()
    }

    pub fn encode(&self, x: &FeatureMatrix) -> Result<TokenSequence> {
        self.check_input(x)?;
        let frames: Vec<Vec<u32>> = (0..x.rows())
            .into_par_iter()
            .map(|t| self.encode_frame(x.row(t)))
            .collect::<Result<_>>()?;
        TokenSequence::from_rows(&frames)
    }

    fn check_tokens(&self, tokens: &TokenSequence) -> Result<()> {
        if tokens.stages() != self.stages.len() {
            return Err(Error::Shape(format!(
                "tokens have {} stages, model has {}",
                tokens.stages(),
                self.stages.len()
            )));
        }
        for t in 0..tokens.frames() {
            for (s, stage) in self.stages.iter().enumerate() {
                let token = tokens.get(t, s) as usize;
                if token >= stage.len() {
                    return Err(Error::TokenOutOfRange {
                        frame: t,
                        stage: s,
                        token,
                        size: stage.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Reconstructions using the first `1, 2, ..., S` stages.
    pub fn decode_stages(&self, tokens: &TokenSequence) -> Result<Vec<FeatureMatrix>> {
        self.check_tokens(tokens)?;
        if tokens.frames() == 0 {
            return Err(Error::Shape("no frames to decode".into()));
        }
        let mut acc = FeatureMatrix::zeros(tokens.frames(), self.dim)?;
        let mut out = Vec::with_capacity(self.stages.len());
        for (s, stage) in self.stages.iter().enumerate() {
            for t in 0..tokens.frames() {
                let c = stage.codebook.centroid(tokens.get(t, s) as usize);
                for (a, v) in acc.row_mut(t).iter_mut().zip(c) {
                    *a += v;
                }
            }
            out.push(acc.clone());
        }
        Ok(out)
    }

    pub fn decode(&self, tokens: &TokenSequence) -> Result<FeatureMatrix> {
        Ok(self
            .decode_stages(tokens)?
            .pop()
            .expect("at least one stage"))
    }

    /// Encodes `x`, decodes every stage prefix and measures distortion.
    pub fn evaluate(&self, x: &FeatureMatrix) -> Result<(TokenSequence, DistortionReport)> {
        let tokens = self.encode(x)?;
        let report = staged_distortion_report(x, &self.decode_stages(&tokens)?)?;
        Ok((tokens, report))
    }

    /// Runs [`StageModel::closed_form_check`] for every frame and stage
    /// along the residual chain.
    pub fn closed_form_diagnostic(&self, x: &FeatureMatrix) -> Result<ClosedFormDiagnostic> {
        self.check_input(x)?;
        let mut diag = ClosedFormDiagnostic::default();
        for row in x.iter_rows() {
            let mut residual = row.to_vec();
            for stage in &self.stages {
                diag.record(stage.closed_form_check(&residual)?);
                let token = stage.assign(&residual)?;
                for (r, c) in residual.iter_mut().zip(stage.codebook.centroid(token)) {
                    *r -= c;
                }
            }
        }
        Ok(diag)
    }
}

pub fn encode(model: &CodecModel, x: &FeatureMatrix) -> Result<TokenSequence> {
    model.encode(x)
}

pub fn decode(model: &CodecModel, tokens: &TokenSequence) -> Result<FeatureMatrix> {
    model.decode(tokens)
}

/// Trains a codec on the rows of `x`.
pub fn train_codec(x: &FeatureMatrix, cfg: &TrainConfig) -> Result<CodecModel> {
    Ok(train_codec_detailed(x, cfg)?.model)
}

/// Members of each cluster closest to its centroid by cosine (ties to the
/// lower row), at most `cap` per cluster, returned in ascending row order with
/// their labels.
fn select_anchors(
    p: &Partition,
    x: &FeatureMatrix,
    cb: &Codebook,
    cap: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, members) in p.clusters().iter().enumerate() {
        let centroid = cb.centroid(k);
        let mut ranked: Vec<(f64, usize)> = members
            .iter()
            .map(|&v| (cosine(x.row(v), centroid).unwrap_or(-2.0), v))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut chosen: Vec<usize> = ranked.into_iter().take(cap).map(|(_, v)| v).collect();
        chosen.sort_unstable();
        labels.extend(std::iter::repeat_n(k, chosen.len()));
        rows.extend(chosen);
    }
    (rows, labels)
}

pub fn train_codec_detailed(x: &FeatureMatrix, cfg: &TrainConfig) -> Result<TrainedCodec> {
    train_codec_observed(x, cfg, |_, _, _| {})
}

/// Row indices kept for training: all of them, or a sorted uniform sample of
/// `cfg.max_nodes` drawn from the subsampling stream.
pub fn training_rows(rows: usize, cfg: &TrainConfig) -> Vec<usize> {
    match cfg.max_nodes {
        Some(max) if rows > max => {
            let mut rng = rng::stream(cfg.seed, rng::STREAM_SUBSAMPLE);
            let mut keep = rand::seq::index::sample(&mut rng, rows, max).into_vec();
            keep.sort_unstable();
            keep
        }
        _ => (0..rows).collect(),
    }
}

/// [`train_codec_detailed`], calling `observe(stage, graph, partition)` with
/// each stage's training graph and final partition.
pub fn train_codec_observed<F>(
    x: &FeatureMatrix,
    cfg: &TrainConfig,
    mut observe: F,
) -> Result<TrainedCodec>
where
    F: FnMut(usize, &FeatureGraph, &Partition),
{
    if cfg.max_nodes.is_some_and(|m| m < 2) {
        return Err(Error::InvalidArgument(
            "max nodes must be at least 2".into(),
        ));
    }
    let keep = training_rows(x.rows(), cfg);
    let subsampled;
    let x = if keep.len() < x.rows() {
        subsampled = x.select_rows(&keep)?;
        &subsampled
    } else {
        x
    };
    if x.rows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "training needs at least 2 rows, got {}",
            x.rows()
        )));
    }
    if cfg.stages == 0 {
        return Err(Error::InvalidArgument(
            "stage count must be at least 1".into(),
        ));
    }
    if cfg.anchors_per_cluster == 0 {
        return Err(Error::InvalidArgument(
            "anchor cap must be at least 1".into(),
        ));
    }
    let scale = x.iter_rows().map(norm).fold(0.0, f64::max);
    let zero_tol = ZERO_RESIDUAL_RTOL * scale;

    let mut residual = x.clone();
    let mut stages = Vec::new();
    let mut stats = Vec::new();
    let mut early_stop = None;

    for s in 0..cfg.stages {
        let live: Vec<usize> = (0..residual.rows())
            .filter(|&t| norm(residual.row(t)) > zero_tol)
            .collect();
        if live.is_empty() {
            early_stop = Some(format!("all residuals vanished after {s} stage(s)"));
            break;
        }
        let train = residual.select_rows(&live)?;
        let graph = build_graph(&train, cfg.tau)?;
        let (partition, se_initial, se_minimized) = if graph.volume() > 0.0 {
            let initial = one_dim_entropy(&graph)?;
            let p = hierarchical_minimize(&graph, cfg.subset_size)?;
            let minimized = partition_se(&graph, &p)?;
            (p, Some(initial), Some(minimized))
        } else {
            (Partition::singletons(&graph), None, None)
        };
        let isolated = graph.degrees().iter().filter(|&&d| d == 0.0).count();
        let partition = fold_isolated(&graph, &partition, &train)?;
        observe(s, &graph, &partition);
        let extracted = extract_centroids(&partition, &train)?;
        let (anchor_rows, anchor_labels) =
            select_anchors(&partition, &train, &extracted, cfg.anchors_per_cluster);

        let (codebook, disentangle_objective) = match &cfg.disentangle {
            Some(dcfg) => {
                let mut rng = rng::stream(cfg.seed, rng::STREAM_DISENTANGLE + s as u64);
                let samples = cluster_samples(&train, &partition, dcfg.max_samples, &mut rng)?;
                let outcome = disentangle(&extracted, &samples, dcfg)?;
                let objective = match (
                    outcome.objective_trace.first(),
                    outcome.objective_trace.last(),
                ) {
                    (Some(&a), Some(&b)) => Some((a, b)),
                    _ => None,
                };
                (outcome.codebook, objective)
            }
            None => (extracted, None),
        };

        let stage = StageModel::new(
            codebook,
            Some((train.select_rows(&anchor_rows)?, anchor_labels)),
            cfg.tau,
            Assignment::StructuralEntropy,
        )?;

        let mut labels: Vec<Option<usize>> = vec![None; residual.rows()];
        for (local, &t) in live.iter().enumerate() {
            labels[t] = Some(partition.cluster_of(local));
        }
        for (t, label) in labels.into_iter().enumerate() {
            let k = label.unwrap_or_else(|| stage.codebook.nearest(residual.row(t)));
            let c = stage.codebook.centroid(k).to_vec();
            for (r, v) in residual.row_mut(t).iter_mut().zip(c) {
                *r -= v;
            }
        }

        stats.push(StageStats {
            stage: s,
            codebook_size: stage.len(),
            training_rows: train.rows(),
            edges: graph.edge_count(),
            isolated_vertices: isolated,
            se_initial,
            se_minimized,
            anchors: anchor_rows.len(),
            disentangle_objective,
        });
        stages.push(stage);
    }

    if stages.is_empty() {
        return Err(Error::InvalidArgument("every input row is zero".into()));
    }
    let metadata = ModelMetadata {
        config: cfg.clone(),
        training_rows: x.rows(),
        stages_trained: stages.len(),
        early_stop,
    };
    Ok(TrainedCodec {
        model: CodecModel::new(x.cols(), stages, metadata)?,
        stats,
    })
}

/// Reconstruction quality of `x_hat` against `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Mean squared error after each stage prefix.
    pub stage_mse: Vec<f64>,
    pub final_mse: f64,
    /// Row-wise cosine similarity, averaged over rows.
    pub mean_cosine: f64,
    /// Root mean squared error per feature dimension.
    pub rmse: Vec<f64>,
}

pub fn distortion_report(x: &FeatureMatrix, x_hat: &FeatureMatrix) -> Result<DistortionReport> {
    staged_distortion_report(x, std::slice::from_ref(x_hat))
}

/// Distortion of a sequence of cumulative reconstructions; the last one is
/// the final reconstruction.
pub fn staged_distortion_report(
    x: &FeatureMatrix,
    stages: &[FeatureMatrix],
) -> Result<DistortionReport> {
    let last = stages
        .last()
        .ok_or_else(|| Error::Shape("no reconstructions to compare".into()))?;
    for r in stages {
        if (r.rows(), r.cols()) != (x.rows(), x.cols()) {
            return Err(Error::Shape(format!(
                "reconstruction is {}x{}, reference is {}x{}",
                r.rows(),
                r.cols(),
                x.rows(),
                x.cols()
            )));
        }
    }
    let mse = |r: &FeatureMatrix| {
        x.as_slice()
            .iter()
            .zip(r.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / x.as_slice().len() as f64
    };
    let stage_mse: Vec<f64> = stages.iter().map(mse).collect();
    let mean_cosine = x
        .iter_rows()
        .zip(last.iter_rows())
        .map(|(a, b)| match (norm(a) == 0.0, norm(b) == 0.0) {
            (true, true) => 1.0,
            (false, false) => cosine(a, b).expect("nonzero rows"),
            _ => 0.0,
        })
        .sum::<f64>()
        / x.rows() as f64;
    let rmse = (0..x.cols())
        .map(|d| {
            let sq: f64 = x
                .iter_rows()
                .zip(last.iter_rows())
                .map(|(a, b)| (a[d] - b[d]) * (a[d] - b[d]))
                .sum();
            (sq / x.rows() as f64).sqrt()
        })
        .collect();
    Ok(DistortionReport {
        final_mse: *stage_mse.last().expect("non-empty"),
        stage_mse,
        mean_cosine,
        rmse,
    })
}
