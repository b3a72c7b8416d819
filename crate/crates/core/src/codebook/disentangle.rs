//! Pushing codewords apart by descending a mutual-information upper bound.
//!
//! Each cluster contributes a cloud of member samples that moves rigidly with
//! its centroid. For every pair of clusters a variational conditional is
//! fitted on the current clouds, and the centroids take a gradient step on the
//! summed estimate with the conditionals held fixed. The conditionals are
//! refitted after every step; a step is kept only if the refitted objective
//! does not go up, halving the step size until it does.
//!
//! The conditionals are fitted without a bias term. With a bias, translating a
//! cloud is absorbed exactly by the refit and the gradient with respect to the
//! centroids vanishes.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::vclub::{printed_form, to_matrix, VariationalFit, VariationalModel};
use super::Codebook;
use crate::entropy::Partition;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisentangleConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Members sampled per cluster.
    pub max_samples: usize,
    /// Step halvings tried before giving up on a step.
    pub max_backtracks: usize,
    pub fit: VariationalFit,
}

impl Default for DisentangleConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            learning_rate: 0.01,
            max_samples: 256,
            max_backtracks: 30,
            fit: VariationalFit {
                intercept: false,
                ..VariationalFit::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct DisentangleOutcome {
    pub codebook: Codebook,
    /// Objective before the first step and after each accepted step.
    pub objective_trace: Vec<f64>,
}

/// Up to `max` members of each cluster of `p`, drawn without replacement and
/// kept in ascending row order.
pub fn cluster_samples<R: Rng>(
    x: &FeatureMatrix,
    p: &Partition,
    max: usize,
    rng: &mut R,
) -> Result<Vec<FeatureMatrix>> {
    p.clusters()
        .iter()
        .map(|members| {
            let chosen: Vec<usize> = if members.len() <= max {
                members.clone()
            } else {
                let mut picks: Vec<usize> = index::sample(rng, members.len(), max)
                    .into_iter()
                    .map(|i| members[i])
                    .collect();
                picks.sort_unstable();
                picks
            };
            x.select_rows(&chosen)
        })
        .collect()
}

/// The disentangling objective over a fixed set of member samples.
#[derive(Debug, Clone)]
pub struct DisentangleProblem {
    origin: FeatureMatrix,
    samples: Vec<Option<DMatrix<f64>>>,
    pairs: Vec<(usize, usize)>,
    fit: VariationalFit,
}

struct PairTerms {
    objective: f64,
    grad_i: DVector<f64>,
    grad_j: DVector<f64>,
}

impl DisentangleProblem {
    /// Clusters with fewer than two samples are left out of every pair.
    pub fn new(
        cb: &Codebook,
        cluster_samples: &[FeatureMatrix],
        fit: VariationalFit,
    ) -> Result<Self> {
        if cluster_samples.len() != cb.len() {
            return Err(Error::Shape(format!(
                "{} sample sets for {} clusters",
                cluster_samples.len(),
                cb.len()
            )));
        }
        if let Some(s) = cluster_samples.iter().find(|s| s.cols() != cb.dim()) {
            return Err(Error::Dimension {
                expected: cb.dim(),
                found: s.cols(),
            });
        }
        let samples: Vec<Option<DMatrix<f64>>> = cluster_samples
            .iter()
            .map(|s| (s.rows() >= 2).then(|| to_matrix(s)))
            .collect();
        let active: Vec<usize> = (0..samples.len())
            .filter(|&k| samples[k].is_some())
            .collect();
        let pairs = active
            .iter()
            .enumerate()
            .flat_map(|(n, &i)| active[n + 1..].iter().map(move |&j| (i, j)))
            .collect();
        Ok(Self {
            origin: cb.centroids.clone(),
            samples,
            pairs,
            fit,
        })
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    fn shifted(&self, k: usize, n: usize, centroids: &FeatureMatrix) -> DMatrix<f64> {
        let base = self.samples[k].as_ref().expect("active cluster");
        let mut m = base.rows(0, n).into_owned();
        let shift: Vec<f64> = centroids
            .row(k)
            .iter()
            .zip(self.origin.row(k))
            .map(|(c, o)| c - o)
            .collect();
        for mut row in m.row_iter_mut() {
            for (v, s) in row.iter_mut().zip(&shift) {
                *v += s;
            }
        }
        m
    }

    fn pair_samples(
        &self,
        (i, j): (usize, usize),
        centroids: &FeatureMatrix,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.samples[i]
            .as_ref()
            .map_or(0, |s| s.nrows())
            .min(self.samples[j].as_ref().map_or(0, |s| s.nrows()));
        (self.shifted(i, n, centroids), self.shifted(j, n, centroids))
    }

    /// Fits one variational model per cluster pair at `centroids`.
    pub fn fit_models(&self, centroids: &FeatureMatrix) -> Result<Vec<VariationalModel>> {
        self.pairs
            .par_iter()
            .map(|&pair| {
                let (si, sj) = self.pair_samples(pair, centroids);
                VariationalModel::fit_matrices(&si, &sj, &self.fit)
            })
            .collect()
    }

    fn pair_terms(
        &self,
        pair: (usize, usize),
        centroids: &FeatureMatrix,
        vm: &VariationalModel,
    ) -> PairTerms {
        let (si, sj) = self.pair_samples(pair, centroids);
        let objective = printed_form(&si, &sj, vm);

        let fwd = &vm.forward;
        let bwd = &vm.backward;
        let r1 = (&si - fwd.means(&sj)).row_mean().transpose();
        let m1 = r1.component_div(&fwd.variance);
        let r2 = (sj.row_mean() - bwd.means(&si).row_mean()).transpose();
        let m2 = r2.component_div(&bwd.variance);

        let grad_i = -&m1 - bwd.weights.transpose() * &m2;
        let grad_j = fwd.weights.transpose() * &m1 + &m2;
        PairTerms {
            objective,
            grad_i,
            grad_j,
        }
    }

    /// Summed estimate over all pairs with the given models held fixed.
    pub fn objective(&self, centroids: &FeatureMatrix, models: &[VariationalModel]) -> f64 {
        self.pairs
            .iter()
            .zip(models)
            .map(|(&pair, vm)| self.pair_terms(pair, centroids, vm).objective)
            .sum()
    }

    /// Gradient of [`DisentangleProblem::objective`] with respect to the
    /// centroids, row-major `K x H`.
    pub fn gradient(&self, centroids: &FeatureMatrix, models: &[VariationalModel]) -> Vec<f64> {
        let h = centroids.cols();
        let terms: Vec<PairTerms> = self
            .pairs
            .par_iter()
            .zip(models)
            .map(|(&pair, vm)| self.pair_terms(pair, centroids, vm))
            .collect();
        let mut grad = vec![0.0; centroids.rows() * h];
        for (&(i, j), t) in self.pairs.iter().zip(&terms) {
            for d in 0..h {
                grad[i * h + d] += t.grad_i[d];
                grad[j * h + d] += t.grad_j[d];
            }
        }
        grad
    }

    /// Objective with the models refitted at `centroids`.
    pub fn refit_objective(&self, centroids: &FeatureMatrix) -> Result<f64> {
        let models = self.fit_models(centroids)?;
        Ok(self.objective(centroids, &models))
    }
}

/// Moves the centroids of `cb` to lower the summed pairwise estimate.
///
/// Member counts and cluster order are untouched. With `steps == 0`, or fewer
/// than two clusters that have at least two samples, the codebook comes back
/// unchanged.
pub fn disentangle(
    cb: &Codebook,
    cluster_samples: &[FeatureMatrix],
    cfg: &DisentangleConfig,
) -> Result<DisentangleOutcome> {
    let problem = DisentangleProblem::new(cb, cluster_samples, cfg.fit)?;
    if cfg.steps == 0 || problem.pair_count() == 0 {
        return Ok(DisentangleOutcome {
            codebook: cb.clone(),
            objective_trace: vec![],
        });
    }
    let (k, h) = (cb.len(), cb.dim());
    let mut centroids = cb.centroids.clone();
    let mut models = problem.fit_models(&centroids)?;
    let mut current = problem.objective(&centroids, &models);
    let mut trace = vec![current];

    for step in 0..cfg.steps {
        let grad = problem.gradient(&centroids, &models);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { step });
        }
        let mut lr = cfg.learning_rate;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let data: Vec<f64> = centroids
                .as_slice()
                .iter()
                .zip(&grad)
                .map(|(c, g)| c - lr * g)
                .collect();
            if let Ok(candidate) = FeatureMatrix::new(k, h, data) {
                if let Ok(next_models) = problem.fit_models(&candidate) {
                    let value = problem.objective(&candidate, &next_models);
                    if value <= current {
                        accepted = Some((candidate, next_models, value));
                        break;
                    }
                }
            }
            lr *= 0.5;
        }
        let Some((c, m, value)) = accepted else {
            break;
        };
        centroids = c;
        models = m;
        current = value;
        trace.push(current);
    }

    Ok(DisentangleOutcome {
        codebook: Codebook::new(centroids, cb.member_counts.clone())?,
        objective_trace: trace,
    })
}
