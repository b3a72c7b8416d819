//! Contrastive log-ratio upper bound on mutual information, with a
//! linear-Gaussian variational conditional.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// How a [`GaussianConditional`] is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalFit {
    /// Ridge added to the (sample-averaged) input Gram matrix.
    pub ridge: f64,
    /// Lower bound on each fitted variance. Zero disables the floor, in which
    /// case an exactly predictable target is a [`Error::Degenerate`] fit.
    pub variance_floor: f64,
    /// Fit a bias term. Without it the conditional mean passes through the
    /// origin.
    pub intercept: bool,
}

impl Default for VariationalFit {
    fn default() -> Self {
        Self {
            ridge: 1e-6,
            variance_floor: 1e-6,
            intercept: true,
        }
    }
}

/// `N(y | A x + b, diag(variance))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianConditional {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub variance: DVector<f64>,
}

impl GaussianConditional {
    /// Ridge regression of `targets` on `inputs` (rows are paired samples),
    /// with the residual variance per output dimension.
    pub fn fit(
        targets: &DMatrix<f64>,
        inputs: &DMatrix<f64>,
        cfg: &VariationalFit,
    ) -> Result<Self> {
        let n = inputs.nrows();
        if targets.nrows() != n {
            return Err(Error::Shape(format!(
                "{} targets paired with {} inputs",
                targets.nrows(),
                n
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("cannot fit on zero samples".into()));
        }
        let nf = n as f64;
        let (x_mean, y_mean) = if cfg.intercept {
            (column_means(inputs), column_means(targets))
        } else {
            (
                DVector::zeros(inputs.ncols()),
                DVector::zeros(targets.ncols()),
            )
        };
        let xc = center(inputs, &x_mean);
        let yc = center(targets, &y_mean);
        let mut gram = xc.tr_mul(&xc) / nf;
        for d in 0..gram.nrows() {
            gram[(d, d)] += cfg.ridge;
        }
        let cross = xc.tr_mul(&yc) / nf;
        let chol = gram.cholesky().ok_or_else(|| {
            Error::Degenerate("input Gram matrix is not positive definite".into())
        })?;
        let weights = chol.solve(&cross).transpose();
        let bias = &y_mean - &weights * &x_mean;

        let mut variance = DVector::<f64>::zeros(targets.ncols());
        for (i, row) in targets.row_iter().enumerate() {
            let mean = &weights * inputs.row(i).transpose() + &bias;
            for d in 0..targets.ncols() {
                let r = row[d] - mean[d];
                variance[d] += r * r / nf;
            }
        }
        for (d, v) in variance.iter_mut().enumerate() {
            if cfg.variance_floor > 0.0 {
                *v = v.max(cfg.variance_floor);
            } else if *v <= 0.0 {
                return Err(Error::Degenerate(format!(
                    "zero residual variance in output dimension {d}"
                )));
            }
        }
        if weights
            .iter()
            .chain(bias.iter())
            .chain(variance.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Degenerate("non-finite fitted parameters".into()));
        }
        Ok(Self {
            weights,
            bias,
            variance,
        })
    }

    pub fn mean(&self, x: &[f64]) -> DVector<f64> {
        &self.weights * DVector::from_column_slice(x) + &self.bias
    }

    /// Natural-log density of `y` given `x`.
    pub fn log_density(&self, y: &[f64], x: &[f64]) -> f64 {
        let mean = self.mean(x);
        -0.5 * y
            .iter()
            .zip(mean.iter())
            .zip(self.variance.iter())
            .map(|((y, m), v)| (y - m) * (y - m) / v + LN_2PI + v.ln())
            .sum::<f64>()
    }

    /// Conditional means for every row of `inputs`.
    pub(crate) fn means(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut m = inputs * self.weights.transpose();
        for mut row in m.row_iter_mut() {
            row += self.bias.transpose();
        }
        m
    }

    fn log_normalizer(&self) -> f64 {
        -0.5 * self.variance.iter().map(|v| LN_2PI + v.ln()).sum::<f64>()
    }
}

/// Conditionals for a pair of sample sets `(i, j)`: `forward` models
/// `e_i | e_j`, `backward` models `e_j | e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalModel {
    pub forward: GaussianConditional,
    pub backward: GaussianConditional,
}

impl VariationalModel {
    pub fn fit(
        samples_i: &FeatureMatrix,
        samples_j: &FeatureMatrix,
        cfg: &VariationalFit,
    ) -> Result<Self> {
        let (si, sj) = paired(samples_i, samples_j)?;
        Self::fit_matrices(&si, &sj, cfg)
    }

    pub(crate) fn fit_matrices(
        si: &DMatrix<f64>,
        sj: &DMatrix<f64>,
        cfg: &VariationalFit,
    ) -> Result<Self> {
        Ok(Self {
            forward: GaussianConditional::fit(si, sj, cfg)?,
            backward: GaussianConditional::fit(sj, si, cfg)?,
        })
    }
}

pub(crate) fn to_matrix(m: &FeatureMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn paired(
    samples_i: &FeatureMatrix,
    samples_j: &FeatureMatrix,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if samples_i.rows() != samples_j.rows() {
        return Err(Error::Shape(format!(
            "sample counts differ: {} vs {}",
            samples_i.rows(),
            samples_j.rows()
        )));
    }
    if samples_i.rows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 paired samples, got {}",
            samples_i.rows()
        )));
    }
    Ok((to_matrix(samples_i), to_matrix(samples_j)))
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    m.row_mean().transpose()
}

fn center(m: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = m.clone();
    for mut row in c.row_iter_mut() {
        row -= mean.transpose();
    }
    c
}

/// Mean over all `(M, J)` of the Gaussian log-density of `targets[J]` under
/// `means[M]`, computed from first and second moments instead of the double
/// loop.
fn all_pairs_log_density(
    targets: &DMatrix<f64>,
    means: &DMatrix<f64>,
    variance: &DVector<f64>,
) -> f64 {
    let t_mean = column_means(targets);
    let m_mean = column_means(means);
    let quad: f64 = (0..targets.ncols())
        .map(|d| {
            let vt = targets.column(d).map(|v| (v - t_mean[d]).powi(2)).mean();
            let vm = means.column(d).map(|v| (v - m_mean[d]).powi(2)).mean();
            let gap = t_mean[d] - m_mean[d];
            (vt + vm + gap * gap) / variance[d]
        })
        .sum();
    -0.5 * quad
}

fn paired_log_density(
    targets: &DMatrix<f64>,
    means: &DMatrix<f64>,
    variance: &DVector<f64>,
) -> f64 {
    let n = targets.nrows() as f64;
    let quad: f64 = (0..targets.ncols())
        .map(|d| {
            targets
                .column(d)
                .iter()
                .zip(means.column(d).iter())
                .map(|(t, m)| (t - m) * (t - m))
                .sum::<f64>()
                / variance[d]
        })
        .sum();
    -0.5 * quad / n
}

/// `(1/N^2) sum_M sum_J [log f(e_i,M | e_j,M) - log f(e_j,J | e_i,M)]`.
///
/// The first term uses `vm.forward`, the second `vm.backward`. The estimate
/// can be negative for finite `N`.
pub fn vclub_estimate(
    samples_i: &FeatureMatrix,
    samples_j: &FeatureMatrix,
    vm: &VariationalModel,
) -> Result<f64> {
    let (si, sj) = paired(samples_i, samples_j)?;
    Ok(printed_form(&si, &sj, vm))
}

pub(crate) fn printed_form(si: &DMatrix<f64>, sj: &DMatrix<f64>, vm: &VariationalModel) -> f64 {
    let fwd = &vm.forward;
    let bwd = &vm.backward;
    let paired_term = fwd.log_normalizer() + paired_log_density(si, &fwd.means(sj), &fwd.variance);
    let cross_term =
        bwd.log_normalizer() + all_pairs_log_density(sj, &bwd.means(si), &bwd.variance);
    paired_term - cross_term
}

/// The usual contrastive form, where both terms score `e_i` under
/// `vm.forward`: `(1/N^2) sum_M sum_J [log f(e_i,M | e_j,M) - log f(e_i,J | e_j,M)]`.
pub fn vclub_contrastive(
    samples_i: &FeatureMatrix,
    samples_j: &FeatureMatrix,
    vm: &VariationalModel,
) -> Result<f64> {
    let (si, sj) = paired(samples_i, samples_j)?;
    let fwd = &vm.forward;
    let means = fwd.means(&sj);
    Ok(paired_log_density(&si, &means, &fwd.variance)
        - all_pairs_log_density(&si, &means, &fwd.variance))
}
