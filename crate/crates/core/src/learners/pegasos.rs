use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::loss::LossKind;
use crate::error::{Error, Result};
use crate::kernels::{gram, HypercubePoint, KernelSpec, ModelReport, TrainedModel};
use crate::rng::{stream_rng, streams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PegasosConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub loss: LossKind,
}

impl PegasosConfig {
    pub fn new(lambda: f64, epochs: usize, seed: u64, loss: LossKind) -> Self {
        Self {
            lambda,
            epochs,
            seed,
            loss,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PegasosOutput {
    /// Averaged dual coefficients.
    pub alphas: Vec<f64>,
    /// `(λ/2) αᵀAα + (1/m) Σ ℓ((Aα)_i, y_i)` at the averaged iterate.
    pub objective: f64,
    pub iters: u64,
}

/// Kernelized Pegasos on a precomputed prediction matrix.
///
/// `pred[(i, j)]` is the contribution of support point `j` to the prediction
/// on example `i`; for an ordinary kernel this is the Gram matrix. Step `t`
/// picks an example uniformly, scales `α` by `1 - 1/t` and moves `α_i` by
/// `-ℓ'(f_i, y_i) / (λ t)`. The returned coefficients average the iterates
/// of the second half of the run.
pub fn pegasos_matrix(pred: &DMatrix<f64>, labels: &[f64], cfg: &PegasosConfig) -> Result<PegasosOutput> {
    let m = labels.len();
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    if pred.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: pred.nrows(),
        });
    }
    if !(cfg.lambda > 0.0) || !cfg.lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {}", cfg.lambda)));
    }
    for &y in labels {
        cfg.loss.check_label(y)?;
    }
    let total = (cfg.epochs.max(1) * m) as u64;
    let tail_start = total / 2 + 1;
    let mut rng = stream_rng(cfg.seed, streams::PEGASOS);
    let mut alpha = vec![0.0; m];
    let mut avg = vec![0.0; m];
    for t in 1..=total {
        let i = rng.random_range(0..m);
        let row = pred.row(i);
        let f: f64 = row.iter().zip(&alpha).map(|(k, a)| k * a).sum();
        let g = cfg.loss.subgradient(f, labels[i]);
        let shrink = 1.0 - 1.0 / t as f64;
        for a in alpha.iter_mut() {
            *a *= shrink;
        }
        alpha[i] -= g / (cfg.lambda * t as f64);
        if t >= tail_start {
            for (s, a) in avg.iter_mut().zip(&alpha) {
                *s += a;
            }
        }
    }
    let count = (total - tail_start + 1) as f64;
    for s in avg.iter_mut() {
        *s /= count;
    }
    let objective = regularized_objective(pred, labels, &avg, cfg.lambda, cfg.loss);
    Ok(PegasosOutput {
        alphas: avg,
        objective,
        iters: total,
    })
}

/// `(λ/2) αᵀAα + (1/m) Σ ℓ((Aα)_i, y_i)`.
pub fn regularized_objective(
    pred: &DMatrix<f64>,
    labels: &[f64],
    alphas: &[f64],
    lambda: f64,
    loss: LossKind,
) -> f64 {
    let a = DVector::from_column_slice(alphas);
    let f = pred * &a;
    let reg = 0.5 * lambda * a.dot(&f);
    let emp: f64 = f.iter().zip(labels).map(|(z, y)| loss.value(*z, *y)).sum::<f64>() / labels.len() as f64;
    reg + emp
}

/// Pegasos with a fixed hypercube kernel. The support of the returned model
/// is the training sample.
pub fn pegasos_train(
    spec: &KernelSpec,
    points: &[HypercubePoint],
    labels: &[f64],
    cfg: &PegasosConfig,
) -> Result<TrainedModel> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: labels.len(),
        });
    }
    let k = gram(spec, points)?;
    let out = pegasos_matrix(&k, labels, cfg)?;
    Ok(TrainedModel::new(spec.clone(), points.to_vec(), out.alphas)?.with_report(ModelReport {
        objective: out.objective,
        gap: f64::NAN,
        iters: out.iters,
        seed: cfg.seed,
    }))
}
