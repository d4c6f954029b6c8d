use nalgebra::{DMatrix, DVector};

use super::loss::LossKind;
use crate::error::{Error, Result};
use crate::kernels::{gram, HypercubePoint, KernelSpec, ModelReport, TrainedModel};
use crate::linalg::max_eigenvalue_psd;

pub const DEFAULT_INNER_TOL: f64 = 1e-8;
pub const DEFAULT_INNER_MAX_ITERS: u64 = 100_000;

/// Result of maximizing the SVM dual for a fixed Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolve {
    pub alphas: Vec<f64>,
    /// Norm of the gradient mapping at the last iterate.
    pub residual: f64,
    pub iters: u64,
    pub converged: bool,
}

/// Box for `α_i` derived from the conjugate domain: with `u_i = -λ N α_i`
/// required to lie in the domain of `ℓ*(·, y_i)`.
pub fn alpha_box(loss: LossKind, y: f64, lambda: f64, normalizer: f64) -> (f64, f64) {
    let (lo, hi) = loss.conjugate_domain(y);
    let scale = lambda * normalizer;
    (-hi / scale, -lo / scale)
}

/// Dual objective `G(α) = -(λ/2) αᵀKα + λ Σ α_i y_i`, or `None` when `α`
/// leaves the box (the conjugate is infinite there).
pub fn dual_value(
    k: &DMatrix<f64>,
    labels: &[f64],
    alphas: &[f64],
    loss: LossKind,
    lambda: f64,
    normalizer: f64,
) -> Option<f64> {
    let mut lin = 0.0;
    for (a, y) in alphas.iter().zip(labels) {
        let u = -lambda * normalizer * a;
        lin -= loss.conjugate(u, *y)? / normalizer;
    }
    let a = DVector::from_column_slice(alphas);
    Some(-0.5 * lambda * a.dot(&(k * &a)) + lin)
}

/// Primal objective at `w = Σ α_j φ(x_j)`: `(λ/2) αᵀKα + (1/N) Σ ℓ((Kα)_i, y_i)`.
pub fn primal_value(
    k: &DMatrix<f64>,
    labels: &[f64],
    alphas: &[f64],
    loss: LossKind,
    lambda: f64,
    normalizer: f64,
) -> f64 {
    let a = DVector::from_column_slice(alphas);
    let f = k * &a;
    let emp: f64 = f.iter().zip(labels).map(|(z, y)| loss.value(*z, *y)).sum();
    0.5 * lambda * a.dot(&f) + emp / normalizer
}

/// Maximizes `-(1/2) αᵀKα + yᵀα` over the box by accelerated projected
/// gradient ascent (step `1/λmax(K)`, momentum restarted whenever it points
/// uphill). Stops when the gradient mapping norm drops to `tol`.
pub fn solve_dual(
    k: &DMatrix<f64>,
    labels: &[f64],
    loss: LossKind,
    lambda: f64,
    normalizer: f64,
    tol: f64,
    max_iters: u64,
    warm: Option<&[f64]>,
) -> DualSolve {
    let m = labels.len();
    let boxes: Vec<(f64, f64)> = labels
        .iter()
        .map(|y| alpha_box(loss, *y, lambda, normalizer))
        .collect();
    let project = |v: &mut DVector<f64>| {
        for (x, (lo, hi)) in v.iter_mut().zip(&boxes) {
            *x = x.clamp(*lo, *hi);
        }
    };
    let y = DVector::from_column_slice(labels);
    let lip = max_eigenvalue_psd(k);
    let step = if lip > 0.0 { 1.0 / lip } else { 1.0 };
    let scale = if lip > 0.0 { lip } else { 1.0 };

    let mut x = match warm {
        Some(w) if w.len() == m => DVector::from_column_slice(w),
        _ => DVector::zeros(m),
    };
    project(&mut x);
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    while iters < max_iters {
        iters += 1;
        let grad = &y - k * &z;
        let mut next = &z + grad * step;
        project(&mut next);
        residual = (&next - &z).norm() * scale;
        if residual <= tol {
            x = next;
            return DualSolve {
                alphas: x.as_slice().to_vec(),
                residual,
                iters,
                converged: true,
            };
        }
        let uphill = (&z - &next).dot(&(&next - &x)) > 0.0;
        if uphill {
            t = 1.0;
            z = next.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            z = &next + (&next - &x) * ((t - 1.0) / t_next);
            project(&mut z);
            t = t_next;
        }
        x = next;
    }
    DualSolve {
        alphas: x.as_slice().to_vec(),
        residual,
        iters,
        converged: false,
    }
}

/// Fixed-kernel SVM trained through its dual. Non-convergence is reported
/// as an error; the model report carries the duality gap.
pub fn svm_dual_train(
    spec: &KernelSpec,
    points: &[HypercubePoint],
    labels: &[f64],
    loss: LossKind,
    lambda: f64,
    tol: f64,
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
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    for &y in labels {
        loss.check_label(y)?;
    }
    let k = gram(spec, points)?;
    let m = labels.len() as f64;
    let sol = solve_dual(&k, labels, loss, lambda, m, tol, DEFAULT_INNER_MAX_ITERS, None);
    if !sol.converged {
        return Err(Error::Numerical(format!(
            "dual solver stopped after {} iterations with residual {:e}",
            sol.iters, sol.residual
        )));
    }
    let primal = primal_value(&k, labels, &sol.alphas, loss, lambda, m);
    let dual = dual_value(&k, labels, &sol.alphas, loss, lambda, m).unwrap_or(f64::NEG_INFINITY);
    Ok(TrainedModel::new(spec.clone(), points.to_vec(), sol.alphas)?.with_report(ModelReport {
        objective: primal,
        gap: (primal - dual).abs(),
        iters: sol.iters,
        seed: 0,
    }))
}
