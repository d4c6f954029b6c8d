use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use super::mkl::vertex_grams;
use crate::error::{Error, Result};
use crate::kernels::HypercubePoint;
use crate::linalg::quad_form;
use crate::rng::{stream_rng, streams};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    /// `sqrt(2e B² ln n / m)`.
    pub bound: f64,
    /// Per occupied layer `(p, mean of max_t σᵀK_tσ)`; the share each layer
    /// takes of the total.
    pub layer_terms: Vec<(usize, f64)>,
}

/// `sqrt(2e B² ln n / m)`.
pub fn rademacher_bound(n: usize, m: usize, b: f64) -> f64 {
    (2.0 * std::f64::consts::E * b * b * (n as f64).ln() / m as f64).sqrt()
}

/// Monte-Carlo estimate of the empirical Rademacher complexity of the
/// direct-sum class with norm bound `B`.
///
/// Each trial draws signs `σ` and evaluates `(B/m) sqrt(Σ_p max_t σ_pᵀ K_{p,t} σ_p)`
/// where `K_{p,t}` are the vertex Grams of layer `p`. The sup of a linear
/// function over the kernel polytope sits at a vertex, so the max over `t`
/// is exact.
pub fn rademacher_estimate(points: &[HypercubePoint], b: f64, trials: usize, seed: u64) -> Result<RademacherEstimate> {
    let first = points.first().ok_or(Error::EmptyDataset)?;
    let n = first.n();
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if let Some(x) = points.iter().find(|x| x.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.n(),
        });
    }
    let m = points.len();
    let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (i, x) in points.iter().enumerate() {
        by_layer[x.weight()].push(i);
    }
    let layers: Vec<(usize, Vec<usize>, Vec<DMatrix<f64>>)> = by_layer
        .into_iter()
        .enumerate()
        .filter(|(_, idx)| !idx.is_empty())
        .map(|(p, idx)| {
            let pts: Vec<HypercubePoint> = idx.iter().map(|&i| points[i]).collect();
            vertex_grams(&pts).map(|g| (p, idx, g))
        })
        .collect::<Result<_>>()?;

    let mut rng = stream_rng(seed, streams::RADEMACHER);
    let mut values = Vec::with_capacity(trials);
    let mut layer_sums = vec![0.0; layers.len()];
    for _ in 0..trials {
        let sigma: Vec<f64> = (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let mut total = 0.0;
        for ((_, idx, grams), acc) in layers.iter().zip(layer_sums.iter_mut()) {
            let s = DVector::from_iterator(idx.len(), idx.iter().map(|&i| sigma[i]));
            let best = grams
                .iter()
                .map(|k| quad_form(k, &s))
                .fold(f64::NEG_INFINITY, f64::max);
            *acc += best;
            total += best;
        }
        values.push(b / m as f64 * total.max(0.0).sqrt());
    }
    let mean = values.iter().sum::<f64>() / trials as f64;
    let stderr = if trials > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(RademacherEstimate {
        mean,
        stderr,
        trials,
        bound: rademacher_bound(n, m, b),
        layer_terms: layers
            .iter()
            .zip(layer_sums)
            .map(|((p, _, _), s)| (*p, s / trials as f64))
            .collect(),
    })
}
