//! Brute-force ground truth for small layers: explicit Gram matrices over all
//! weight-`p` points and their dense eigendecomposition.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{choose, BetaCoeffs, LayerParams};
use crate::error::{Error, Result};

pub const ORACLE_MAX_N: usize = 12;

#[derive(Clone, Debug)]
pub struct ExplicitGram {
    pub layer: LayerParams,
    /// Weight-`p` points in increasing numeric (lexicographic) order.
    pub points: Vec<u64>,
    pub matrix: DMatrix<f64>,
}

/// All weight-`p` bit vectors of length `n`, in increasing order.
pub fn layer_points(layer: LayerParams) -> Result<Vec<u64>> {
    if layer.n() > ORACLE_MAX_N {
        return Err(Error::OracleTooLarge {
            n: layer.n(),
            limit: ORACLE_MAX_N,
        });
    }
    Ok((0u64..1 << layer.n())
        .filter(|x| x.count_ones() as usize == layer.p())
        .collect())
}

/// Explicit Gram of an inner-product function `g(<x, y>)` over the whole layer.
pub fn oracle_gram_fn(layer: LayerParams, g: impl Fn(usize) -> f64) -> Result<ExplicitGram> {
    let points = layer_points(layer)?;
    let m = points.len();
    let matrix = DMatrix::from_fn(m, m, |i, j| g((points[i] & points[j]).count_ones() as usize));
    Ok(ExplicitGram {
        layer,
        points,
        matrix,
    })
}

/// Entry `(i, j)` is `Σ_l β_l C(<x_i, x_j>, l)`, evaluated term by term.
pub fn oracle_gram(beta: &BetaCoeffs) -> Result<ExplicitGram> {
    oracle_gram_fn(beta.layer, |k| {
        beta.beta
            .iter()
            .enumerate()
            .map(|(l, b)| b * choose(k, l))
            .sum()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenCluster {
    pub value: f64,
    pub multiplicity: usize,
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn spectral_norm(eigs: &[f64]) -> f64 {
    eigs.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Sorted (descending) eigenvalues of a symmetric matrix.
pub fn sorted_eigenvalues(matrix: &DMatrix<f64>) -> Vec<f64> {
    let mut eigs: Vec<f64> = matrix.clone().symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| b.total_cmp(a));
    eigs
}

/// Distinct eigenvalues (descending) with multiplicities. Values within
/// `1e-8 * ‖matrix‖` of a cluster's leading value join that cluster.
pub fn oracle_eigenvalues(gram: &ExplicitGram) -> Vec<EigenCluster> {
    cluster_eigenvalues(&sorted_eigenvalues(&gram.matrix), 1e-8)
}

pub fn cluster_eigenvalues(sorted_desc: &[f64], rel_tol: f64) -> Vec<EigenCluster> {
    let tol = rel_tol * spectral_norm(sorted_desc);
    let mut out: Vec<(f64, f64, usize)> = Vec::new(); // (leader, sum, count)
    for &v in sorted_desc {
        match out.last_mut() {
            Some((leader, sum, count)) if (*leader - v).abs() <= tol => {
                *sum += v;
                *count += 1;
            }
            _ => out.push((v, v, 1)),
        }
    }
    out.into_iter()
        .map(|(_, sum, count)| EigenCluster {
            value: sum / count as f64,
            multiplicity: count,
        })
        .collect()
}
