//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Deterministic start vector. The result is padded by `1e-6` relative; a
/// gradient step of `1 / estimate` stays well inside the stable range `2 / L`
/// even when the iteration stops early.
pub fn max_eigenvalue_psd(a: &DMatrix<f64>) -> f64 {
    let m = a.nrows();
    if m == 0 {
        return 0.0;
    }
    let bound = a
        .row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if bound == 0.0 {
        return 0.0;
    }
    // Slightly irregular start to avoid orthogonality with the top eigenvector.
    let mut v = DVector::from_fn(m, |i, _| 1.0 + 0.01 * ((i * 7919) % 101) as f64);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..500 {
        let w = a * &v;
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - est).abs() <= 1e-10 * next.abs() {
            est = next;
            break;
        }
        est = next;
    }
    // For a unit vector, v'Av <= |Av| <= lambda_max.
    let refined = (a * &v).norm();
    refined.max(est).min(bound) * (1.0 + 1e-6)
}

/// Euclidean projection onto `{x >= 0, Σx <= 1}`.
pub fn project_subsimplex(v: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    project_simplex(v)
}

/// Euclidean projection onto the probability simplex `{x >= 0, Σx = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, x) in u.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// `xᵀ A x`.
pub fn quad_form(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(a * x))
}
