use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::dual::{
    dual_value, primal_value, solve_dual, DEFAULT_INNER_MAX_ITERS, DEFAULT_INNER_TOL,
};
use super::loss::LossKind;
use crate::error::{Error, Result};
use crate::kernels::{mix_vertices, HypercubePoint, KernelKind, KernelSpec, ModelReport, TrainedModel};
use crate::linalg::{project_subsimplex, quad_form};
use crate::scheme::{vertex_g_tables, LayerParams};

/// One layer of the MKL program: vertex Grams `K_t`, labels and `λ`.
///
/// `normalizer` is the `N` of the empirical term `(1/N) Σ ℓ`; it is the
/// layer sample size unless the layer is part of a larger sample.
#[derive(Clone, Debug, PartialEq)]
pub struct MklLayerProblem {
    pub vertex_grams: Vec<DMatrix<f64>>,
    pub labels: Vec<f64>,
    pub lambda: f64,
    pub loss: LossKind,
    pub normalizer: f64,
}

impl MklLayerProblem {
    pub fn new(vertex_grams: Vec<DMatrix<f64>>, labels: Vec<f64>, lambda: f64, loss: LossKind) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(Error::EmptyDataset);
        }
        if vertex_grams.is_empty() {
            return Err(Error::InvalidArgument("no vertex kernels".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        for &y in &labels {
            loss.check_label(y)?;
        }
        for k in &vertex_grams {
            if k.shape() != (m, m) {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: k.nrows(),
                });
            }
            for i in 0..m {
                if k[(i, i)] > 1.0 + 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "vertex Gram diagonal {} exceeds 1",
                        k[(i, i)]
                    )));
                }
                for j in 0..i {
                    if (k[(i, j)] - k[(j, i)]).abs() > 1e-12 * (1.0 + k[(i, j)].abs()) {
                        return Err(Error::InvalidArgument("vertex Gram is not symmetric".into()));
                    }
                }
            }
        }
        Ok(Self {
            vertex_grams,
            labels,
            lambda,
            loss,
            normalizer: m as f64,
        })
    }

    /// Layer problem from points that all share one weight.
    pub fn from_points(points: &[HypercubePoint], labels: Vec<f64>, lambda: f64, loss: LossKind) -> Result<Self> {
        Self::new(vertex_grams(points)?, labels, lambda, loss)
    }

    pub fn with_normalizer(mut self, normalizer: f64) -> Self {
        self.normalizer = normalizer;
        self
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn num_kernels(&self) -> usize {
        self.vertex_grams.len()
    }

    /// `K_β = Σ_t β_t K_t`.
    pub fn combined_gram(&self, beta: &[f64]) -> DMatrix<f64> {
        let m = self.m();
        let mut k = DMatrix::zeros(m, m);
        for (b, kt) in beta.iter().zip(&self.vertex_grams) {
            if *b != 0.0 {
                k += kt * *b;
            }
        }
        k
    }

    pub fn primal(&self, beta: &[f64], alphas: &[f64]) -> f64 {
        primal_value(
            &self.combined_gram(beta),
            &self.labels,
            alphas,
            self.loss,
            self.lambda,
            self.normalizer,
        )
    }

    /// `G(α, β)`, `None` outside the conjugate domain.
    pub fn dual(&self, beta: &[f64], alphas: &[f64]) -> Option<f64> {
        dual_value(
            &self.combined_gram(beta),
            &self.labels,
            alphas,
            self.loss,
            self.lambda,
            self.normalizer,
        )
    }

    /// Inner maximization at fixed `β`.
    pub fn solve_inner(&self, beta: &[f64], tol: f64, max_iters: u64, warm: Option<&[f64]>) -> super::dual::DualSolve {
        solve_dual(
            &self.combined_gram(beta),
            &self.labels,
            self.loss,
            self.lambda,
            self.normalizer,
            tol,
            max_iters,
            warm,
        )
    }
}

/// Vertex Grams for points on one layer, in vertex order `t = 0..=p'` of the
/// canonical layer `p' = min(p, n - p)`.
pub fn vertex_grams(points: &[HypercubePoint]) -> Result<Vec<DMatrix<f64>>> {
    let first = points.first().ok_or(Error::EmptyDataset)?;
    let (n, p) = (first.n(), first.weight());
    if let Some(x) = points.iter().find(|x| x.n() != n || x.weight() != p) {
        return Err(Error::InvalidArgument(format!(
            "vertex Grams need one layer: found weight {} (n = {}) next to weight {p} (n = {n})",
            x.weight(),
            x.n()
        )));
    }
    let layer = LayerParams::new(n, p)?;
    let offset = if layer.is_canonical() { 0 } else { 2 * p - n };
    let tables = vertex_g_tables(layer.canonical())?;
    let m = points.len();
    let mut grams = vec![DMatrix::zeros(m, m); tables.len()];
    for i in 0..m {
        for j in 0..=i {
            let k = points[i].inner(&points[j]) - offset;
            for (g, table) in grams.iter_mut().zip(&tables) {
                g[(i, j)] = table[k];
                g[(j, i)] = table[k];
            }
        }
    }
    Ok(grams)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MklOptions {
    pub outer_iters: usize,
    pub inner_tol: f64,
    pub inner_max_iters: u64,
    /// `c` in the outer step `c / sqrt(k)`.
    pub step_scale: f64,
}

impl Default for MklOptions {
    fn default() -> Self {
        Self {
            outer_iters: 500,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max_iters: DEFAULT_INNER_MAX_ITERS,
            step_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MklSolution {
    /// Kernel weights on the vertices, `β >= 0`, `Σβ <= 1`.
    pub beta_simplex: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Best dual objective `G(β) = sup_α G(α, β)` found.
    pub objective: f64,
    /// `|F - G|` at the returned pair.
    pub gap: f64,
    /// Best-so-far objective after each outer iteration.
    pub trace: Vec<f64>,
    pub outer_iters: usize,
    pub inner_iters: u64,
    /// False if any inner solve hit its iteration cap.
    pub inner_converged: bool,
    pub max_inner_residual: f64,
}

/// `|F(β, α) - G(α, β)|`; `+∞` when `α` is outside the conjugate domain.
pub fn duality_gap(problem: &MklLayerProblem, beta: &[f64], alphas: &[f64]) -> Result<f64> {
    if beta.len() != problem.num_kernels() {
        return Err(Error::DimensionMismatch {
            expected: problem.num_kernels(),
            got: beta.len(),
        });
    }
    if alphas.len() != problem.m() {
        return Err(Error::DimensionMismatch {
            expected: problem.m(),
            got: alphas.len(),
        });
    }
    let sum: f64 = beta.iter().sum();
    if beta.iter().any(|b| *b < -1e-10) || sum > 1.0 + 1e-10 {
        return Err(Error::InvalidArgument(format!("beta {beta:?} is outside the simplex")));
    }
    let f = problem.primal(beta, alphas);
    Ok(match problem.dual(beta, alphas) {
        Some(g) => (f - g).abs(),
        None => f64::INFINITY,
    })
}

/// Minimizes `G(β) = sup_α G(α, β)` over `{β >= 0, Σβ <= 1}`.
///
/// Outer loop: normalized projected subgradient steps of length
/// `c / sqrt(k)`, with subgradient `-(λ/2) αᵀ K_t α` at the inner optimum.
/// Inner loop: [`solve_dual`] warm-started from the previous `α`.
pub fn mkl_layer_solve(problem: &MklLayerProblem, opts: &MklOptions) -> Result<MklSolution> {
    let d = problem.num_kernels();
    let mut beta = vec![1.0 / d as f64; d];
    let mut alphas: Option<Vec<f64>> = None;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut trace = Vec::with_capacity(opts.outer_iters);
    let mut inner_iters = 0;
    let mut inner_converged = true;
    let mut max_residual: f64 = 0.0;
    let mut done = 0;

    for k in 1..=opts.outer_iters.max(1) {
        done = k;
        let sol = problem.solve_inner(&beta, opts.inner_tol, opts.inner_max_iters, alphas.as_deref());
        inner_iters += sol.iters;
        inner_converged &= sol.converged;
        max_residual = max_residual.max(sol.residual);
        let g = problem
            .dual(&beta, &sol.alphas)
            .ok_or_else(|| Error::Numerical("inner iterate left the dual box".into()))?;
        if best.as_ref().is_none_or(|b| g < b.0) {
            best = Some((g, beta.clone(), sol.alphas.clone()));
        }
        trace.push(best.as_ref().map(|b| b.0).unwrap_or(g));

        let a = DVector::from_column_slice(&sol.alphas);
        let sub: Vec<f64> = problem
            .vertex_grams
            .iter()
            .map(|kt| -0.5 * problem.lambda * quad_form(kt, &a))
            .collect();
        alphas = Some(sol.alphas);
        let norm = sub.iter().map(|s| s * s).sum::<f64>().sqrt();
        if norm == 0.0 || d == 1 && beta[0] == 1.0 {
            break;
        }
        let step = opts.step_scale / (k as f64).sqrt() / norm;
        let moved: Vec<f64> = beta.iter().zip(&sub).map(|(b, s)| b - step * s).collect();
        beta = project_subsimplex(&moved);
    }

    let (objective, beta, alphas) = best.expect("at least one outer iteration");
    let gap = duality_gap(problem, &beta, &alphas)?;
    Ok(MklSolution {
        beta_simplex: beta,
        alphas,
        objective,
        gap,
        trace,
        outer_iters: done,
        inner_iters,
        inner_converged,
        max_inner_residual: max_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MklTrainConfig {
    pub b: f64,
    pub epsilon: f64,
    /// Replaces `λ = ε / (n B²)` when set.
    pub lambda_override: Option<f64>,
    pub loss: LossKind,
    pub options: MklOptions,
}

impl MklTrainConfig {
    pub fn new(b: f64, epsilon: f64, loss: LossKind) -> Self {
        Self {
            b,
            epsilon,
            lambda_override: None,
            loss,
            options: MklOptions::default(),
        }
    }
}

/// `λ = ε / (n B²)`.
pub fn mkl_lambda(n: usize, b: f64, epsilon: f64) -> f64 {
    epsilon / (n as f64 * b * b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerSolution {
    pub p: usize,
    /// Positions of this layer's points in the training sample.
    pub indices: Vec<usize>,
    pub solution: MklSolution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MklTrainOutput {
    pub lambda: f64,
    pub layers: Vec<LayerSolution>,
    /// Sum of the layer objectives.
    pub objective: f64,
    /// Sum of the layer gaps.
    pub gap: f64,
    pub model: TrainedModel,
}

/// Splits the sample by weight and solves every occupied layer separately.
/// Each layer keeps the global `1/m` in front of its loss terms, so the
/// layer objectives add up to the objective of the whole direct sum.
pub fn mkl_train(points: &[HypercubePoint], labels: &[f64], cfg: &MklTrainConfig) -> Result<MklTrainOutput> {
    let first = points.first().ok_or(Error::EmptyDataset)?;
    let n = first.n();
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: labels.len(),
        });
    }
    if let Some(x) = points.iter().find(|x| x.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.n(),
        });
    }
    if !(cfg.b > 0.0) || !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need B > 0 and epsilon in (0, 1), got B = {}, epsilon = {}",
            cfg.b, cfg.epsilon
        )));
    }
    let lambda = cfg.lambda_override.unwrap_or_else(|| mkl_lambda(n, cfg.b, cfg.epsilon));
    let m = points.len() as f64;

    let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (i, x) in points.iter().enumerate() {
        by_layer[x.weight()].push(i);
    }
    let mut layers = Vec::new();
    let mut alphas = vec![0.0; points.len()];
    let mut kernels = Vec::new();
    let mut objective = 0.0;
    let mut gap = 0.0;
    let mut iters = 0;
    for (p, indices) in by_layer.into_iter().enumerate() {
        if indices.is_empty() {
            continue;
        }
        let pts: Vec<HypercubePoint> = indices.iter().map(|&i| points[i]).collect();
        let ys: Vec<f64> = indices.iter().map(|&i| labels[i]).collect();
        let problem = MklLayerProblem::from_points(&pts, ys, lambda, cfg.loss)?.with_normalizer(m);
        let solution = mkl_layer_solve(&problem, &cfg.options)?;
        for (&i, a) in indices.iter().zip(&solution.alphas) {
            alphas[i] = *a;
        }
        let canon = LayerParams::new(n, p)?.canonical();
        kernels.push((p, mix_vertices(canon, &solution.beta_simplex)?));
        objective += solution.objective;
        gap += solution.gap;
        iters += solution.inner_iters;
        layers.push(LayerSolution { p, indices, solution });
    }
    let spec = KernelSpec::direct_sum(n, KernelKind::DirectSum, kernels)?;
    let model = TrainedModel::new(spec, points.to_vec(), alphas)?.with_report(ModelReport {
        objective,
        gap,
        iters,
        seed: 0,
    });
    Ok(MklTrainOutput {
        lambda,
        layers,
        objective,
        gap,
        model,
    })
}
