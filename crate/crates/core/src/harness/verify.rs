use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::kernels::{analytic_weights, gram, mix_vertices, sparse_conjunction_kernel, universal_kernel, HypercubePoint, KernelKind, KernelSpec};
use crate::learners::{mkl_layer_solve, vertex_grams, LossKind, MklLayerProblem, MklOptions};
use crate::linalg::quad_form;
use crate::rng::{stream_rng, streams};
use crate::scheme::oracle::{cluster_eigenvalues, layer_points, oracle_gram, sorted_eigenvalues, spectral_norm};
use crate::scheme::{
    delta_matrix, eigen_profile, eigen_profile_from_table, eta_vector, is_admissible, vertex_betas,
    vertex_g_tables, BetaCoeffs, DeltaMatrix, LayerParams,
};

/// Faults that can be planted to show the suite catches them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Fault {
    /// Negates `Δ[0][1]` before the spectral comparison.
    #[serde(rename = "delta-sign")]
    DeltaSign,
    /// Scales every vertex by 1.5 before the validity check.
    #[serde(rename = "vertex-norm")]
    VertexNorm,
    /// Negates `ℓ*` in the Fenchel-Young check.
    #[serde(rename = "conjugate-sign")]
    ConjugateSign,
}

impl Fault {
    pub const ALL: [Fault; 3] = [Fault::DeltaSign, Fault::VertexNorm, Fault::ConjugateSign];

    pub fn name(self) -> &'static str {
        match self {
            Fault::DeltaSign => "delta-sign",
            Fault::VertexNorm => "vertex-norm",
            Fault::ConjugateSign => "conjugate-sign",
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Fault::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown fault '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub module: &'static str,
    pub check: &'static str,
    /// The instance; on failure, narrowed to the failing case.
    pub params: Value,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(module: &'static str, check: &'static str, params: Value) -> Self {
        Self {
            module,
            check,
            params,
            passed: true,
            detail: String::new(),
        }
    }

    fn fail(module: &'static str, check: &'static str, params: Value, detail: String) -> Self {
        Self {
            module,
            check,
            params,
            passed: false,
            detail,
        }
    }

    fn from_outcome(module: &'static str, check: &'static str, params: Value, outcome: Outcome) -> Self {
        match outcome {
            None => Self::pass(module, check, params),
            Some((p, detail)) => Self::fail(module, check, p, detail),
        }
    }
}

/// `None` on success, otherwise the failing parameters and a message.
type Outcome = Option<(Value, String)>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub max_n: usize,
    pub fault: Option<Fault>,
    /// Random coefficient vectors per layer in the characterization check.
    pub characterization_samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            max_n: 8,
            fault: None,
            characterization_samples: 300,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub options: VerifyOptions,
    pub total: usize,
    pub failed: usize,
    pub failures: Vec<CheckResult>,
    pub checks: Vec<CheckResult>,
}

pub fn verify_suite(max_n: usize, fault: Option<Fault>) -> Result<VerifyReport> {
    verify_with(&VerifyOptions {
        max_n,
        fault,
        ..VerifyOptions::default()
    })
}

/// Runs every oracle-backed check on layers with `n <= max_n`. Failures are
/// data in the report; only setup problems are errors.
pub fn verify_with(opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.max_n == 0 || opts.max_n > 10 {
        return Err(Error::InvalidArgument(format!("max_n = {} outside 1..=10", opts.max_n)));
    }
    let mut checks = Vec::new();
    let mut rng = stream_rng(opts.seed, streams::VERIFY);
    for n in 1..=opts.max_n {
        for p in 0..=n / 2 {
            let layer = LayerParams::new(n, p)?;
            let params = json!({"n": n, "p": p});
            let mut delta = delta_matrix(layer)?;
            if opts.fault == Some(Fault::DeltaSign) && p >= 1 {
                let mut rows = delta.rows().to_vec();
                rows[0][1] = -rows[0][1];
                delta = DeltaMatrix::from_rows_unchecked(layer, rows);
            }
            checks.push(CheckResult::from_outcome(
                "scheme",
                "spectral",
                params.clone(),
                spectral_check(layer, &delta)?,
            ));
            checks.push(CheckResult::from_outcome(
                "scheme",
                "vertex_validity",
                params.clone(),
                vertex_check(layer, opts.fault == Some(Fault::VertexNorm))?,
            ));
            checks.push(CheckResult::from_outcome(
                "scheme",
                "characterization",
                params.clone(),
                characterization_check(layer, opts.characterization_samples, &mut rng)?,
            ));
        }
        checks.push(CheckResult::from_outcome(
            "kernels",
            "complement_consistency",
            json!({"n": n}),
            complement_check(n, &mut rng)?,
        ));
    }
    for (n, p) in [(4, 2), (6, 2), (6, 3), (8, 3)] {
        if n <= opts.max_n {
            checks.push(CheckResult::from_outcome(
                "kernels",
                "universal_containment",
                json!({"n": n, "p": p}),
                containment_check(LayerParams::new(n, p)?, 25, &mut rng)?,
            ));
        }
    }
    let n = opts.max_n;
    for s in 1..=n {
        checks.push(CheckResult::from_outcome(
            "kernels",
            "conjunction_exactness",
            json!({"n": n, "s": s}),
            conjunction_check(n, s, &mut rng)?,
        ));
    }
    for loss in [LossKind::Hinge, LossKind::Absolute] {
        checks.push(CheckResult::from_outcome(
            "learners",
            "fenchel_young",
            json!({"loss": loss.name()}),
            fenchel_young_check(loss, opts.fault == Some(Fault::ConjugateSign)),
        ));
    }
    for (k, (n, m, loss)) in [(4, 10, LossKind::Hinge), (6, 16, LossKind::Absolute), (8, 20, LossKind::Hinge)]
        .into_iter()
        .enumerate()
    {
        if n <= opts.max_n {
            checks.push(CheckResult::from_outcome(
                "learners",
                "duality_gap",
                json!({"n": n, "m": m, "loss": loss.name(), "instance": k}),
                gap_check(n, m, loss, opts.seed.wrapping_add(k as u64))?,
            ));
        }
    }
    let failures: Vec<CheckResult> = checks.iter().filter(|c| !c.passed).cloned().collect();
    Ok(VerifyReport {
        passed: failures.is_empty(),
        options: opts.clone(),
        total: checks.len(),
        failed: failures.len(),
        failures,
        checks,
    })
}

/// Eigenvalues `Δ[j][l]` with multiplicities `C(n,j) - C(n,j-1)` against the
/// dense spectrum of the explicit basis Gram `C(<x,y>, l)`.
pub fn spectral_check(layer: LayerParams, delta: &DeltaMatrix) -> Result<Outcome> {
    let (n, p) = (layer.n(), layer.p());
    for l in 0..=p {
        let mut e = vec![0.0; p + 1];
        e[l] = 1.0;
        let explicit = oracle_gram(&BetaCoeffs::new(layer, e)?)?;
        let eigs = sorted_eigenvalues(&explicit.matrix);
        let scale = spectral_norm(&eigs).max(1.0);
        let tol = 1e-8 * scale;
        let clusters = cluster_eigenvalues(&eigs, 1e-8);
        for j in 0..=p {
            let value = delta.get(j, l);
            let claimed: u128 = (0..=p)
                .filter(|&i| (delta.get(i, l) - value).abs() <= tol)
                .map(|i| layer.multiplicity(i))
                .sum();
            let found = clusters.iter().find(|c| (c.value - value).abs() <= tol);
            let bad = match found {
                None => Some(format!("eigenvalue {value} absent from the dense spectrum")),
                Some(c) if c.multiplicity as u128 != claimed => Some(format!(
                    "eigenvalue {value} has multiplicity {} in the dense spectrum, formula gives {claimed}",
                    c.multiplicity
                )),
                Some(_) => None,
            };
            if let Some(msg) = bad {
                return Ok(Some((json!({"n": n, "p": p, "l": l, "j": j}), msg)));
            }
        }
    }
    Ok(None)
}

/// Unit diagonal and a single nonzero eigenvalue, for both the exact
/// inner-product tables and the P-basis coefficients.
pub fn vertex_check(layer: LayerParams, plant_fault: bool) -> Result<Outcome> {
    let (n, p) = (layer.n(), layer.p());
    let eta = eta_vector(layer);
    let tables = vertex_g_tables(layer)?;
    for (i, beta) in vertex_betas(layer)?.into_iter().enumerate() {
        let scale = if plant_fault { 1.5 } else { 1.0 };
        let beta = BetaCoeffs::new(layer, beta.beta.iter().map(|b| b * scale).collect())?;
        let table: Vec<f64> = tables[i].iter().map(|g| g * scale).collect();
        let here = || json!({"n": n, "p": p, "i": i});
        let diag = eta.dot(&beta.beta);
        if (diag - 1.0).abs() > 1e-12 {
            return Ok(Some((here(), format!("<eta, beta> = {diag}, expected 1"))));
        }
        if (table[p] - 1.0).abs() > 1e-12 {
            return Ok(Some((here(), format!("table diagonal {}, expected 1", table[p]))));
        }
        for profile in [eigen_profile(&beta)?, eigen_profile_from_table(layer, &table)?] {
            let top = profile.lambdas[i];
            if !(top > 0.0) {
                return Ok(Some((here(), format!("eigenvalue on V_{i} is {top}"))));
            }
            if let Some((j, v)) = profile
                .lambdas
                .iter()
                .enumerate()
                .find(|&(j, v)| j != i && v.abs() > 1e-9 * top)
            {
                return Ok(Some((here(), format!("stray eigenvalue {v:e} on V_{j}"))));
            }
        }
    }
    Ok(None)
}

/// Random `β` around the admissible polytope, half as mixtures of vertices
/// with slightly negative or excess weight, half uniform in `[-1, 1]`.
fn random_beta(layer: LayerParams, vertices: &[BetaCoeffs], rng: &mut impl Rng) -> Vec<f64> {
    let d = layer.p() + 1;
    if rng.random_bool(0.5) {
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-0.1..1.0)).collect();
        let norm: f64 = w.iter().map(|x| x.abs()).sum::<f64>().max(1e-12);
        let total = rng.random_range(0.7..1.3);
        let mut beta = vec![0.0; d];
        for (v, wi) in vertices.iter().zip(&w) {
            for (b, c) in beta.iter_mut().zip(&v.beta) {
                *b += total * wi / norm * c;
            }
        }
        beta
    } else {
        (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
}

/// `is_admissible` against the dense test: minimum eigenvalue of the
/// explicit Gram `>= -1e-8 * scale` and diagonal `<= 1 + 1e-8`.
pub fn characterization_check(layer: LayerParams, samples: usize, rng: &mut impl Rng) -> Result<Outcome> {
    let vertices = vertex_betas(layer)?;
    for k in 0..samples {
        let beta = BetaCoeffs::new(layer, random_beta(layer, &vertices, rng))?;
        let fast = is_admissible(&beta, 1e-8)?.admissible;
        let explicit = oracle_gram(&beta)?;
        let eigs = sorted_eigenvalues(&explicit.matrix);
        let scale = spectral_norm(&eigs).max(1.0);
        let min = *eigs.last().expect("layer is nonempty");
        let diag = explicit.matrix[(0, 0)];
        let dense = min >= -1e-8 * scale && diag <= 1.0 + 1e-8;
        if fast != dense {
            return Ok(Some((
                json!({"n": layer.n(), "p": layer.p(), "sample": k, "beta": beta.beta}),
                format!("is_admissible = {fast}, dense oracle = {dense} (min eig {min:e}, diagonal {diag})"),
            )));
        }
    }
    Ok(None)
}

/// `k(x, y) = k(x̄, ȳ)` for all pairs on every layer, for the universal
/// kernel and a random mixture of vertices.
pub fn complement_check(n: usize, rng: &mut impl Rng) -> Result<Outcome> {
    let canonical: Vec<_> = (0..=n / 2)
        .map(|p| {
            let raw: Vec<f64> = (0..=p).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            mix_vertices(LayerParams::new(n, p)?, &raw.iter().map(|r| r / total).collect::<Vec<_>>())
        })
        .collect::<Result<_>>()?;
    let mixed = KernelSpec::direct_sum(
        n,
        KernelKind::DirectSum,
        (0..=n).map(|p| (p, canonical[p.min(n - p)].clone())),
    )?;
    for (name, spec) in [("universal", universal_kernel(n)?), ("mixture", mixed)] {
        for p in 0..=n {
            let pts = layer_points(LayerParams::new(n, p)?)?;
            for &a in &pts {
                for &b in &pts {
                    let x = HypercubePoint::new(a, n)?;
                    let y = HypercubePoint::new(b, n)?;
                    let direct = spec.evaluate(&x, &y)?;
                    let flipped = spec.evaluate(&x.complement(), &y.complement())?;
                    if direct != flipped {
                        return Ok(Some((
                            json!({"n": n, "p": p, "kernel": name, "x": x.to_string(), "y": y.to_string()}),
                            format!("k(x, y) = {direct} but k(x̄, ȳ) = {flipped}"),
                        )));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// For `K_β = Σ λ_t K_t`: `Σ λ_t αᵀK_tα = αᵀK_βα` and
/// `Σ ((p+1) λ_t)² αᵀK_tα <= (p+1)² αᵀK_βα`, both to `1e-10` relative.
pub fn containment_check(layer: LayerParams, trials: usize, rng: &mut impl Rng) -> Result<Outcome> {
    let (n, p) = (layer.n(), layer.p());
    let all = layer_points(layer)?;
    for trial in 0..trials {
        let raw: Vec<f64> = (0..=p).map(|_| -rng.random::<f64>().ln()).collect();
        let total: f64 = raw.iter().sum();
        let lambda: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let m = rng.random_range(2..=all.len().min(20));
        let pts: Vec<HypercubePoint> = sample(rng, all.len(), m)
            .into_iter()
            .map(|i| HypercubePoint::new(all[i], n))
            .collect::<Result<_>>()?;
        let alpha = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let grams = vertex_grams(&pts)?;
        let spec = KernelSpec::direct_sum(n, KernelKind::DirectSum, [(p, mix_vertices(layer, &lambda)?)])?;
        let kb = gram(&spec, &pts)?;
        let q: Vec<f64> = grams.iter().map(|k| quad_form(k, &alpha)).collect();
        let qb = quad_form(&kb, &alpha);
        let lhs: f64 = lambda.iter().zip(&q).map(|(l, v)| l * v).sum();
        let here = || json!({"n": n, "p": p, "trial": trial});
        if (lhs - qb).abs() > 1e-10 * qb.abs().max(1e-300) {
            return Ok(Some((here(), format!("Σ λ_t αᵀK_tα = {lhs}, αᵀK_βα = {qb}"))));
        }
        let d = (p + 1) as f64;
        let norm: f64 = lambda.iter().zip(&q).map(|(l, v)| (d * l).powi(2) * v).sum();
        if norm > d * d * qb * (1.0 + 1e-10) {
            return Ok(Some((here(), format!("universal-space norm {norm} exceeds (p+1)² αᵀK_βα = {}", d * d * qb))));
        }
    }
    Ok(None)
}

/// The analytic model of `c_I` under `C(<x,y>, ℓ) / C(s, ℓ)` reproduces the
/// conjunction exactly on weight-`s` points, for every `ℓ <= s`.
pub fn conjunction_check(n: usize, s: usize, rng: &mut impl Rng) -> Result<Outcome> {
    for ell in 0..=s {
        let spec = sparse_conjunction_kernel(n, s, ell)?;
        let lits = sample(rng, n, ell).into_vec();
        let c = HypercubePoint::from_indices(n, &lits)?;
        let model = analytic_weights(&spec, c)?;
        for _ in 0..50 {
            let x = HypercubePoint::from_indices(n, &sample(rng, n, s).into_vec())?;
            let truth = if lits.iter().all(|&i| x.get(i)) { 1.0 } else { 0.0 };
            let f = model.predict(&x)?;
            if (f - truth).abs() > 1e-9 {
                return Ok(Some((
                    json!({"n": n, "s": s, "ell": ell, "x": x.to_string(), "literals": lits}),
                    format!("prediction {f}, conjunction {truth}"),
                )));
            }
        }
    }
    Ok(None)
}

/// `ℓ(z, y) = sup_a (a z - ℓ*(a, y))` on a grid of `z ∈ [-3, 3]`, to `1e-6`.
pub fn fenchel_young_check(loss: LossKind, plant_fault: bool) -> Outcome {
    let labels: &[f64] = &[-1.0, 1.0];
    for &y in labels {
        let (lo, hi) = loss.conjugate_domain(y);
        for kz in 0..=600 {
            let z = -3.0 + kz as f64 * 0.01;
            let sup = (0..=1000)
                .filter_map(|ka| {
                    let a = lo + (hi - lo) * ka as f64 / 1000.0;
                    let c = loss.conjugate(a, y)?;
                    Some(a * z - if plant_fault { -c } else { c })
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let value = loss.value(z, y);
            if (sup - value).abs() > 1e-6 {
                return Some((
                    json!({"loss": loss.name(), "y": y, "z": z}),
                    format!("sup_a (a z - ℓ*) = {sup}, ℓ = {value}"),
                ));
            }
        }
    }
    None
}

/// A small MKL instance on one layer solved to a certified saddle point.
pub fn gap_check(n: usize, m: usize, loss: LossKind, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, streams::VERIFY);
    let p = n / 2;
    let all = layer_points(LayerParams::new(n, p)?)?;
    let m = m.min(all.len());
    let pts: Vec<HypercubePoint> = sample(&mut rng, all.len(), m)
        .into_iter()
        .map(|i| HypercubePoint::new(all[i], n))
        .collect::<Result<_>>()?;
    let labels: Vec<f64> = (0..m)
        .map(|_| match loss {
            LossKind::Hinge => if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            LossKind::Absolute => rng.random_range(-1.0..1.0),
        })
        .collect();
    let problem = MklLayerProblem::from_points(&pts, labels, 0.1, loss)?;
    let sol = mkl_layer_solve(&problem, &MklOptions::default())?;
    let params = json!({"n": n, "m": m, "loss": loss.name(), "seed": seed});
    let bound = 1e-4 * (1.0 + sol.objective.abs());
    if !(sol.gap <= bound) {
        return Ok(Some((params, format!("duality gap {:e} exceeds {bound:e}", sol.gap))));
    }
    if let Some(k) = sol.trace.windows(2).position(|w| w[1] > w[0]) {
        return Ok(Some((params, format!("best-so-far trace increases at iteration {}", k + 1))));
    }
    Ok(None)
}

/// Dense explicit Gram of a spec over a whole layer, for callers who want
/// to inspect it.
pub fn layer_gram(spec: &KernelSpec, p: usize) -> Result<DMatrix<f64>> {
    let pts: Vec<HypercubePoint> = layer_points(LayerParams::new(spec.n(), p)?)?
        .into_iter()
        .map(|b| HypercubePoint::new(b, spec.n()))
        .collect::<Result<_>>()?;
    gram(spec, &pts)
}
