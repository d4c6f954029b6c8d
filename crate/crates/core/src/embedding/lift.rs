use nalgebra::DMatrix;
use serde::Serialize;

use super::pair::{build_pair_with, CubeEmbedderPair, EmbeddedPoint, Role, DEFAULT_C_T};
use crate::error::{Error, Result};
use crate::kernels::{HypercubePoint, TrainedModel};
use crate::learners::{mkl_lambda, mkl_train, pegasos_matrix, LossKind, MklTrainConfig, PegasosConfig};

/// Points per side of the grid used to verify a declared Lipschitz constant.
const LIPSCHITZ_CHECK_POINTS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GRepr {
    /// `g(a) = Σ_k c_k a^k`.
    Polynomial(Vec<f64>),
    /// Values at `a_k = k n / (len - 1)`, linearly interpolated.
    Lookup(Vec<f64>),
}

/// `g` of a strongly Euclidean kernel `k(x, y) = g(<x, y>)` on `[0, n]`,
/// with a Lipschitz constant checked at construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StronglyEuclideanG {
    n: usize,
    repr: GRepr,
    lipschitz: f64,
}

impl StronglyEuclideanG {
    pub fn polynomial(n: usize, coeffs: Vec<f64>, lipschitz: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("empty polynomial".into()));
        }
        Self::checked(n, GRepr::Polynomial(coeffs), lipschitz)
    }

    pub fn lookup(n: usize, values: Vec<f64>, lipschitz: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument("lookup table needs at least two values".into()));
        }
        Self::checked(n, GRepr::Lookup(values), lipschitz)
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::polynomial(n, vec![c], 0.0)
    }

    /// `g(a) = a / n`, `L = 1/n`.
    pub fn normalized_linear(n: usize) -> Result<Self> {
        Self::polynomial(n, vec![0.0, 1.0 / n as f64], 1.0 / n as f64)
    }

    /// `g(a) = ((a/n) + 1)² / 4`, `L = g'(n) = 1/n`.
    pub fn normalized_quadratic(n: usize) -> Result<Self> {
        let nf = n as f64;
        Self::polynomial(n, vec![0.25, 0.5 / nf, 0.25 / (nf * nf)], 1.0 / nf)
    }

    fn checked(n: usize, repr: GRepr, lipschitz: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(Error::InvalidArgument(format!("bad Lipschitz constant {lipschitz}")));
        }
        let g = Self { n, repr, lipschitz };
        let slope = g.max_slope();
        if slope > lipschitz * (1.0 + 1e-6) + 1e-15 {
            return Err(Error::InvalidArgument(format!(
                "declared Lipschitz constant {lipschitz} is below the observed slope {slope}"
            )));
        }
        Ok(g)
    }

    /// Largest difference quotient on the representation's grid: the knots
    /// of a lookup table, or a uniform grid for a polynomial.
    pub fn max_slope(&self) -> f64 {
        let nf = self.n as f64;
        let knots = match &self.repr {
            GRepr::Lookup(v) => v.len(),
            GRepr::Polynomial(_) => LIPSCHITZ_CHECK_POINTS + 1,
        };
        let h = nf / (knots - 1) as f64;
        (0..knots - 1)
            .map(|k| {
                let a = k as f64 * h;
                ((self.eval(a + h) - self.eval(a)) / h).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn repr(&self) -> &GRepr {
        &self.repr
    }

    /// `g(a)` with `a` clamped to `[0, n]`.
    pub fn eval(&self, a: f64) -> f64 {
        let a = a.clamp(0.0, self.n as f64);
        match &self.repr {
            GRepr::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * a + ck),
            GRepr::Lookup(v) => {
                let pos = a / self.n as f64 * (v.len() - 1) as f64;
                let k = (pos.floor() as usize).min(v.len() - 2);
                let frac = pos - k as f64;
                v[k] + frac * (v[k + 1] - v[k])
            }
        }
    }

    /// The kernel on real inputs, `g(<x, y>)`.
    pub fn kernel(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval(x.iter().zip(y).map(|(a, b)| a * b).sum())
    }
}

/// `k̃(u, v) = g(clamp(<u, v> / t, 0, n))` on embedded points, `u` from
/// role 1 and `v` from role 2.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedKernel<'a> {
    pub g: &'a StronglyEuclideanG,
    pub pair: &'a CubeEmbedderPair,
}

pub fn lift_kernel<'a>(g: &'a StronglyEuclideanG, pair: &'a CubeEmbedderPair) -> Result<LiftedKernel<'a>> {
    if g.n() != pair.n {
        return Err(Error::DimensionMismatch {
            expected: pair.n,
            got: g.n(),
        });
    }
    Ok(LiftedKernel { g, pair })
}

impl LiftedKernel<'_> {
    pub fn eval(&self, u: &EmbeddedPoint, v: &EmbeddedPoint) -> Result<f64> {
        if u.role != Role::First || v.role != Role::Second {
            return Err(Error::InvalidArgument(
                "lifted kernel takes a role-1 point and a role-2 point".into(),
            ));
        }
        if u.bits.len() != self.pair.width() || v.bits.len() != self.pair.width() {
            return Err(Error::DimensionMismatch {
                expected: self.pair.width(),
                got: u.bits.len().min(v.bits.len()),
            });
        }
        Ok(self.g.eval(u.inner(v) as f64 / self.pair.t() as f64))
    }

    /// `k̃(Ψ₁x, Ψ₂y)` straight from real inputs.
    pub fn eval_real(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.g.eval(self.pair.embedded_inner(x, y)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubeTrainConfig {
    pub b: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub loss: LossKind,
    /// Replaces `λ = ε / (n B²)` when set.
    pub lambda_override: Option<f64>,
    pub epochs: usize,
    pub c_t: f64,
    /// Run hypercube MKL on the embedded cube instead of training with the
    /// lifted kernel. Needs `n t <= 64`.
    pub mkl_on_cube: bool,
}

impl CubeTrainConfig {
    pub fn new(b: f64, epsilon: f64, seed: u64) -> Self {
        Self {
            b,
            epsilon,
            seed,
            loss: LossKind::Hinge,
            lambda_override: None,
            epochs: 50,
            c_t: DEFAULT_C_T,
            mkl_on_cube: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CubePredictor {
    /// Support points embedded with role 1, scored with the lifted kernel.
    Lifted {
        g: StronglyEuclideanG,
        support: Vec<EmbeddedPoint>,
        alphas: Vec<f64>,
    },
    /// A hypercube model on role-2 embeddings of width `n t <= 64`.
    Cube(TrainedModel),
}

/// A model on `[0,1]^n` that predicts through the embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeModel {
    pub pair: CubeEmbedderPair,
    pub predictor: CubePredictor,
    pub lambda: f64,
    pub objective: f64,
}

impl CubeModel {
    /// Queries are embedded with role 2.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let q = self.pair.embed(Role::Second, x)?;
        match &self.predictor {
            CubePredictor::Lifted { g, support, alphas } => {
                let k = lift_kernel(g, &self.pair)?;
                let mut f = 0.0;
                for (s, a) in support.iter().zip(alphas) {
                    f += a * k.eval(s, &q)?;
                }
                Ok(f)
            }
            CubePredictor::Cube(model) => model.predict(&to_hypercube(&q)?),
        }
    }
}

fn to_hypercube(p: &EmbeddedPoint) -> Result<HypercubePoint> {
    let width = p.bits.len();
    if width > 64 {
        return Err(Error::TooLarge {
            what: "embedded width for hypercube MKL",
            got: width,
            limit: 64,
        });
    }
    HypercubePoint::new(p.bits.words().first().copied().unwrap_or(0), width)
}

/// Learns on real inputs through a certified embedding.
///
/// Default path: Pegasos with the prediction matrix
/// `A[i][j] = k̃(Ψ₁x_j, Ψ₂x_i)`, so that training scores examples exactly as
/// [`CubeModel::predict`] will. With `mkl_on_cube`, the role-2 embeddings are
/// handed to hypercube MKL instead.
pub fn train_on_cube(
    points: &[Vec<f64>],
    labels: &[f64],
    g: &StronglyEuclideanG,
    cfg: &CubeTrainConfig,
) -> Result<CubeModel> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: labels.len(),
        });
    }
    let n = g.n();
    let pair = build_pair_with(n, cfg.epsilon, cfg.seed, cfg.c_t)?;
    let lambda = cfg.lambda_override.unwrap_or_else(|| mkl_lambda(n, cfg.b, cfg.epsilon));
    let queries: Vec<EmbeddedPoint> = points
        .iter()
        .map(|x| pair.embed(Role::Second, x))
        .collect::<Result<_>>()?;

    if cfg.mkl_on_cube {
        let cube: Vec<HypercubePoint> = queries.iter().map(to_hypercube).collect::<Result<_>>()?;
        let mut mcfg = MklTrainConfig::new(cfg.b, cfg.epsilon, cfg.loss);
        mcfg.lambda_override = Some(lambda);
        let out = mkl_train(&cube, labels, &mcfg)?;
        return Ok(CubeModel {
            pair,
            predictor: CubePredictor::Cube(out.model),
            lambda,
            objective: out.objective,
        });
    }

    let support: Vec<EmbeddedPoint> = points
        .iter()
        .map(|x| pair.embed(Role::First, x))
        .collect::<Result<_>>()?;
    let kernel = lift_kernel(g, &pair)?;
    let m = points.len();
    let mut pred = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            pred[(i, j)] = kernel.eval(&support[j], &queries[i])?;
        }
    }
    let out = pegasos_matrix(&pred, labels, &PegasosConfig::new(lambda, cfg.epochs, cfg.seed, cfg.loss))?;
    Ok(CubeModel {
        predictor: CubePredictor::Lifted {
            g: g.clone(),
            support,
            alphas: out.alphas,
        },
        pair,
        lambda,
        objective: out.objective,
    })
}
