use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, DatasetMeta};
use crate::error::{Error, Result};
use crate::kernels::{
    analytic_weights, conjunction_kernel, sparse_conjunction_kernel, universal_kernel, HypercubePoint, TrainedModel,
};
use crate::learners::{mkl_lambda, mkl_train, svm_dual_train, LossKind, MklOptions, MklTrainConfig, DEFAULT_INNER_TOL};
use crate::rng::{stream_rng, streams};
use crate::scheme::MAX_N;

/// How points are drawn: uniformly from the weight-`p` layer, or uniformly
/// from the `s`-sparse vectors of weight exactly `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    UniformLayer { p: usize },
    Sparse { s: usize },
}

impl SampleMode {
    pub fn weight(self) -> usize {
        match self {
            SampleMode::UniformLayer { p } => p,
            SampleMode::Sparse { s } => s,
        }
    }
}

/// The conjunction `c_I(x) = ∧_{i in I} x_i` with labels in `{0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjunctionTask {
    pub n: usize,
    pub literals: Vec<usize>,
    pub mode: SampleMode,
}

impl ConjunctionTask {
    pub fn new(n: usize, mut literals: Vec<usize>, mode: SampleMode) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::InvalidArgument(format!("dimension {n} outside 1..=64")));
        }
        if mode.weight() > n {
            return Err(Error::InvalidLayer { n, p: mode.weight() });
        }
        literals.sort_unstable();
        literals.dedup();
        if let Some(&i) = literals.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidArgument(format!("literal {i} >= n = {n}")));
        }
        Ok(Self { n, literals, mode })
    }

    /// The conjunction's indicator point: ones exactly on `I`.
    pub fn literal_point(&self) -> Result<HypercubePoint> {
        HypercubePoint::from_indices(self.n, &self.literals)
    }

    pub fn label(&self, x: &HypercubePoint) -> f64 {
        if self.literals.iter().all(|&i| x.get(i)) {
            1.0
        } else {
            0.0
        }
    }

    /// All labels are 0 when more literals than ones are required.
    pub fn is_degenerate(&self) -> bool {
        self.literals.len() > self.mode.weight()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub dataset: Dataset,
    pub warning: Option<String>,
}

pub const CONJUNCTION_GENERATOR: &str = "conjunction";

/// Draws `m` examples. Points come from the `TRAIN_DATA` stream and label
/// flips from the `NOISE` stream, one draw each per example, so a longer
/// sample with the same seed extends a shorter one.
pub fn gen_conjunction_dataset(task: &ConjunctionTask, m: usize, noise_rate: f64, seed: u64) -> Result<Generated> {
    if !(0.0..=1.0).contains(&noise_rate) {
        return Err(Error::InvalidArgument(format!("noise rate {noise_rate} not in [0, 1]")));
    }
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    let (points, labels) = draw(task, m, noise_rate, seed)?;
    let meta = DatasetMeta {
        generator: CONJUNCTION_GENERATOR.into(),
        seed,
        params: serde_json::json!({
            "task": task,
            "m": m,
            "noise_rate": noise_rate,
        }),
    };
    let warning = task.is_degenerate().then(|| {
        format!(
            "{} literals on weight-{} points: every label is 0",
            task.literals.len(),
            task.mode.weight()
        )
    });
    Ok(Generated {
        dataset: Dataset::from_cube(&points, &labels, Some(meta))?,
        warning,
    })
}

fn draw(task: &ConjunctionTask, m: usize, noise_rate: f64, seed: u64) -> Result<(Vec<HypercubePoint>, Vec<f64>)> {
    let mut prng = stream_rng(seed, streams::TRAIN_DATA);
    let mut nrng = stream_rng(seed, streams::NOISE);
    let w = task.mode.weight();
    let mut points = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let idx = sample(&mut prng, task.n, w).into_vec();
        let x = HypercubePoint::from_indices(task.n, &idx)?;
        let mut y = task.label(&x);
        if nrng.random::<f64>() < noise_rate {
            y = 1.0 - y;
        }
        points.push(x);
        labels.push(y);
    }
    Ok((points, labels))
}

/// Rebuilds a generated dataset from its metadata.
pub fn regenerate(meta: &DatasetMeta) -> Result<Dataset> {
    if meta.generator != CONJUNCTION_GENERATOR {
        return Err(Error::InvalidArgument(format!("unknown generator '{}'", meta.generator)));
    }
    let task: ConjunctionTask = serde_json::from_value(meta.params["task"].clone())?;
    let m = meta.params["m"]
        .as_u64()
        .ok_or_else(|| Error::Parse("meta.params.m missing".into()))? as usize;
    let noise = meta.params["noise_rate"]
        .as_f64()
        .ok_or_else(|| Error::Parse("meta.params.noise_rate missing".into()))?;
    Ok(gen_conjunction_dataset(&task, m, noise, meta.seed)?.dataset)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algo {
    #[serde(rename = "universal")]
    Universal,
    #[serde(rename = "conjunction-svm")]
    ConjunctionSvm,
    #[serde(rename = "sparse-analytic")]
    SparseAnalytic,
    #[serde(rename = "mkl")]
    Mkl,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Universal => "universal",
            Algo::ConjunctionSvm => "conjunction-svm",
            Algo::SparseAnalytic => "sparse-analytic",
            Algo::Mkl => "mkl",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Algo::Universal, Algo::ConjunctionSvm, Algo::SparseAnalytic, Algo::Mkl]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n: usize,
    pub s: usize,
    /// `|I|`; the literals are coordinates `0..literals`.
    pub literals: usize,
    pub m: usize,
    pub algo: Algo,
    pub b: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub noise_rate: f64,
    pub loss: LossKind,
    /// Replaces `λ = ε / (n B²)` when set.
    pub lambda_override: Option<f64>,
    /// Scale of the degree cutoff of the conjunction kernel.
    pub t_scale: f64,
    pub inner_tol: f64,
}

impl BenchConfig {
    pub fn new(n: usize, s: usize, literals: usize, m: usize, algo: Algo) -> Self {
        Self {
            n,
            s,
            literals,
            m,
            algo,
            b: 1.0,
            epsilon: 0.1,
            seed: 0,
            noise_rate: 0.0,
            loss: LossKind::Hinge,
            lambda_override: None,
            t_scale: 1.0,
            inner_tol: DEFAULT_INNER_TOL,
        }
    }

    pub fn task(&self) -> Result<ConjunctionTask> {
        ConjunctionTask::new(self.n, (0..self.literals).collect(), SampleMode::Sparse { s: self.s })
    }
}

/// Losses of a real-valued score `z` against a `±1` label: hinge,
/// absolute deviation and 0-1 error (with `z >= 0` read as `+1`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Losses {
    pub hinge: f64,
    pub abs: f64,
    pub zero_one: f64,
}

impl Losses {
    pub fn of(scores: &[f64], signed: &[f64]) -> Self {
        let m = scores.len().max(1) as f64;
        let mut out = Losses::default();
        for (&z, &y) in scores.iter().zip(signed) {
            out.hinge += LossKind::Hinge.value(z, y);
            out.abs += LossKind::Absolute.value(z, y);
            if (z >= 0.0) != (y > 0.0) {
                out.zero_one += 1.0;
            }
        }
        out.hinge /= m;
        out.abs /= m;
        out.zero_one /= m;
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub p: usize,
    pub points: usize,
    pub beta_simplex: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: BenchConfig,
    pub task: ConjunctionTask,
    pub dataset_meta: DatasetMeta,
    /// `"y' = 2y - 1"`: how `{0,1}` labels were turned into margin labels.
    pub label_map: String,
    /// `"z = f"` for margin-trained models, `"z = 2f - 1"` for the analytic
    /// `{0,1}`-valued predictor.
    pub score_map: String,
    pub lambda: Option<f64>,
    pub objective: Option<f64>,
    pub gap: Option<f64>,
    pub layers: Vec<LayerSummary>,
    pub norm_sq: f64,
    pub train: Losses,
    pub test: Losses,
    pub warning: Option<String>,
    pub wall_clock_secs: f64,
    pub seed: u64,
}

/// Generates a conjunction task, trains the chosen learner and scores it on
/// a holdout of the same size (the next `m` draws of the same streams).
pub fn bench_conjunction(cfg: &BenchConfig) -> Result<(RunReport, TrainedModel)> {
    let start = Instant::now();
    let task = cfg.task()?;
    let generated = gen_conjunction_dataset(&task, 2 * cfg.m, cfg.noise_rate, cfg.seed)?;
    let all_points = generated.dataset.cube_points()?;
    let all_labels = generated.dataset.labels();
    let (train_x, test_x) = all_points.split_at(cfg.m);
    let (train_y, test_y) = all_labels.split_at(cfg.m);
    let signed = |ys: &[f64]| ys.iter().map(|&y| 2.0 * y - 1.0).collect::<Vec<f64>>();
    let (train_s, test_s) = (signed(train_y), signed(test_y));
    let lambda = cfg
        .lambda_override
        .unwrap_or_else(|| mkl_lambda(cfg.n, cfg.b, cfg.epsilon));

    let mut layers = Vec::new();
    let (model, lambda_used, objective, gap, score_map) = match cfg.algo {
        Algo::SparseAnalytic => {
            let spec = sparse_conjunction_kernel(cfg.n, cfg.s, task.literals.len())?;
            let model = analytic_weights(&spec, task.literal_point()?)?;
            (model, None, None, None, "z = 2f - 1")
        }
        Algo::Universal | Algo::ConjunctionSvm => {
            let spec = if cfg.algo == Algo::Universal {
                universal_kernel(cfg.n)?
            } else {
                conjunction_kernel(cfg.n, cfg.s, cfg.epsilon, cfg.t_scale)?
            };
            let model = svm_dual_train(&spec, train_x, &train_s, cfg.loss, lambda, cfg.inner_tol)?;
            let (obj, gap) = (model.report.objective, model.report.gap);
            (model, Some(lambda), Some(obj), Some(gap), "z = f")
        }
        Algo::Mkl => {
            let mut mcfg = MklTrainConfig::new(cfg.b, cfg.epsilon, cfg.loss);
            mcfg.lambda_override = Some(lambda);
            mcfg.options = MklOptions {
                inner_tol: cfg.inner_tol,
                ..MklOptions::default()
            };
            let out = mkl_train(train_x, &train_s, &mcfg)?;
            layers = out
                .layers
                .iter()
                .map(|l| LayerSummary {
                    p: l.p,
                    points: l.indices.len(),
                    beta_simplex: l.solution.beta_simplex.clone(),
                    objective: l.solution.objective,
                    gap: l.solution.gap,
                })
                .collect();
            (out.model, Some(out.lambda), Some(out.objective), Some(out.gap), "z = f")
        }
    };
    let score = |xs: &[HypercubePoint]| -> Result<Vec<f64>> {
        let f = model.predict_many(xs)?;
        Ok(if cfg.algo == Algo::SparseAnalytic {
            f.into_iter().map(|v| 2.0 * v - 1.0).collect()
        } else {
            f
        })
    };
    let train = Losses::of(&score(train_x)?, &train_s);
    let test = Losses::of(&score(test_x)?, &test_s);
    let mut dataset_meta = generated.dataset.meta.clone().unwrap_or_default();
    dataset_meta.params["m"] = serde_json::json!(cfg.m);
    let report = RunReport {
        config: cfg.clone(),
        task,
        dataset_meta,
        label_map: "y' = 2y - 1".into(),
        score_map: score_map.into(),
        lambda: lambda_used,
        objective,
        gap,
        layers,
        norm_sq: model.norm_sq(),
        train,
        test,
        warning: generated.warning,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
    };
    Ok((report, model))
}
