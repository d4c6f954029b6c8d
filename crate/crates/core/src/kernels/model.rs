use std::path::Path;

use serde::{Deserialize, Serialize};

use super::point::HypercubePoint;
use super::spec::{KernelKind, KernelSpec};
use crate::error::{Error, Result};
use crate::scheme::choose;

/// Summary numbers attached to a saved model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub objective: f64,
    pub gap: f64,
    pub iters: u64,
    pub seed: u64,
}

/// A classifier in representer form, `f(x) = Σ_i α_i k(x_i, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub spec: KernelSpec,
    pub support: Vec<HypercubePoint>,
    pub alphas: Vec<f64>,
    pub report: ModelReport,
}

impl TrainedModel {
    pub fn new(spec: KernelSpec, support: Vec<HypercubePoint>, alphas: Vec<f64>) -> Result<Self> {
        if support.len() != alphas.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: alphas.len(),
            });
        }
        if let Some(x) = support.iter().find(|x| x.n() != spec.n()) {
            return Err(Error::DimensionMismatch {
                expected: spec.n(),
                got: x.n(),
            });
        }
        Ok(Self {
            spec,
            support,
            alphas,
            report: ModelReport::default(),
        })
    }

    pub fn with_report(mut self, report: ModelReport) -> Self {
        self.report = report;
        self
    }

    pub fn predict(&self, x: &HypercubePoint) -> Result<f64> {
        if x.n() != self.spec.n() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.n(),
                got: x.n(),
            });
        }
        Ok(self
            .support
            .iter()
            .zip(&self.alphas)
            .filter(|(_, a)| **a != 0.0)
            .map(|(s, a)| a * self.spec.eval_unchecked(s, x))
            .sum())
    }

    pub fn predict_many(&self, xs: &[HypercubePoint]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// `‖w‖² = αᵀ K α` over the support.
    pub fn norm_sq(&self) -> f64 {
        let mut total = 0.0;
        for (i, (xi, ai)) in self.support.iter().zip(&self.alphas).enumerate() {
            if *ai == 0.0 {
                continue;
            }
            total += ai * ai * self.spec.eval_unchecked(xi, xi);
            for (xj, aj) in self.support[..i].iter().zip(&self.alphas) {
                total += 2.0 * ai * aj * self.spec.eval_unchecked(xi, xj);
            }
        }
        total
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            spec: self.spec.clone(),
            support: self.support.clone(),
            alphas: self.alphas.clone(),
            report: self.report.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(s)?;
        Ok(Self::new(f.spec, f.support, f.alphas)?.with_report(f.report))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Model file: `{"spec", "support": [bitstrings], "alphas", "report"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub spec: KernelSpec,
    pub support: Vec<HypercubePoint>,
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub report: ModelReport,
}

/// The exact conjunction model under a sparse conjunction kernel: a single
/// support point at the indicator `c` of the literal set with weight
/// `α = C(s, ell)`, so that `f(x) = C(<c, x>, ell)`, which is 1 when all
/// literals are set and 0 otherwise. `ell` must equal the weight of `c`.
pub fn analytic_weights(spec: &KernelSpec, conjunction: HypercubePoint) -> Result<TrainedModel> {
    let params = match (spec.kind(), spec.sparse_params()) {
        (KernelKind::SparseConjunction, Some(p)) => p,
        _ => {
            return Err(Error::InvalidArgument(
                "analytic weights need a sparse conjunction kernel".into(),
            ))
        }
    };
    if conjunction.weight() != params.ell {
        return Err(Error::InvalidArgument(format!(
            "conjunction has {} literals, kernel expects ell = {}",
            conjunction.weight(),
            params.ell
        )));
    }
    TrainedModel::new(
        spec.clone(),
        vec![conjunction],
        vec![choose(params.s, params.ell)],
    )
}
