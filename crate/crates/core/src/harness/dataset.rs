use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::HypercubePoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Cube(HypercubePoint),
    Real(Vec<f64>),
}

impl Point {
    pub fn dim(&self) -> usize {
        match self {
            Point::Cube(x) => x.n(),
            Point::Real(v) => v.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub x: Point,
    pub y: f64,
}

/// Enough to regenerate a synthetic dataset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: String,
    pub seed: u64,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub examples: Vec<Example>,
    pub meta: Option<DatasetMeta>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Meta { meta: DatasetMeta },
    Example(Example),
}

impl Dataset {
    pub fn new(examples: Vec<Example>, meta: Option<DatasetMeta>) -> Result<Self> {
        let n = examples.first().ok_or(Error::EmptyDataset)?.x.dim();
        for e in &examples {
            if e.x.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: e.x.dim(),
                });
            }
            if !e.y.is_finite() {
                return Err(Error::InvalidArgument(format!("label {} is not finite", e.y)));
            }
            if let Point::Real(v) = &e.x {
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite coordinate".into()));
                }
            }
        }
        Ok(Self { n, examples, meta })
    }

    pub fn from_cube(points: &[HypercubePoint], labels: &[f64], meta: Option<DatasetMeta>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        let examples = points
            .iter()
            .zip(labels)
            .map(|(x, &y)| Example { x: Point::Cube(*x), y })
            .collect();
        Self::new(examples, meta)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.examples.iter().map(|e| e.y).collect()
    }

    /// Errors if any point is real-valued.
    pub fn cube_points(&self) -> Result<Vec<HypercubePoint>> {
        self.examples
            .iter()
            .map(|e| match &e.x {
                Point::Cube(x) => Ok(*x),
                Point::Real(_) => Err(Error::InvalidArgument("expected bitstring points".into())),
            })
            .collect()
    }

    /// Bitstrings are read as 0/1 coordinates.
    pub fn real_points(&self) -> Vec<Vec<f64>> {
        self.examples
            .iter()
            .map(|e| match &e.x {
                Point::Cube(x) => (0..x.n()).map(|i| if x.get(i) { 1.0 } else { 0.0 }).collect(),
                Point::Real(v) => v.clone(),
            })
            .collect()
    }

    /// JSON Lines: an optional `{"meta": ...}` line, then one
    /// `{"x": ..., "y": ...}` object per example.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        if let Some(meta) = &self.meta {
            out.push_str(&serde_json::to_string(&serde_json::json!({ "meta": meta }))?);
            out.push('\n');
        }
        for e in &self.examples {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(reader: impl BufRead) -> Result<Self> {
        let mut meta = None;
        let mut examples = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Line>(&line) {
                Ok(Line::Meta { meta: m }) => meta = Some(m),
                Ok(Line::Example(e)) => examples.push(e),
                Err(err) => return Err(Error::Parse(format!("line {}: {err}", k + 1))),
            }
        }
        Self::new(examples, meta)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_jsonl()?.as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_jsonl(BufReader::new(fs::File::open(path)?))
    }
}

/// Maps `{0,1}` labels to `{-1,+1}` for margin losses. Returns the labels
/// unchanged, and `false`, when they are already `±1`.
pub fn signed_labels(labels: &[f64]) -> Result<(Vec<f64>, bool)> {
    if labels.iter().all(|&y| y == 1.0 || y == -1.0) {
        return Ok((labels.to_vec(), false));
    }
    if labels.iter().all(|&y| y == 0.0 || y == 1.0) {
        return Ok((labels.iter().map(|&y| 2.0 * y - 1.0).collect(), true));
    }
    Err(Error::InvalidArgument("labels must all be in {0, 1} or all in {-1, +1}".into()))
}
