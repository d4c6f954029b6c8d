use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two 1-Lipschitz convex losses supported by the solvers.
///
/// * hinge `max(0, 1 - y z)`, labels in `{-1, +1}`; conjugate `ℓ*(a, y) = a y`
///   on `a y ∈ [-1, 0]`.
/// * absolute `|z - y|`, real labels; conjugate `ℓ*(a, y) = a y` on `|a| <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Hinge,
    Absolute,
}

impl LossKind {
    pub fn value(self, z: f64, y: f64) -> f64 {
        match self {
            LossKind::Hinge => (1.0 - y * z).max(0.0),
            LossKind::Absolute => (z - y).abs(),
        }
    }

    /// A subgradient in `z`.
    pub fn subgradient(self, z: f64, y: f64) -> f64 {
        match self {
            LossKind::Hinge => {
                if y * z < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::Absolute => {
                if z > y {
                    1.0
                } else if z < y {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed interval of `a` where `ℓ*(·, y)` is finite.
    pub fn conjugate_domain(self, y: f64) -> (f64, f64) {
        match self {
            LossKind::Hinge if y >= 0.0 => (-1.0, 0.0),
            LossKind::Hinge => (0.0, 1.0),
            LossKind::Absolute => (-1.0, 1.0),
        }
    }

    /// `ℓ*(a, y)`, or `None` outside the domain (where it is `+∞`).
    pub fn conjugate(self, a: f64, y: f64) -> Option<f64> {
        let (lo, hi) = self.conjugate_domain(y);
        let slack = 1e-12 * (1.0 + a.abs());
        if a < lo - slack || a > hi + slack {
            None
        } else {
            Some(a * y)
        }
    }

    pub fn check_label(self, y: f64) -> Result<()> {
        match self {
            LossKind::Hinge if y == 1.0 || y == -1.0 => Ok(()),
            LossKind::Hinge => Err(Error::InvalidArgument(format!(
                "hinge loss needs labels in {{-1, +1}}, got {y}"
            ))),
            LossKind::Absolute if y.is_finite() => Ok(()),
            LossKind::Absolute => Err(Error::InvalidArgument(format!("non-finite label {y}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Hinge => "hinge",
            LossKind::Absolute => "abs",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(LossKind::Hinge),
            "abs" | "absolute" => Ok(LossKind::Absolute),
            other => Err(Error::Parse(format!("unknown loss {other:?}"))),
        }
    }
}
