//! Learning Euclidean kernels over the Boolean hypercube.
//!
//! A kernel on `{0,1}^n` is *Euclidean* when `k(x, y)` depends only on the
//! weights of `x` and `y` and on their inner product. Restricted to one layer
//! (all points of weight `p`) the Gram matrix of such a kernel lives in the
//! Johnson scheme, so its spectrum is a linear function of `p + 1`
//! coefficients. The crate builds on that fact:
//!
//! * [`scheme`]: exact combinatorics, the eigenvalue map `Δ`, vertex kernels
//!   and dense brute-force oracles for small layers.
//! * [`kernels`]: layer kernels, direct sums over layers, the universal kernel
//!   and the conjunction kernels.
//! * [`learners`]: kernelized Pegasos, the layer-wise MKL saddle-point solver,
//!   duality gaps and Rademacher estimates.
//! * [`embedding`]: randomized embeddings of `[0,1]^n` into a larger cube and
//!   lifting of inner-product kernels onto it.
//! * [`harness`]: dataset generation, JSON I/O, benchmarks and the
//!   self-verification suite.
//!
//! Indices of basis kernels are 0-based throughout: coefficient `beta[l]`
//! multiplies `C(<x, y>, l)`.

pub mod embedding;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod learners;
pub mod linalg;
pub mod rng;
pub mod scheme;

pub use error::{Error, Result};
pub use kernels::{HypercubePoint, KernelKind, KernelSpec, LayerKernel, TrainedModel};
pub use learners::{LossKind, MklLayerProblem, MklSolution, RademacherEstimate};
pub use scheme::{BetaCoeffs, DeltaMatrix, EigenProfile, EtaVector, LayerParams};
