//! Training with fixed and learned kernels: kernelized Pegasos, the SVM dual,
//! the layer-wise MKL saddle-point solver and Rademacher estimates.

mod dual;
mod loss;
mod mkl;
mod pegasos;
mod rademacher;

pub use dual::{
    alpha_box, dual_value, primal_value, solve_dual, svm_dual_train, DualSolve, DEFAULT_INNER_MAX_ITERS,
    DEFAULT_INNER_TOL,
};
pub use loss::LossKind;
pub use mkl::{
    duality_gap, mkl_lambda, mkl_layer_solve, mkl_train, vertex_grams, LayerSolution, MklLayerProblem, MklOptions,
    MklSolution, MklTrainConfig, MklTrainOutput,
};
pub use pegasos::{pegasos_matrix, pegasos_train, regularized_objective, PegasosConfig, PegasosOutput};
pub use rademacher::{rademacher_bound, rademacher_estimate, RademacherEstimate};
