//! Randomized embedding of `[0,1]^n` into a larger hypercube and lifting of
//! inner-product kernels onto the embedded points.

mod bits;
mod lift;
mod pair;

pub use bits::WideBits;
pub use lift::{
    lift_kernel, train_on_cube, CubeModel, CubePredictor, CubeTrainConfig, GRepr, LiftedKernel, StronglyEuclideanG,
};
pub use pair::{
    bits_per_coordinate, build_pair, build_pair_with, min_epsilon, CubeEmbedderPair, EmbeddedPoint, Grid,
    IntervalEmbedderPair, Role, DEFAULT_C_T, MAX_ATTEMPTS, MAX_TABLE_BITS, MAX_WIDTH,
};
