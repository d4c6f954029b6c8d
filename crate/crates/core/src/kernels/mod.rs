//! Euclidean kernels on the hypercube: layer kernels, direct sums over
//! layers, the universal kernel and conjunction kernels.

mod layer;
mod model;
mod point;
mod spec;

pub use layer::{
    layer_kernel_from_table, layer_kernel_from_values, make_layer_kernel, mix_vertices, universal_layer_kernel,
    LayerKernel,
};
pub use model::{analytic_weights, ModelFile, ModelReport, TrainedModel};
pub use point::HypercubePoint;
pub use spec::{
    conjunction_degree, conjunction_kernel, conjunction_kernel_with_degree, cross_gram, gram,
    sparse_conjunction_kernel, universal_kernel, KernelKind, KernelSpec, LayerEntry, SparseParams,
    SpecFile, BETA_TABLE_TOL, GRAM_MAX_POINTS,
};
