//! Synthetic conjunction tasks, dataset files, benchmark runs and the
//! oracle-backed self-verification suite.

mod conjunction;
mod dataset;
mod verify;

pub use conjunction::{
    bench_conjunction, gen_conjunction_dataset, regenerate, Algo, BenchConfig, ConjunctionTask, Generated,
    LayerSummary, Losses, RunReport, SampleMode, CONJUNCTION_GENERATOR,
};
pub use dataset::{signed_labels, Dataset, DatasetMeta, Example, Point};
pub use verify::{
    characterization_check, complement_check, conjunction_check, containment_check, fenchel_young_check,
    gap_check, layer_gram, spectral_check, verify_suite, verify_with, vertex_check, CheckResult, Fault,
    VerifyOptions, VerifyReport,
};
