use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hyperkern::embedding::build_pair;
use hyperkern::kernels::{gram, universal_kernel, HypercubePoint};
use hyperkern::learners::{mkl_layer_solve, pegasos_train, LossKind, MklLayerProblem, MklOptions, PegasosConfig};
use hyperkern::scheme::{delta_matrix, vertex_g_tables, LayerParams};
use std::hint::black_box;

/// Deterministic points: the first `m` weight-`p` masks found by a
/// multiplicative walk over `{0,1}^n`.
fn layer_points(n: usize, p: usize, m: usize) -> Vec<HypercubePoint> {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut x = 0x9e37_79b9_7f4a_7c15u64;
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut bits = 0u64;
        let mut y = x;
        while (bits.count_ones() as usize) < p {
            bits |= 1 << (y % n as u64);
            y = y.rotate_left(7).wrapping_mul(0xff51afd7ed558ccd);
        }
        out.push(HypercubePoint::new(bits & mask, n).unwrap());
    }
    out
}

fn scheme(c: &mut Criterion) {
    let mut g = c.benchmark_group("scheme");
    for n in [16, 32, 64] {
        let layer = LayerParams::new(n, n / 2).unwrap();
        g.bench_with_input(BenchmarkId::new("delta_matrix", n), &layer, |b, l| {
            b.iter(|| delta_matrix(black_box(*l)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("vertex_tables", n), &layer, |b, l| {
            b.iter(|| vertex_g_tables(black_box(*l)).unwrap())
        });
    }
    g.finish();
}

fn kernels(c: &mut Criterion) {
    let spec = universal_kernel(16).unwrap();
    let pts = layer_points(16, 4, 500);
    c.bench_function("universal_gram_n16_m500", |b| b.iter(|| gram(&spec, black_box(&pts)).unwrap()));
}

fn learners(c: &mut Criterion) {
    let pts = layer_points(8, 3, 30);
    let labels: Vec<f64> = pts.iter().map(|x| if x.get(0) { 1.0 } else { -1.0 }).collect();
    let problem = MklLayerProblem::from_points(&pts, labels.clone(), 0.05, LossKind::Hinge).unwrap();
    let opts = MklOptions {
        outer_iters: 100,
        ..MklOptions::default()
    };
    c.bench_function("mkl_layer_solve_m30", |b| b.iter(|| mkl_layer_solve(black_box(&problem), &opts).unwrap()));
    let spec = universal_kernel(8).unwrap();
    let cfg = PegasosConfig::new(0.01, 20, 0, LossKind::Hinge);
    c.bench_function("pegasos_m30_20_epochs", |b| {
        b.iter(|| pegasos_train(&spec, black_box(&pts), &labels, &cfg).unwrap())
    });
}

fn embedding(c: &mut Criterion) {
    let mut g = c.benchmark_group("embedding");
    g.sample_size(10);
    g.bench_function("build_pair_n2_eps0.2", |b| b.iter(|| build_pair(2, black_box(0.2), 0).unwrap()));
    g.finish();
}

criterion_group!(benches, scheme, kernels, learners, embedding);
criterion_main!(benches);
