use hyperkern::kernels::{gram, universal_kernel, HypercubePoint};
use hyperkern::learners::{
    mkl_layer_solve, pegasos_train, rademacher_bound, rademacher_estimate, regularized_objective, LossKind,
    MklLayerProblem, MklOptions, PegasosConfig,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn layer_sample(n: usize, p: usize, m: usize, rng: &mut impl Rng) -> Vec<HypercubePoint> {
    let all: Vec<u64> = (0u64..1 << n).filter(|x| x.count_ones() as usize == p).collect();
    sample(rng, all.len(), m.min(all.len()))
        .into_iter()
        .map(|i| HypercubePoint::new(all[i], n).unwrap())
        .collect()
}

fn signs(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..m).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
}

/// Rows are explicit features with `Φ Φᵀ = K`, from the eigendecomposition.
fn feature_map(k: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = k.clone().symmetric_eigen();
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &eig.eigenvectors * root
}

/// Subgradient descent on `(λ/2)|w|² + (1/m) Σ ℓ(<w, φ_i>, y_i)` with step
/// `1/(λ t)`; returns the best objective seen.
fn primal_oracle(phi: &DMatrix<f64>, labels: &[f64], lambda: f64, loss: LossKind, iters: usize) -> f64 {
    let (m, d) = phi.shape();
    let objective = |w: &DVector<f64>| {
        let z = phi * w;
        0.5 * lambda * w.norm_squared()
            + z.iter().zip(labels).map(|(z, y)| loss.value(*z, *y)).sum::<f64>() / m as f64
    };
    let mut w = DVector::zeros(d);
    let mut avg = DVector::zeros(d);
    let mut best = objective(&w);
    for t in 1..=iters {
        let z = phi * &w;
        let mut g = lambda * &w;
        for i in 0..m {
            let s = loss.subgradient(z[i], labels[i]);
            if s != 0.0 {
                g += phi.row(i).transpose() * (s / m as f64);
            }
        }
        w -= g / (lambda * t as f64);
        avg += (&w - &avg) / t as f64;
        if t % 64 == 0 {
            best = best.min(objective(&w)).min(objective(&avg));
        }
    }
    best.min(objective(&w)).min(objective(&avg))
}

#[test]
fn pegasos_matches_primal_oracle() {
    let spec = universal_kernel(6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..6 {
        let m = rng.random_range(3..=10);
        let p = rng.random_range(1..=5);
        let pts = layer_sample(6, p, m, &mut rng);
        let m = pts.len();
        let loss = if trial % 2 == 0 { LossKind::Hinge } else { LossKind::Absolute };
        let labels: Vec<f64> = match loss {
            LossKind::Hinge => signs(m, &mut rng),
            LossKind::Absolute => (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let lambda = 0.1;
        let k = gram(&spec, &pts).unwrap();
        let oracle = primal_oracle(&feature_map(&k), &labels, lambda, loss, 200_000);
        let model = pegasos_train(&spec, &pts, &labels, &PegasosConfig::new(lambda, 20_000, trial, loss)).unwrap();
        let got = regularized_objective(&k, &labels, &model.alphas, lambda, loss);
        assert!(got >= oracle - 1e-6, "pegasos {got} below the optimum {oracle}");
        assert!(got <= 1.02 * oracle, "trial {trial}: pegasos {got} vs oracle {oracle}");
    }
}

#[test]
fn outer_objective_is_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for trial in 0..8 {
        let n = rng.random_range(4..=7);
        let p = rng.random_range(1..=n / 2);
        let pts = layer_sample(n, p, 12, &mut rng);
        let loss = if trial % 2 == 0 { LossKind::Hinge } else { LossKind::Absolute };
        let labels = signs(pts.len(), &mut rng);
        let problem = MklLayerProblem::from_points(&pts, labels, 0.2, loss).unwrap();
        let g = |beta: &[f64]| {
            let sol = problem.solve_inner(beta, 1e-11, 1_000_000, None);
            assert!(sol.converged);
            problem.dual(beta, &sol.alphas).unwrap()
        };
        let d = problem.num_kernels();
        let mut draw = || {
            let raw: Vec<f64> = (0..=d).map(|_| -rng.random::<f64>().ln()).collect();
            let s: f64 = raw.iter().sum();
            raw[..d].iter().map(|r| r / s).collect::<Vec<f64>>()
        };
        let (b1, b2) = (draw(), draw());
        for theta in [0.25, 0.5, 0.75] {
            let mid: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
            assert!(g(&mid) <= theta * g(&b1) + (1.0 - theta) * g(&b2) + 1e-6);
        }
    }
}

#[test]
fn saddle_certificate_and_monotone_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for trial in 0..6 {
        let n = rng.random_range(4..=8);
        let p = rng.random_range(1..=n / 2);
        let pts = layer_sample(n, p, 40, &mut rng);
        let loss = if trial % 2 == 0 { LossKind::Hinge } else { LossKind::Absolute };
        let labels = signs(pts.len(), &mut rng);
        let problem = MklLayerProblem::from_points(&pts, labels, 0.05, loss).unwrap();
        let sol = mkl_layer_solve(&problem, &MklOptions::default()).unwrap();
        assert!(sol.gap <= 1e-4 * (1.0 + sol.objective.abs()), "gap {}", sol.gap);
        assert!(sol.trace.windows(2).all(|w| w[1] <= w[0]));
        let s: f64 = sol.beta_simplex.iter().sum();
        assert!(sol.beta_simplex.iter().all(|b| *b >= 0.0) && s <= 1.0 + 1e-12);
    }
}

#[test]
fn rademacher_estimate_below_bound() {
    for (k, (n, m)) in [(8, 100), (8, 200), (16, 100), (16, 200)].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(24 + k as u64);
        let mask = (1u64 << n) - 1;
        let pts: Vec<HypercubePoint> = (0..m).map(|_| HypercubePoint::new(rng.random::<u64>() & mask, n).unwrap()).collect();
        let est = rademacher_estimate(&pts, 1.0, 200, k as u64).unwrap();
        assert!(est.mean + 2.0 * est.stderr <= rademacher_bound(n, m, 1.0));
        assert!((est.bound - rademacher_bound(n, m, 1.0)).abs() < 1e-15);
    }
}

#[test]
fn rademacher_n8_m200_example() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let pts: Vec<HypercubePoint> = (0..200).map(|_| HypercubePoint::new(rng.random::<u64>() & 0xff, 8).unwrap()).collect();
    let est = rademacher_estimate(&pts, 1.0, 200, 0).unwrap();
    let bound = (2.0 * std::f64::consts::E * 8f64.ln() / 200.0).sqrt();
    assert!((bound - 0.238).abs() < 1e-3);
    assert!(est.mean + 2.0 * est.stderr <= bound);
}

#[test]
fn training_is_deterministic() {
    let spec = universal_kernel(6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let pts = layer_sample(6, 3, 10, &mut rng);
    let labels = signs(pts.len(), &mut rng);
    let cfg = PegasosConfig::new(0.1, 300, 5, LossKind::Hinge);
    let a = pegasos_train(&spec, &pts, &labels, &cfg).unwrap();
    let b = pegasos_train(&spec, &pts, &labels, &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let problem = MklLayerProblem::from_points(&pts, labels, 0.1, LossKind::Hinge).unwrap();
    let s1 = mkl_layer_solve(&problem, &MklOptions::default()).unwrap();
    let s2 = mkl_layer_solve(&problem, &MklOptions::default()).unwrap();
    assert_eq!(s1, s2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inner_solution_is_feasible_and_certified(seed in 0u64..1000, hinge in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = layer_sample(6, 2, 10, &mut rng);
        let loss = if hinge { LossKind::Hinge } else { LossKind::Absolute };
        let labels = signs(pts.len(), &mut rng);
        let problem = MklLayerProblem::from_points(&pts, labels, 0.3, loss).unwrap();
        let beta = vec![1.0 / 3.0; 3];
        let sol = problem.solve_inner(&beta, 1e-10, 1_000_000, None);
        prop_assert!(sol.converged);
        let g = problem.dual(&beta, &sol.alphas);
        prop_assert!(g.is_some());
        let f = problem.primal(&beta, &sol.alphas);
        prop_assert!(f - g.unwrap() >= -1e-9);
        prop_assert!(f - g.unwrap() <= 1e-5);
    }
}
