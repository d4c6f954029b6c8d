//! Spectral algebra of set-symmetric matrices on one hypercube layer.
//!
//! A layer `S_{p,n}` is the set of weight-`p` points of `{0,1}^n`. Any matrix
//! on it whose `(x, y)` entry depends only on `<x, y>` is a combination of the
//! basis matrices `P_l(x, y) = C(<x, y>, l)`, `l = 0..=p`, and all such matrices
//! share the eigenspaces `V_0, ..., V_p`. The eigenvalue of `P_l` on `V_j` is
//! `Δ[j][l] = C(n - l - j, p - l) * C(p - j, l - j)` (zero for `j > l`), so the
//! spectrum of `Σ β_l P_l` is simply `Δβ`.
//!
//! Everything spectral here requires the canonical form `2p <= n`; callers map
//! heavier layers through the complement `x -> 1 - x`.

mod binomial;
pub mod oracle;

pub use binomial::{binomial, binomial_exact, choose, EXACT_LIMIT};
pub use oracle::{oracle_eigenvalues, oracle_gram, EigenCluster, ExplicitGram, ORACLE_MAX_N};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported cube dimension (points are stored in a `u64`).
pub const MAX_N: usize = 64;

/// Relative tolerance used when none is supplied.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

/// A hypercube layer: dimension `n` and weight `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerParams {
    n: usize,
    p: usize,
}

impl LayerParams {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if n == 0 || n > MAX_N || p > n {
            return Err(Error::InvalidLayer { n, p });
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `2p <= n`.
    pub fn is_canonical(&self) -> bool {
        2 * self.p <= self.n
    }

    /// The layer reached through the complement map when `2p > n`.
    pub fn canonical(&self) -> Self {
        Self {
            n: self.n,
            p: self.p.min(self.n - self.p),
        }
    }

    fn require_canonical(&self) -> Result<()> {
        if self.is_canonical() {
            Ok(())
        } else {
            Err(Error::NotCanonical {
                n: self.n,
                p: self.p,
            })
        }
    }

    /// Number of points in the layer, `C(n, p)`.
    pub fn size(&self) -> f64 {
        choose(self.n, self.p)
    }

    /// Dimension of the eigenspace `V_j`: `C(n, j) - C(n, j - 1)`.
    pub fn multiplicity(&self, j: usize) -> u128 {
        let n = self.n as i64;
        let j = j as i64;
        binomial_exact(n, j).unwrap() - binomial_exact(n, j - 1).unwrap()
    }
}

/// Coordinates of a layer kernel in the basis `b_l(x, y) = C(<x, y>, l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaCoeffs {
    pub layer: LayerParams,
    pub beta: Vec<f64>,
}

impl BetaCoeffs {
    pub fn new(layer: LayerParams, beta: Vec<f64>) -> Result<Self> {
        if beta.len() != layer.p + 1 {
            return Err(Error::DimensionMismatch {
                expected: layer.p + 1,
                got: beta.len(),
            });
        }
        Ok(Self { layer, beta })
    }

    pub fn zeros(layer: LayerParams) -> Self {
        Self {
            layer,
            beta: vec![0.0; layer.p + 1],
        }
    }

    /// `g(k) = Σ_l β_l C(k, l)` for `k = 0..=p`: the kernel value at inner product `k`.
    pub fn g_table(&self) -> Vec<f64> {
        (0..=self.layer.p)
            .map(|k| {
                self.beta
                    .iter()
                    .enumerate()
                    .map(|(l, b)| b * choose(k, l))
                    .sum()
            })
            .collect()
    }
}

/// The upper-triangular map from coefficients to eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaMatrix {
    pub layer: LayerParams,
    entries: Vec<Vec<f64>>,
}

impl DeltaMatrix {
    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.entries[j][l]
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// `Δ v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(self
            .entries
            .iter()
            .enumerate()
            // upper triangular: skip the structural zeros
            .map(|(j, row)| (j..row.len()).map(|l| row[l] * v[l]).sum())
            .collect())
    }

    /// Solves `Δ x = rhs` by back-substitution.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        if rhs.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: rhs.len(),
            });
        }
        let mut x = vec![0.0; d];
        for j in (0..d).rev() {
            let tail: f64 = (j + 1..d).map(|l| self.entries[j][l] * x[l]).sum();
            x[j] = (rhs[j] - tail) / self.entries[j][j];
        }
        Ok(x)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.entries
            .iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    #[doc(hidden)]
    pub fn from_rows_unchecked(layer: LayerParams, entries: Vec<Vec<f64>>) -> Self {
        Self { layer, entries }
    }
}

/// The diagonal functional: `<η, β> = k(x, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaVector {
    pub layer: LayerParams,
    pub eta: Vec<f64>,
}

impl EtaVector {
    pub fn dot(&self, beta: &[f64]) -> f64 {
        self.eta.iter().zip(beta).map(|(e, b)| e * b).sum()
    }
}

/// The `p + 1` distinct eigenvalues of a layer kernel, indexed by eigenspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenProfile {
    pub layer: LayerParams,
    pub lambdas: Vec<f64>,
}

impl EigenProfile {
    pub fn multiplicities(&self) -> Vec<u128> {
        (0..self.lambdas.len())
            .map(|j| self.layer.multiplicity(j))
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.lambdas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn norm_inf(&self) -> f64 {
        self.lambdas.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

pub fn delta_matrix(layer: LayerParams) -> Result<DeltaMatrix> {
    layer.require_canonical()?;
    let (n, p) = (layer.n, layer.p);
    let entries = (0..=p)
        .map(|j| {
            (0..=p)
                .map(|l| {
                    if j > l {
                        0.0
                    } else {
                        choose(n - l - j, p - l) * choose(p - j, l - j)
                    }
                })
                .collect()
        })
        .collect();
    Ok(DeltaMatrix { layer, entries })
}

/// `η_l = C(p, l)`.
pub fn eta_vector(layer: LayerParams) -> EtaVector {
    EtaVector {
        layer,
        eta: (0..=layer.p).map(|l| choose(layer.p, l)).collect(),
    }
}

pub fn eigen_profile(beta: &BetaCoeffs) -> Result<EigenProfile> {
    let delta = delta_matrix(beta.layer)?;
    Ok(EigenProfile {
        layer: beta.layer,
        lambdas: delta.apply(&beta.beta)?,
    })
}

/// Which constraint an inadmissible coefficient vector breaks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// Eigenvalue on `V_j` is negative.
    NegativeEigenvalue { j: usize, value: f64 },
    /// Diagonal `k(x, x)` exceeds one.
    DiagonalBound { diagonal: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NegativeEigenvalue { j, value } => {
                write!(f, "eigenvalue on V_{j} is {value:e} < 0")
            }
            Violation::DiagonalBound { diagonal } => {
                write!(f, "diagonal k(x,x) = {diagonal} exceeds 1")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub profile: EigenProfile,
    pub diagonal: f64,
    /// First violated constraint, if any.
    pub violation: Option<Violation>,
}

/// Checks that `Σ β_l C(<x,y>, l)` is a kernel with `k(x, x) <= 1`.
///
/// Eigenvalues may dip to `-tol * max(1, ‖Δβ‖∞)`; the diagonal may reach `1 + tol`.
pub fn is_admissible(beta: &BetaCoeffs, tol: f64) -> Result<Admissibility> {
    let profile = eigen_profile(beta)?;
    let diagonal = eta_vector(beta.layer).dot(&beta.beta);
    Ok(judge(profile, diagonal, tol))
}

/// The `p + 1` vertices of the polytope of admissible coefficient vectors.
///
/// Vertex `i` solves `Δ β̄ = e_i` and is rescaled to unit diagonal, so its
/// spectrum is concentrated on the single eigenspace `V_i`.
pub fn vertex_betas(layer: LayerParams) -> Result<Vec<BetaCoeffs>> {
    let delta = delta_matrix(layer)?;
    let eta = eta_vector(layer);
    let d = layer.p + 1;
    let tol = 1e-9 * delta.norm_inf();
    (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            let raw = delta.solve(&e)?;
            let residual = delta
                .apply(&raw)?
                .iter()
                .zip(&e)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if residual > tol {
                return Err(Error::Numerical(format!(
                    "vertex {i} of {layer:?}: back-substitution residual {residual:e}"
                )));
            }
            let xi = eta.dot(&raw);
            if !(xi > 0.0) {
                return Err(Error::Numerical(format!(
                    "vertex {i} of {layer:?}: normalizer {xi} is not positive"
                )));
            }
            let mut beta: Vec<f64> = raw.iter().map(|b| b / xi).collect();
            // renormalize so the diagonal is 1 to working precision
            let diag = eta.dot(&beta);
            beta.iter_mut().for_each(|b| *b /= diag);
            BetaCoeffs::new(layer, beta)
        })
        .collect()
}

/// Eigenvalue of the distance-`d` relation of the layer (pairs with
/// `<x, y> = p - d`) on `V_j`, in exact integer arithmetic:
/// `Σ_h (-1)^h C(j, h) C(p - j, d - h) C(n - p - j, d - h)`.
pub fn eberlein(layer: LayerParams, d: usize, j: usize) -> Result<i128> {
    layer.require_canonical()?;
    let (n, p) = (layer.n as i64, layer.p as i64);
    let (d, j) = (d as i64, j as i64);
    let c = |r: i64, k: i64| binomial_exact(r, k).expect("n <= 64 fits in u128") as i128;
    Ok((0..=d)
        .map(|h| {
            let term = c(j, h) * c(p - j, d - h) * c(n - p - j, d - h);
            if h % 2 == 0 {
                term
            } else {
                -term
            }
        })
        .sum())
}

/// Inner-product tables of the vertex kernels, `g_i[k]` for `k = 0..=p`.
///
/// Vertex `i` is the orthogonal projection onto `V_i` scaled to unit
/// diagonal, whose value at distance `d` is `E_d(i) / (C(p, d) C(n - p, d))`.
/// Both integers are exact, so every entry is correctly rounded up to a few
/// ulps; the P-basis coefficients from [`vertex_betas`] lose accuracy as `p`
/// grows and are not used for evaluation.
pub fn vertex_g_tables(layer: LayerParams) -> Result<Vec<Vec<f64>>> {
    layer.require_canonical()?;
    let (n, p) = (layer.n, layer.p);
    (0..=p)
        .map(|i| {
            (0..=p)
                .map(|k| {
                    let d = p - k;
                    let valency = binomial_exact(p as i64, d as i64).expect("fits")
                        * binomial_exact((n - p) as i64, d as i64).expect("fits");
                    Ok(eberlein(layer, d, i)? as f64 / valency as f64)
                })
                .collect()
        })
        .collect()
}

/// Eigenvalue of vertex `i` on `V_i`: `C(n, p) / mult_i`.
pub fn vertex_eigenvalue(layer: LayerParams, i: usize) -> f64 {
    layer.size() / layer.multiplicity(i) as f64
}

/// Eigenvalues of the kernel with inner-product table `g`:
/// `λ_j = Σ_d g[p - d] E_d(j)`.
pub fn eigen_profile_from_table(layer: LayerParams, g: &[f64]) -> Result<EigenProfile> {
    layer.require_canonical()?;
    if g.len() != layer.p + 1 {
        return Err(Error::DimensionMismatch {
            expected: layer.p + 1,
            got: g.len(),
        });
    }
    let p = layer.p;
    let lambdas = (0..=p)
        .map(|j| {
            (0..=p)
                .map(|d| Ok(g[p - d] * eberlein(layer, d, j)? as f64))
                .sum::<Result<f64>>()
        })
        .collect::<Result<_>>()?;
    Ok(EigenProfile { layer, lambdas })
}

/// [`is_admissible`] for a kernel given by its inner-product table.
pub fn table_admissibility(layer: LayerParams, g: &[f64], tol: f64) -> Result<Admissibility> {
    let profile = eigen_profile_from_table(layer, g)?;
    Ok(judge(profile, g[layer.p], tol))
}

fn judge(profile: EigenProfile, diagonal: f64, tol: f64) -> Admissibility {
    let floor = -tol * profile.norm_inf().max(1.0);
    let violation = profile
        .lambdas
        .iter()
        .position(|&v| v < floor)
        .map(|j| Violation::NegativeEigenvalue {
            j,
            value: profile.lambdas[j],
        })
        .or_else(|| (diagonal > 1.0 + tol).then_some(Violation::DiagonalBound { diagonal }));
    Admissibility {
        admissible: violation.is_none(),
        profile,
        diagonal,
        violation,
    }
}

/// P-basis coefficients from D-basis coefficients:
/// `c_r = Σ_{l <= r} (-1)^{r-l} C(r, l) d_l`.
pub fn p_from_d(d_coeffs: &[f64]) -> Vec<f64> {
    (0..d_coeffs.len())
        .map(|r| {
            (0..=r)
                .map(|l| {
                    let sign = if (r - l) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * choose(r, l) * d_coeffs[l]
                })
                .sum()
        })
        .collect()
}

/// D-basis coefficients from P-basis coefficients: `d_l = Σ_{r <= l} C(l, r) c_r`.
///
/// The D-coefficients of a kernel are its values at each inner product, so
/// this is the same map as [`BetaCoeffs::g_table`].
pub fn d_from_p(p_coeffs: &[f64]) -> Vec<f64> {
    (0..p_coeffs.len())
        .map(|l| (0..=l).map(|r| choose(l, r) * p_coeffs[r]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(n: usize, p: usize) -> LayerParams {
        LayerParams::new(n, p).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn delta_n4_p2() {
        let d = delta_matrix(layer(4, 2)).unwrap();
        assert_eq!(
            d.rows(),
            &[vec![6.0, 6.0, 1.0], vec![0.0, 2.0, 1.0], vec![0.0, 0.0, 1.0]]
        );
    }

    #[test]
    fn delta_p0_is_scalar_one() {
        for n in 1..=10 {
            assert_eq!(delta_matrix(layer(n, 0)).unwrap().rows(), &[vec![1.0]]);
        }
    }

    #[test]
    fn delta_rejects_heavy_layer() {
        assert!(matches!(
            delta_matrix(layer(4, 3)),
            Err(Error::NotCanonical { n: 4, p: 3 })
        ));
    }

    #[test]
    fn delta_triangular_positive_diagonal() {
        for n in 1..=MAX_N {
            for p in 0..=n / 2 {
                let d = delta_matrix(layer(n, p)).unwrap();
                for j in 0..=p {
                    assert!(d.get(j, j) > 0.0, "n={n} p={p} j={j}");
                    assert_eq!(d.get(j, j), choose(n - 2 * j, p - j));
                    for l in 0..j {
                        assert_eq!(d.get(j, l), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn eta_rows() {
        assert_eq!(eta_vector(layer(4, 2)).eta, vec![1.0, 2.0, 1.0]);
        assert_eq!(eta_vector(layer(4, 0)).eta, vec![1.0]);
        assert_eq!(eta_vector(layer(7, 3)).eta, vec![1.0, 3.0, 3.0, 1.0]);
    }

    #[test]
    fn eigen_profile_examples() {
        let l = layer(4, 2);
        let ep = |b: Vec<f64>| eigen_profile(&BetaCoeffs::new(l, b).unwrap()).unwrap().lambdas;
        assert_eq!(ep(vec![1.0, 0.0, 0.0]), vec![6.0, 0.0, 0.0]);
        assert_eq!(ep(vec![0.0, 0.0, 1.0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(ep(vec![-1.0, 1.0, 0.0]), vec![0.0, 2.0, 0.0]);
        assert!(matches!(
            eigen_profile(&BetaCoeffs { layer: l, beta: vec![1.0] }),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn admissibility_examples() {
        let l = layer(4, 2);
        let check = |b: Vec<f64>| is_admissible(&BetaCoeffs::new(l, b).unwrap(), 1e-9).unwrap();
        assert!(check(vec![1.0, 0.0, 0.0]).admissible);
        assert!(check(vec![0.0, 0.0, 0.0]).admissible);
        let diag = check(vec![0.0, 0.0, 2.0]);
        assert!(!diag.admissible);
        assert_eq!(diag.profile.lambdas, vec![2.0, 2.0, 2.0]);
        assert_eq!(diag.violation, Some(Violation::DiagonalBound { diagonal: 2.0 }));
        let neg = check(vec![1.0, -1.0, 0.0]);
        assert!(matches!(neg.violation, Some(Violation::NegativeEigenvalue { j: 1, .. })));
    }

    #[test]
    fn vertices_n4_p2() {
        let v = vertex_betas(layer(4, 2)).unwrap();
        assert!(close(&v[0].beta, &[1.0, 0.0, 0.0], 1e-12));
        assert!(close(&v[1].beta, &[-1.0, 1.0, 0.0], 1e-12));
        assert!(close(&v[2].beta, &[1.0, -1.5, 3.0], 1e-12));
        let profiles: Vec<_> = v.iter().map(|b| eigen_profile(b).unwrap().lambdas).collect();
        assert!(close(&profiles[0], &[6.0, 0.0, 0.0], 1e-12));
        assert!(close(&profiles[1], &[0.0, 2.0, 0.0], 1e-12));
        assert!(close(&profiles[2], &[0.0, 0.0, 3.0], 1e-12));
    }

    #[test]
    fn vertices_n2_p1() {
        let v = vertex_betas(layer(2, 1)).unwrap();
        assert!(close(&v[0].beta, &[1.0, 0.0], 1e-12));
        assert!(close(&v[1].beta, &[-1.0, 2.0], 1e-12));
    }

    #[test]
    fn vertices_unit_diagonal_single_eigenspace() {
        for n in 1..=20 {
            for p in 0..=n / 2 {
                let l = layer(n, p);
                let eta = eta_vector(l);
                for (i, v) in vertex_betas(l).unwrap().iter().enumerate() {
                    assert!((eta.dot(&v.beta) - 1.0).abs() <= 1e-12);
                    let prof = eigen_profile(v).unwrap();
                    let scale = prof.norm_inf();
                    for (j, lam) in prof.lambdas.iter().enumerate() {
                        if j == i {
                            assert!(*lam > 0.0);
                        } else {
                            assert!(lam.abs() <= 1e-9 * scale, "n={n} p={p} i={i} j={j}: {lam}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn vertex_eigenvalue_is_layer_size_over_multiplicity() {
        // unit diagonal forces trace = |layer| onto a single eigenspace
        for n in 2..=20 {
            for p in 0..=n / 2 {
                let l = layer(n, p);
                for (i, v) in vertex_betas(l).unwrap().iter().enumerate() {
                    let lam = eigen_profile(v).unwrap().lambdas[i];
                    let expect = l.size() / l.multiplicity(i) as f64;
                    assert!((lam - expect).abs() <= 1e-9 * expect);
                }
            }
        }
    }

    #[test]
    fn multiplicities_sum_to_layer_size() {
        for n in 1..=MAX_N {
            for p in 0..=n / 2 {
                let l = layer(n, p);
                let total: u128 = (0..=p).map(|j| l.multiplicity(j)).sum();
                assert_eq!(total, binomial_exact(n as i64, p as i64).unwrap());
            }
        }
    }

    #[test]
    fn basis_change_examples() {
        assert_eq!(d_from_p(&[0.0, 0.0, 1.0]), vec![0.0, 0.0, 1.0]);
        assert_eq!(d_from_p(&[1.0, 0.0]), vec![1.0, 1.0]);
        assert_eq!(p_from_d(&[1.0, 1.0]), vec![1.0, 0.0]);
        assert_eq!(p_from_d(&[0.0, 0.0, 1.0]), vec![0.0, 0.0, 1.0]);
        assert_eq!(p_from_d(&[0.0, 1.0, 0.0]), vec![0.0, 1.0, -2.0]);
    }

    #[test]
    fn d_from_p_matches_g_table() {
        let b = BetaCoeffs::new(layer(9, 4), vec![0.3, -0.2, 0.5, 1.5, -0.25]).unwrap();
        assert_eq!(d_from_p(&b.beta), b.g_table());
    }

    proptest::proptest! {
        #[test]
        fn basis_change_is_exact_involution(v in proptest::collection::vec(-1000i32..1000, 1..=21)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            proptest::prop_assert_eq!(d_from_p(&p_from_d(&v)), v.clone());
            proptest::prop_assert_eq!(p_from_d(&d_from_p(&v)), v);
        }

        #[test]
        fn solve_inverts_apply(n in 1usize..=30, seed in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let l = layer(n, n / 2);
            let d = delta_matrix(l).unwrap();
            let v: Vec<f64> = seed.iter().cycle().take(l.p() + 1).copied().collect();
            let back = d.apply(&d.solve(&v).unwrap()).unwrap();
            let scale = d.norm_inf();
            for (a, b) in back.iter().zip(&v) {
                proptest::prop_assert!((a - b).abs() <= 1e-9 * scale);
            }
        }
    }
}
