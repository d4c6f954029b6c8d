use crate::error::{Error, Result};
use crate::scheme::{
    is_admissible, p_from_d, table_admissibility, vertex_betas, vertex_eigenvalue, vertex_g_tables, Admissibility,
    BetaCoeffs, EigenProfile, LayerParams, DEFAULT_PSD_TOL,
};

/// An admissible Euclidean kernel on one canonical layer (`2p <= n`).
///
/// Evaluation is a table lookup: `k(x, y) = g[<x, y>]`. The table is the
/// authoritative representation. Kernels built from vertex mixtures or from
/// inner-product values keep an exactly computed table, while `beta` is
/// derived from it and becomes ill-conditioned for large `p`.
///
/// Equality compares `beta` and the table; the spectrum is derived data.
#[derive(Clone, Debug)]
pub struct LayerKernel {
    beta: BetaCoeffs,
    g_table: Vec<f64>,
    profile: EigenProfile,
}

impl PartialEq for LayerKernel {
    fn eq(&self, other: &Self) -> bool {
        self.beta == other.beta && self.g_table == other.g_table
    }
}

impl LayerKernel {
    pub fn layer(&self) -> LayerParams {
        self.beta.layer
    }

    pub fn beta(&self) -> &BetaCoeffs {
        &self.beta
    }

    pub fn g_table(&self) -> &[f64] {
        &self.g_table
    }

    pub fn profile(&self) -> &EigenProfile {
        &self.profile
    }

    /// Kernel value for two points of this layer with inner product `k`.
    #[inline]
    pub fn value_at(&self, k: usize) -> f64 {
        self.g_table[k]
    }

    pub fn diagonal(&self) -> f64 {
        self.g_table[self.beta.layer.p()]
    }

    /// Replaces the stored coefficients after checking that they describe the
    /// same table within `tol` (relative to `max(1, ‖g‖∞)`).
    pub(crate) fn with_beta(mut self, beta: Vec<f64>, tol: f64) -> Result<Self> {
        let beta = BetaCoeffs::new(self.layer(), beta)?;
        let scale = self.g_table.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let drift = beta
            .g_table()
            .iter()
            .zip(&self.g_table)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if drift > tol * scale {
            return Err(Error::InvalidArgument(format!(
                "beta and g disagree by {drift:e} on layer (n = {}, p = {})",
                self.layer().n(),
                self.layer().p()
            )));
        }
        self.beta = beta;
        Ok(self)
    }
}

fn reject(layer: LayerParams, check: Admissibility) -> Result<EigenProfile> {
    match check.violation {
        Some(v) => Err(Error::Inadmissible(format!(
            "(n = {}, p = {}): {v}",
            layer.n(),
            layer.p()
        ))),
        None => Ok(check.profile),
    }
}

/// Validates `beta` and precomputes the lookup table.
pub fn make_layer_kernel(layer: LayerParams, beta: Vec<f64>) -> Result<LayerKernel> {
    let beta = BetaCoeffs::new(layer, beta)?;
    let profile = reject(layer, is_admissible(&beta, DEFAULT_PSD_TOL)?)?;
    let g_table = beta.g_table();
    Ok(LayerKernel {
        beta,
        g_table,
        profile,
    })
}

/// Kernel from its inner-product table on a canonical layer. Admissibility is
/// checked on the spectrum computed from the table itself.
pub fn layer_kernel_from_table(layer: LayerParams, g_table: Vec<f64>) -> Result<LayerKernel> {
    let profile = reject(layer, table_admissibility(layer, &g_table, DEFAULT_PSD_TOL)?)?;
    let beta = BetaCoeffs::new(layer, p_from_d(&g_table))?;
    Ok(LayerKernel {
        beta,
        g_table,
        profile,
    })
}

/// Builds the canonical-layer kernel of an inner-product function given on
/// the *actual* layer `layer` (which may have `2p > n`).
///
/// `g(k)` is the kernel value for two points of `layer` with `<x, y> = k`.
/// Heavier layers are complemented: `<x̄, ȳ> = <x, y> - (2p - n)`.
pub fn layer_kernel_from_values(layer: LayerParams, g: impl Fn(usize) -> f64) -> Result<LayerKernel> {
    let canon = layer.canonical();
    let offset = if layer.is_canonical() {
        0
    } else {
        2 * layer.p() - layer.n()
    };
    let values: Vec<f64> = (0..=canon.p()).map(|k| g(k + offset)).collect();
    layer_kernel_from_table(canon, values)
}

/// `β = Σ_i λ_i β^(i)` over the vertices of the layer polytope.
pub fn mix_vertices(layer: LayerParams, lambdas: &[f64]) -> Result<LayerKernel> {
    if lambdas.len() != layer.p() + 1 {
        return Err(Error::DimensionMismatch {
            expected: layer.p() + 1,
            got: lambdas.len(),
        });
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative mixture weight {l}")));
    }
    let total: f64 = lambdas.iter().sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "mixture weights sum to {total} > 1"
        )));
    }
    let vertices = vertex_betas(layer)?;
    let tables = vertex_g_tables(layer)?;
    let mut g_table = vec![0.0; layer.p() + 1];
    for (table, w) in tables.iter().zip(lambdas) {
        for (g, v) in g_table.iter_mut().zip(table) {
            *g += w * v;
        }
    }
    let profile = EigenProfile {
        layer,
        lambdas: lambdas
            .iter()
            .enumerate()
            .map(|(i, w)| w * vertex_eigenvalue(layer, i))
            .collect(),
    };
    Ok(LayerKernel {
        beta: BetaCoeffs::new(layer, combine(&vertices, lambdas))?,
        g_table,
        profile,
    })
}

fn combine(vertices: &[BetaCoeffs], weights: &[f64]) -> Vec<f64> {
    let d = vertices[0].beta.len();
    let mut beta = vec![0.0; d];
    for (v, w) in vertices.iter().zip(weights) {
        for (b, x) in beta.iter_mut().zip(&v.beta) {
            *b += w * x;
        }
    }
    beta
}

/// The uniform vertex mixture `(1/(p+1)) Σ_i β^(i)`.
pub fn universal_layer_kernel(layer: LayerParams) -> Result<LayerKernel> {
    let d = layer.p() + 1;
    mix_vertices(layer, &vec![1.0 / d as f64; d])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l42() -> LayerParams {
        LayerParams::new(4, 2).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
    }

    #[test]
    fn g_tables() {
        let k = make_layer_kernel(l42(), vec![1.0 / 3.0, -1.0 / 6.0, 1.0]).unwrap();
        assert!(close(k.g_table(), &[1.0 / 3.0, 1.0 / 6.0, 1.0]));
        let k = make_layer_kernel(l42(), vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(k.g_table(), &[1.0, 1.0, 1.0]);
        let k = make_layer_kernel(l42(), vec![-1.0, 1.0, 0.0]).unwrap();
        assert_eq!(k.g_table(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_inadmissible_with_reason() {
        let err = make_layer_kernel(l42(), vec![0.0, 0.0, 2.0]).unwrap_err();
        assert!(err.to_string().contains("diagonal"), "{err}");
        let err = make_layer_kernel(l42(), vec![1.0, -1.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("V_1"), "{err}");
    }

    #[test]
    fn mixtures() {
        let k = mix_vertices(l42(), &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(k.g_table(), &[1.0, 1.0, 1.0]);
        let u = mix_vertices(l42(), &[1.0 / 3.0; 3]).unwrap();
        assert!(close(&u.beta().beta, &[1.0 / 3.0, -1.0 / 6.0, 1.0]));
        assert_eq!(u, universal_layer_kernel(l42()).unwrap());
        let z = mix_vertices(l42(), &[0.0; 3]).unwrap();
        assert!(z.profile().lambdas.iter().all(|v| *v == 0.0));
        assert!(mix_vertices(l42(), &[-0.1, 0.5, 0.5]).is_err());
        assert!(mix_vertices(l42(), &[0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn from_values_complements_heavy_layers() {
        // C(<x,y>, 3) on layer (5, 4): complemented inner products are <x,y> - 3
        let heavy = LayerParams::new(5, 4).unwrap();
        let k = layer_kernel_from_values(heavy, |k| {
            crate::scheme::choose(k, 3) / crate::scheme::choose(4, 3)
        })
        .unwrap();
        assert_eq!(k.layer(), LayerParams::new(5, 1).unwrap());
        assert!(close(k.g_table(), &[0.25, 1.0]));
        assert!(close(&k.beta().beta, &[0.25, 0.75]));
    }

    #[test]
    fn table_and_beta_agree_at_small_n() {
        for n in 2..=12 {
            for p in 0..=n / 2 {
                let l = LayerParams::new(n, p).unwrap();
                let u = universal_layer_kernel(l).unwrap();
                let from_beta = u.beta().g_table();
                for (a, b) in u.g_table().iter().zip(&from_beta) {
                    assert!((a - b).abs() <= 1e-9, "n={n} p={p}");
                }
                assert!((u.diagonal() - 1.0).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn table_kernels_checked_on_their_spectrum() {
        assert!(layer_kernel_from_table(l42(), vec![-1.0, 0.0, 1.0]).is_ok());
        let err = layer_kernel_from_table(l42(), vec![1.0, -1.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("V_"), "{err}");
        let err = layer_kernel_from_table(l42(), vec![2.0, 2.0, 2.0]).unwrap_err();
        assert!(err.to_string().contains("diagonal"), "{err}");
    }
}
