use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::layer::{
    layer_kernel_from_table, layer_kernel_from_values, make_layer_kernel, universal_layer_kernel, LayerKernel,
};
use super::point::HypercubePoint;
use crate::error::{Error, Result};
use crate::scheme::{choose, LayerParams, MAX_N};

/// Memory guard for [`gram`].
pub const GRAM_MAX_POINTS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    DirectSum,
    Universal,
    Conjunction,
    SparseConjunction,
}

/// Parameters of a sparse conjunction kernel `C(<x,y>, ell) / C(s, ell)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseParams {
    pub s: usize,
    pub ell: usize,
}

/// A kernel on `{0,1}^n` built as a direct sum of layer kernels.
///
/// Layers are keyed by their actual weight `p`; the stored kernel belongs to
/// the canonical layer `min(p, n - p)` and evaluation complements both points
/// when `2p > n`. Pairs on different layers evaluate to zero, and so do
/// layers without an entry.
///
/// The sparse conjunction kernel is the one exception: it is a plain
/// inner-product kernel on the whole cube, so its support point (the
/// conjunction indicator) may sit on a different layer than the data.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    n: usize,
    kind: KernelKind,
    layers: BTreeMap<usize, LayerKernel>,
    sparse: Option<SparseParams>,
}

impl KernelSpec {
    /// Direct sum from `(p, kernel)` pairs. Each kernel must sit on layer
    /// `min(p, n - p)` of dimension `n`.
    pub fn direct_sum(
        n: usize,
        kind: KernelKind,
        layers: impl IntoIterator<Item = (usize, LayerKernel)>,
    ) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::InvalidArgument(format!("dimension {n} outside 1..=64")));
        }
        let mut map = BTreeMap::new();
        for (p, k) in layers {
            let expect = LayerParams::new(n, p)?.canonical();
            if k.layer() != expect {
                return Err(Error::InvalidArgument(format!(
                    "layer p = {p} needs a kernel on {expect:?}, got {:?}",
                    k.layer()
                )));
            }
            map.insert(p, k);
        }
        Ok(Self {
            n,
            kind,
            layers: map,
            sparse: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn sparse_params(&self) -> Option<SparseParams> {
        self.sparse
    }

    pub fn layer(&self, p: usize) -> Option<&LayerKernel> {
        self.layers.get(&p)
    }

    pub fn layers(&self) -> impl Iterator<Item = (usize, &LayerKernel)> {
        self.layers.iter().map(|(p, k)| (*p, k))
    }

    /// `k(x, y)`.
    pub fn evaluate(&self, x: &HypercubePoint, y: &HypercubePoint) -> Result<f64> {
        if x.n() != self.n || y.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: if x.n() != self.n { x.n() } else { y.n() },
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &HypercubePoint, y: &HypercubePoint) -> f64 {
        if let Some(SparseParams { s, ell }) = self.sparse {
            return choose(x.inner(y), ell) / choose(s, ell);
        }
        let p = x.weight();
        if p != y.weight() {
            return 0.0;
        }
        match self.layers.get(&p) {
            None => 0.0,
            Some(k) if 2 * p > self.n => k.value_at(x.complement().inner(&y.complement())),
            Some(k) => k.value_at(x.inner(y)),
        }
    }

    pub fn to_file(&self) -> SpecFile {
        SpecFile {
            n: self.n,
            kind: self.kind,
            layers: self
                .layers
                .iter()
                .map(|(p, k)| LayerEntry {
                    p: *p,
                    beta: k.beta().beta.clone(),
                    g: Some(k.g_table().to_vec()),
                })
                .collect(),
            params: self.sparse,
        }
    }

    pub fn from_file(file: SpecFile) -> Result<Self> {
        let n = file.n;
        let mut layers = Vec::with_capacity(file.layers.len());
        for entry in file.layers {
            let canon = LayerParams::new(n, entry.p)?.canonical();
            let kernel = match entry.g {
                Some(g) => layer_kernel_from_table(canon, g)?.with_beta(entry.beta, BETA_TABLE_TOL)?,
                None => make_layer_kernel(canon, entry.beta)?,
            };
            layers.push((entry.p, kernel));
        }
        let mut spec = Self::direct_sum(n, file.kind, layers)?;
        if file.kind == KernelKind::SparseConjunction {
            let params = file.params.ok_or_else(|| {
                Error::Parse("sparse_conjunction spec needs \"params\": {s, ell}".into())
            })?;
            if params.ell > params.s || params.s > n {
                return Err(Error::InvalidArgument(format!("bad sparse params {params:?}")));
            }
            spec.sparse = Some(params);
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form: `{"n": int, "kind": string, "layers": [{"p": int, "beta": [floats], "g": [floats]}]}`.
///
/// `beta` is given on the canonical layer `min(p, n - p)`. Sparse conjunction
/// specs also carry `"params": {"s", "ell"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub n: usize,
    pub kind: KernelKind,
    pub layers: Vec<LayerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SparseParams>,
}

/// One layer of a [`SpecFile`]. `g`, the inner-product table on the
/// canonical layer, is optional on input; when present it is used for
/// evaluation and must agree with `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub p: usize,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
}

/// Allowed disagreement between `beta` and `g` in a spec file, relative to
/// the table's magnitude. Coefficients of large layers are ill-conditioned.
pub const BETA_TABLE_TOL: f64 = 1e-5;

impl Serialize for KernelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for KernelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Self::from_file(SpecFile::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// The universal kernel: on every layer, the uniform mixture of the vertex
/// kernels of its canonical layer. Every point has `k(x, x) = 1`.
///
/// Costs `O(p^2)` per canonical layer to build; evaluation is `O(1)`.
pub fn universal_kernel(n: usize) -> Result<KernelSpec> {
    if n == 0 || n > MAX_N {
        return Err(Error::InvalidArgument(format!("dimension {n} outside 1..=64")));
    }
    let canonical: Vec<LayerKernel> = (0..=n / 2)
        .map(|p| universal_layer_kernel(LayerParams::new(n, p)?))
        .collect::<Result<_>>()?;
    KernelSpec::direct_sum(
        n,
        KernelKind::Universal,
        (0..=n).map(|p| (p, canonical[p.min(n - p)].clone())),
    )
}

/// Single-layer kernel `(1/N_p) Σ_{t <= T} C(<x, y>, t)` with
/// `T = min(p, ceil(t_scale * sqrt(n) * ln(1/ε)))` and `N_p = Σ_{t <= T} C(p, t)`.
pub fn conjunction_kernel(n: usize, p: usize, epsilon: f64, t_scale: f64) -> Result<KernelSpec> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} not in (0, 1)")));
    }
    let layer = LayerParams::new(n, p)?;
    let t = conjunction_degree(n, p, epsilon, t_scale);
    conjunction_kernel_with_degree(layer, t)
}

/// Degree cutoff used by [`conjunction_kernel`].
pub fn conjunction_degree(n: usize, p: usize, epsilon: f64, t_scale: f64) -> usize {
    let raw = (t_scale * (n as f64).sqrt() * (1.0 / epsilon).ln()).ceil();
    (raw.max(0.0) as usize).min(p)
}

pub fn conjunction_kernel_with_degree(layer: LayerParams, t: usize) -> Result<KernelSpec> {
    let t = t.min(layer.p());
    let norm: f64 = (0..=t).map(|i| choose(layer.p(), i)).sum();
    let k = layer_kernel_from_values(layer, |ip| {
        (0..=t).map(|i| choose(ip, i)).sum::<f64>() / norm
    })?;
    KernelSpec::direct_sum(layer.n(), KernelKind::Conjunction, [(layer.p(), k)])
}

/// `k(x, y) = C(<x, y>, ell) / C(s, ell)`, intended for data on layer `s`.
pub fn sparse_conjunction_kernel(n: usize, s: usize, ell: usize) -> Result<KernelSpec> {
    if ell > s {
        return Err(Error::InvalidArgument(format!("ell = {ell} exceeds s = {s}")));
    }
    let layer = LayerParams::new(n, s)?;
    let norm = choose(s, ell);
    let k = layer_kernel_from_values(layer, |ip| choose(ip, ell) / norm)?;
    let mut spec = KernelSpec::direct_sum(n, KernelKind::SparseConjunction, [(s, k)])?;
    spec.sparse = Some(SparseParams { s, ell });
    Ok(spec)
}

/// `m × m` Gram matrix of `spec` over `points`.
pub fn gram(spec: &KernelSpec, points: &[HypercubePoint]) -> Result<DMatrix<f64>> {
    if points.len() > GRAM_MAX_POINTS {
        return Err(Error::TooLarge {
            what: "gram points",
            got: points.len(),
            limit: GRAM_MAX_POINTS,
        });
    }
    if let Some(bad) = points.iter().find(|x| x.n() != spec.n) {
        return Err(Error::DimensionMismatch {
            expected: spec.n,
            got: bad.n(),
        });
    }
    let m = points.len();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = spec.eval_unchecked(&points[i], &points[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Cross Gram: entry `(i, j) = k(rows[i], cols[j])`.
pub fn cross_gram(
    spec: &KernelSpec,
    rows: &[HypercubePoint],
    cols: &[HypercubePoint],
) -> Result<DMatrix<f64>> {
    for x in rows.iter().chain(cols) {
        if x.n() != spec.n {
            return Err(Error::DimensionMismatch {
                expected: spec.n,
                got: x.n(),
            });
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        spec.eval_unchecked(&rows[i], &cols[j])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::oracle::sorted_eigenvalues;

    fn pt(s: &str) -> HypercubePoint {
        s.parse().unwrap()
    }

    #[test]
    fn universal_n4_values() {
        let u = universal_kernel(4).unwrap();
        let beta = &u.layer(2).unwrap().beta().beta;
        for (a, b) in beta.iter().zip([1.0 / 3.0, -1.0 / 6.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((u.evaluate(&pt("1100"), &pt("0011")).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((u.evaluate(&pt("1100"), &pt("1010")).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(u.evaluate(&pt("1100"), &pt("1110")).unwrap(), 0.0);
        assert!(u.evaluate(&pt("1100"), &pt("11000")).is_err());
    }

    #[test]
    fn universal_unit_diagonal_everywhere() {
        for n in [1, 2, 5, 8, 13, 24, 40, 64] {
            let u = universal_kernel(n).unwrap();
            for p in 0..=n {
                let x = HypercubePoint::from_indices(n, &(0..p).collect::<Vec<_>>()).unwrap();
                let d = u.evaluate(&x, &x).unwrap();
                assert!((d - 1.0).abs() <= 1e-12, "n={n} p={p}: {d}");
            }
        }
    }

    #[test]
    fn gram_shapes() {
        let u = universal_kernel(4).unwrap();
        let g = gram(&u, &[pt("1100")]).unwrap();
        assert_eq!(g.shape(), (1, 1));
        assert!((g[(0, 0)] - 1.0).abs() < 1e-12);

        let pts = [pt("1100"), pt("1110"), pt("0011"), pt("0111")];
        let g = gram(&u, &pts).unwrap();
        assert_eq!(g[(0, 1)], 0.0);
        assert_eq!(g[(0, 3)], 0.0);
        assert_eq!(g[(2, 1)], 0.0);
        assert!(g[(1, 3)] != 0.0);
    }

    #[test]
    fn gram_single_layer_psd() {
        let u = universal_kernel(6).unwrap();
        let pts: Vec<_> = (0u64..64)
            .filter(|b| b.count_ones() == 3)
            .map(|b| HypercubePoint::new(b, 6).unwrap())
            .collect();
        let g = gram(&u, &pts).unwrap();
        assert!(sorted_eigenvalues(&g).last().unwrap() >= &-1e-8);
        assert!((0..pts.len()).all(|i| (g[(i, i)] - 1.0).abs() < 1e-12));
    }

    #[test]
    fn conjunction_values() {
        let l = LayerParams::new(6, 2).unwrap();
        let k = conjunction_kernel_with_degree(l, 2).unwrap();
        let x = HypercubePoint::from_indices(6, &[0, 1]).unwrap();
        let y = HypercubePoint::from_indices(6, &[2, 3]).unwrap();
        let z = HypercubePoint::from_indices(6, &[1, 2]).unwrap();
        assert!((k.evaluate(&x, &y).unwrap() - 0.25).abs() < 1e-12);
        assert!((k.evaluate(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let k1 = conjunction_kernel_with_degree(l, 1).unwrap();
        assert!((k1.evaluate(&x, &z).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(conjunction_kernel(6, 2, 1.5, 1.0).is_err());
        assert_eq!(conjunction_degree(16, 4, 0.1, 1.0), 4);
        assert_eq!(conjunction_degree(16, 16, 0.5, 1.0), 3);
    }

    #[test]
    fn conjunction_heavy_layer_unit_diagonal() {
        let k = conjunction_kernel(7, 5, 0.3, 1.0).unwrap();
        let x = HypercubePoint::from_indices(7, &[0, 1, 2, 3, 4]).unwrap();
        let y = HypercubePoint::from_indices(7, &[2, 3, 4, 5, 6]).unwrap();
        assert!((k.evaluate(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let t = conjunction_degree(7, 5, 0.3, 1.0);
        let norm: f64 = (0..=t).map(|i| choose(5, i)).sum();
        let expect: f64 = (0..=t).map(|i| choose(3, i)).sum::<f64>() / norm;
        assert!((k.evaluate(&x, &y).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn sparse_values() {
        let k = sparse_conjunction_kernel(6, 3, 2).unwrap();
        let x = HypercubePoint::from_indices(6, &[0, 1, 2]).unwrap();
        assert!((k.evaluate(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let c = HypercubePoint::from_indices(6, &[0, 1]).unwrap();
        assert!((k.evaluate(&c, &x).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(sparse_conjunction_kernel(6, 3, 4).is_err());
    }

    #[test]
    fn json_round_trip() {
        for spec in [
            universal_kernel(7).unwrap(),
            universal_kernel(64).unwrap(),
            conjunction_kernel(9, 6, 0.2, 1.0).unwrap(),
            sparse_conjunction_kernel(8, 3, 2).unwrap(),
        ] {
            let back = KernelSpec::from_json(&spec.to_json().unwrap()).unwrap();
            assert_eq!(back, spec);
        }
        let raw = r#"{"n": 4, "kind": "direct_sum", "layers": [{"p": 2, "beta": [0, 0, 2]}]}"#;
        assert!(KernelSpec::from_json(raw).is_err());
    }
}
