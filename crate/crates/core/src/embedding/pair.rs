use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use super::bits::WideBits;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

/// Default `c_t` in `t = ceil(c_t ln(1/ε') / ε'²)`.
pub const DEFAULT_C_T: f64 = 8.0;
/// Largest accepted output width `n t`.
pub const MAX_WIDTH: u64 = 10_000_000;
/// Largest accepted total size of the bit tables, in bits.
pub const MAX_TABLE_BITS: u64 = 1 << 32;
/// Builds attempted before giving up.
pub const MAX_ATTEMPTS: u64 = 10;

const MAGIC: &[u8; 4] = b"JKEM";
const VERSION: u32 = 1;

/// Bits per coordinate for per-coordinate accuracy `eps_coord`.
pub fn bits_per_coordinate(eps_coord: f64, c_t: f64) -> u64 {
    (c_t * (1.0 / eps_coord).ln() / (eps_coord * eps_coord)).ceil() as u64
}

/// The rounding grid for per-coordinate accuracy `eps_coord`: multiples of
/// `eps_coord / 3` in `[0, 1]`, plus `1.0` itself.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub step: f64,
    pub values: Vec<f64>,
    /// Width of the cell `[values[k], values[k] + widths[k])` rounded onto
    /// `values[k]`. The cell of `1.0` has width zero.
    pub widths: Vec<f64>,
}

impl Grid {
    pub fn new(eps_coord: f64) -> Self {
        let step = eps_coord / 3.0;
        let last = (1.0 / step + 1e-9).floor() as usize;
        let mut values: Vec<f64> = (0..=last).map(|k| (k as f64 * step).min(1.0)).collect();
        if (values[last] - 1.0).abs() <= 1e-9 {
            values[last] = 1.0;
        } else {
            values.push(1.0);
        }
        let widths = (0..values.len())
            .map(|k| values.get(k + 1).map_or(0.0, |next| next - values[k]))
            .collect();
        Self { step, values, widths }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the grid value `x` rounds down to. `x` must lie in `[0, 1]`
    /// up to `1e-12`.
    pub fn index(&self, x: f64) -> Result<usize> {
        if !(-1e-12..=1.0 + 1e-12).contains(&x) {
            return Err(Error::InvalidArgument(format!("coordinate {x} outside [0, 1]")));
        }
        let top = self.values.len() - 1;
        if x >= 1.0 - 1e-12 {
            return Ok(top);
        }
        // Tolerate last-bit drift so stored grid values map to their own index.
        let k = (x.max(0.0) / self.step + 1e-9).floor() as usize;
        Ok(k.min(top - 1))
    }
}

/// Two independent tables of Bernoulli rows, one per role, indexed by the
/// rounding grid. Row `(role, k)` has `t` bits with density `grid[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalEmbedderPair {
    /// Per-coordinate accuracy.
    pub epsilon: f64,
    pub t: usize,
    pub grid: Grid,
    rows: [Vec<WideBits>; 2],
    /// `cross[a * G + b] = <ψ₁(grid[a]), ψ₂(grid[b])>`.
    cross: Vec<u32>,
    /// `max |ab - <ψ₁(a), ψ₂(b)>/t|` over grid pairs.
    pub grid_deviation: f64,
    /// `max |xy - <ψ₁(x̄), ψ₂(ȳ)>/t|` over all `x, y` in `[0, 1]`, taken
    /// cell by cell: on a cell `xy` ranges over `[ab, (a+w_a)(b+w_b)]`.
    pub cell_error: f64,
}

impl IntervalEmbedderPair {
    fn from_rows(epsilon: f64, t: usize, grid: Grid, rows: [Vec<WideBits>; 2]) -> Self {
        let g = grid.len();
        let mut cross = vec![0u32; g * g];
        let mut grid_deviation: f64 = 0.0;
        let mut cell_error: f64 = 0.0;
        for a in 0..g {
            for b in 0..g {
                let c = rows[0][a].inner(&rows[1][b]);
                cross[a * g + b] = c as u32;
                let s = c as f64 / t as f64;
                let (va, vb) = (grid.values[a], grid.values[b]);
                let lo = va * vb;
                let hi = (va + grid.widths[a]) * (vb + grid.widths[b]);
                grid_deviation = grid_deviation.max((lo - s).abs());
                cell_error = cell_error.max((lo - s).abs()).max((hi - s).abs());
            }
        }
        Self {
            epsilon,
            t,
            grid,
            rows,
            cross,
            grid_deviation,
            cell_error,
        }
    }

    fn sample(epsilon: f64, t: usize, seed: u64) -> Self {
        let grid = Grid::new(epsilon);
        let rows = [streams::EMBED_ROLE_1, streams::EMBED_ROLE_2].map(|stream| {
            let mut rng = stream_rng(seed, stream);
            grid.values
                .iter()
                .map(|&v| {
                    let mut row = WideBits::zeros(t);
                    for i in 0..t {
                        if rng.random_bool(v) {
                            row.set(i);
                        }
                    }
                    row
                })
                .collect()
        });
        Self::from_rows(epsilon, t, grid, rows)
    }

    /// `ψ_role(x)`, role 1 or 2.
    pub fn row(&self, role: Role, x: f64) -> Result<&WideBits> {
        Ok(&self.rows[role.index()][self.grid.index(x)?])
    }

    /// `<ψ₁(x), ψ₂(y)>` from the precomputed table.
    pub fn cross_inner(&self, x: f64, y: f64) -> Result<usize> {
        let g = self.grid.len();
        Ok(self.cross[self.grid.index(x)? * g + self.grid.index(y)?] as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    First,
    Second,
}

impl Role {
    pub fn from_number(r: u8) -> Result<Self> {
        match r {
            1 => Ok(Role::First),
            2 => Ok(Role::Second),
            other => Err(Error::InvalidArgument(format!("role must be 1 or 2, got {other}"))),
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    fn index(self) -> usize {
        match self {
            Role::First => 0,
            Role::Second => 1,
        }
    }
}

/// The pair `(Ψ₁, Ψ₂)` mapping `[0,1]^n` into `{0,1}^{n t}` coordinate by
/// coordinate with a shared interval pair of accuracy `ε / n`.
///
/// A pair is only returned once certified: `n · cell_error <= ε`, which
/// bounds `|<x, y> - <Ψ₁x, Ψ₂y>/t|` by `ε` for every `x, y` in the cube.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeEmbedderPair {
    pub n: usize,
    pub epsilon: f64,
    /// Seed of the accepted build.
    pub seed: u64,
    /// Builds tried, including the accepted one.
    pub attempts: u64,
    pub interval: IntervalEmbedderPair,
}

/// An embedded point `Ψ_role(x)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EmbeddedPoint {
    pub role: Role,
    pub bits: WideBits,
}

impl EmbeddedPoint {
    pub fn inner(&self, other: &Self) -> usize {
        self.bits.inner(&other.bits)
    }
}

/// Smallest `ε` with `n · t(ε/n) <= MAX_WIDTH`.
pub fn min_epsilon(n: usize, c_t: f64) -> f64 {
    let width = |eps: f64| n as u64 * bits_per_coordinate(eps / n as f64, c_t);
    let (mut lo, mut hi) = (1e-9, 1.0 - 1e-12);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if width(mid) <= MAX_WIDTH {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Builds a certified pair with the default `c_t`.
pub fn build_pair(n: usize, epsilon: f64, seed: u64) -> Result<CubeEmbedderPair> {
    build_pair_with(n, epsilon, seed, DEFAULT_C_T)
}

/// Builds with seeds `seed, seed + 1, ...` until one passes the certificate,
/// at most [`MAX_ATTEMPTS`] times.
pub fn build_pair_with(n: usize, epsilon: f64, seed: u64, c_t: f64) -> Result<CubeEmbedderPair> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} not in (0, 1)")));
    }
    if !(c_t > 0.0) {
        return Err(Error::InvalidArgument(format!("c_t must be positive, got {c_t}")));
    }
    let eps_coord = epsilon / n as f64;
    let t = bits_per_coordinate(eps_coord, c_t);
    let width = n as u64 * t;
    if width > MAX_WIDTH {
        return Err(Error::EmbeddingTooWide {
            width,
            limit: MAX_WIDTH,
            min_epsilon: min_epsilon(n, c_t),
        });
    }
    let table_bits = 2 * Grid::new(eps_coord).len() as u64 * t;
    if table_bits > MAX_TABLE_BITS {
        return Err(Error::TooLarge {
            what: "embedding table bits",
            got: table_bits as usize,
            limit: MAX_TABLE_BITS as usize,
        });
    }
    let mut best = f64::INFINITY;
    for attempt in 0..MAX_ATTEMPTS {
        let s = seed.wrapping_add(attempt);
        let interval = IntervalEmbedderPair::sample(eps_coord, t as usize, s);
        let certified = n as f64 * interval.cell_error;
        if certified <= epsilon {
            return Ok(CubeEmbedderPair {
                n,
                epsilon,
                seed: s,
                attempts: attempt + 1,
                interval,
            });
        }
        best = best.min(certified);
    }
    Err(Error::Numerical(format!(
        "no embedding certified within {MAX_ATTEMPTS} attempts (best worst-case error {best:.5} > {epsilon})"
    )))
}

impl CubeEmbedderPair {
    pub fn t(&self) -> usize {
        self.interval.t
    }

    pub fn width(&self) -> usize {
        self.n * self.interval.t
    }

    /// `n · cell_error`, an upper bound on the inner-product error.
    pub fn certified_error(&self) -> f64 {
        self.n as f64 * self.interval.cell_error
    }

    pub fn embed(&self, role: Role, x: &[f64]) -> Result<EmbeddedPoint> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let rows: Vec<&WideBits> = x
            .iter()
            .map(|&v| self.interval.row(role, v))
            .collect::<Result<_>>()?;
        Ok(EmbeddedPoint {
            role,
            bits: WideBits::concat(&rows),
        })
    }

    /// `<Ψ₁x, Ψ₂y> / t` computed from the table, without building bit vectors.
    pub fn embedded_inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.n || y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: if x.len() != self.n { x.len() } else { y.len() },
            });
        }
        let mut total = 0;
        for (a, b) in x.iter().zip(y) {
            total += self.interval.cross_inner(*a, *b)?;
        }
        Ok(total as f64 / self.t() as f64)
    }

    /// Binary form: `"JKEM"`, version `u32`, `n: u32`, `t: u32`, `eps: f64`,
    /// `seed: u64` (all little-endian), then the role-1 rows followed by the
    /// role-2 rows in grid order, each `ceil(t / 8)` bytes, bit `i` at bit
    /// `i % 8` of byte `i / 8`.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.t() as u32).to_le_bytes())?;
        w.write_all(&self.epsilon.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for role in &self.interval.rows {
            for row in role {
                w.write_all(&row.to_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not an embedding file (bad magic)".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported embedding version {version}")));
        }
        r.read_exact(&mut u32buf)?;
        let n = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)?;
        let t = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u64buf)?;
        let epsilon = f64::from_le_bytes(u64buf);
        r.read_exact(&mut u64buf)?;
        let seed = u64::from_le_bytes(u64buf);
        if n == 0 || !(epsilon > 0.0 && epsilon < 1.0) || t == 0 || (n * t) as u64 > MAX_WIDTH {
            return Err(Error::Parse(format!("bad header n = {n}, t = {t}, eps = {epsilon}")));
        }
        let grid = Grid::new(epsilon / n as f64);
        let mut bytes = vec![0u8; t.div_ceil(8)];
        let mut read_role = |r: &mut dyn Read| -> Result<Vec<WideBits>> {
            (0..grid.len())
                .map(|_| {
                    r.read_exact(&mut bytes)?;
                    WideBits::from_bytes(t, &bytes)
                })
                .collect()
        };
        let first = read_role(&mut r)?;
        let second = read_role(&mut r)?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Parse(format!("{} trailing bytes", rest.len())));
        }
        let interval = IntervalEmbedderPair::from_rows(epsilon / n as f64, t, grid, [first, second]);
        Ok(Self {
            n,
            epsilon,
            seed,
            attempts: 1,
            interval,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn grid_shape() {
        let g = Grid::new(0.1);
        assert_eq!(g.values[0], 0.0);
        assert_eq!(*g.values.last().unwrap(), 1.0);
        assert_eq!(g.widths.last(), Some(&0.0));
        assert!(g.values.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= g.step + 1e-15));
        assert_eq!(g.index(1.0).unwrap(), g.len() - 1);
        assert_eq!(g.index(0.0).unwrap(), 0);
        assert!(g.index(1.01).is_err());
        assert!(g.index(-0.5).is_err());
        for k in 0..g.len() {
            assert_eq!(g.index(g.values[k]).unwrap(), k);
        }
    }

    #[test]
    fn grid_soundness() {
        let mut rng = stream_rng(1, 0);
        for eps in [0.3, 0.1, 0.02] {
            let g = Grid::new(eps);
            for _ in 0..2000 {
                let (x, y): (f64, f64) = (rng.random(), rng.random());
                let (a, b) = (g.values[g.index(x).unwrap()], g.values[g.index(y).unwrap()]);
                assert!(a <= x + 1e-15 && x - a <= g.step + 1e-15);
                assert!((x * y - a * b).abs() <= g.step * (x + y) + 1e-15);
                assert!((x * y - a * b).abs() <= eps);
            }
        }
    }

    #[test]
    fn t_formula_and_width_guard() {
        assert_eq!(bits_per_coordinate(0.02, 8.0), 78241);
        let t1 = bits_per_coordinate(0.1, 8.0) as f64;
        let t2 = bits_per_coordinate(0.05, 8.0) as f64;
        assert!(t2 / t1 > 4.0 && t2 / t1 < 5.5);
        match build_pair(64, 0.01, 0) {
            Err(Error::EmbeddingTooWide { min_epsilon, .. }) => {
                assert!(min_epsilon > 0.01 && min_epsilon < 1.0);
                let t = bits_per_coordinate(min_epsilon / 64.0, DEFAULT_C_T);
                assert!(64 * t <= MAX_WIDTH);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_input_embeds_to_zero() {
        let pair = build_pair(3, 0.3, 5).unwrap();
        let z = pair.embed(Role::First, &[0.0; 3]).unwrap();
        assert_eq!(z.bits.count_ones(), 0);
        assert_eq!(z.bits.len(), pair.width());
        let x = pair.embed(Role::Second, &[1.0, 0.5, 0.2]).unwrap();
        assert_eq!(z.inner(&x), 0);
    }

    #[test]
    fn certified_and_deterministic() {
        let a = build_pair(2, 0.2, 9).unwrap();
        let b = build_pair(2, 0.2, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.certified_error() <= 0.2);
        assert!(a.interval.grid_deviation <= 0.2 / 2.0);
        let one = a.embedded_inner(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((one - 1.0).abs() <= 0.2);
        // Same cell, same embedding.
        let s = a.interval.grid.step;
        let p = a.embed(Role::First, &[0.3 * s, 0.5]).unwrap();
        let q = a.embed(Role::First, &[0.9 * s, 0.5]).unwrap();
        assert_eq!(p, q);
        let r = a.embed(Role::Second, &[0.9 * s, 0.5]).unwrap();
        assert_ne!(q.bits, r.bits);
    }

    #[test]
    fn bitwise_and_table_inner_products_agree() {
        let pair = build_pair(3, 0.3, 2).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            let u = pair.embed(Role::First, &x).unwrap();
            let v = pair.embed(Role::Second, &y).unwrap();
            let direct = u.inner(&v) as f64 / pair.t() as f64;
            assert_eq!(direct, pair.embedded_inner(&x, &y).unwrap());
        }
    }

    #[test]
    fn binary_round_trip() {
        let pair = build_pair(2, 0.25, 4).unwrap();
        let mut buf = Vec::new();
        pair.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"JKEM");
        let back = CubeEmbedderPair::read_from(&buf[..]).unwrap();
        assert_eq!(back.interval, pair.interval);
        assert_eq!(back.seed, pair.seed);
        assert!(CubeEmbedderPair::read_from(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(CubeEmbedderPair::read_from(&bad[..]).is_err());
    }
}
