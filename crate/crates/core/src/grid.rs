//! Dyadic grids at scale `δ = 2^-m` and discretized subsets of `R^n`.
//!
//! A cell is addressed globally by an integer vector `k`; it covers the
//! half-open box `[(k - 1/2)δ, (k + 1/2)δ)` and its center is `kδ`. The
//! lattice of centers is therefore closed under addition and negation, so
//! sumsets and reflections are exact on centers, and a point `x` is binned to
//! the cell `round(x / δ)`. Grid boxes are always unions of such cells, which
//! keeps their bounds dyadic rationals.
//!
//! Covering numbers are computed by box counting. A ρ-box count agrees with
//! the ball-covering number `N_ρ` up to a factor `(2⌈√n⌉)^n`, see
//! [`COVERING_GAP`].

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};

/// Maximum supported ambient dimension.
pub const MAX_DIM: usize = 4;

/// Default cell budget for a single grid.
pub const DEFAULT_BUDGET: u64 = 1 << 28;

/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "SUMPRODLAB_BUDGET";

/// Global integer cell coordinates; unused trailing axes are zero.
pub type Coord = [i64; MAX_DIM];

/// Ratio between box counting and ball covering, `(2⌈√n⌉)^n`.
pub fn covering_gap(n: usize) -> f64 {
    let side = 2.0 * (n as f64).sqrt().ceil();
    side.powi(n as i32)
}

/// Alias kept for documentation links.
pub const COVERING_GAP: fn(usize) -> f64 = covering_gap;

/// Constant `C` in `N_δ(f A) <= C K^n N_δ(A)` for [`map_image`]; `C = 4^n`.
pub fn map_image_constant(n: usize) -> f64 {
    4f64.powi(n as i32)
}

/// Active cell budget (environment override or default).
pub fn cell_budget() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .filter(|&b| b > 0)
        .unwrap_or(DEFAULT_BUDGET)
}

pub(crate) fn check_budget(required: u128) -> Result<()> {
    let budget = cell_budget();
    if required > budget as u128 {
        return Err(LabError::Budget { required, budget });
    }
    Ok(())
}

/// Bin a real coordinate to the index of the cell containing it.
#[inline]
pub fn bin(x: f64, m: u32) -> i64 {
    (x * scale_inv(m)).round() as i64
}

#[inline]
pub(crate) fn scale_inv(m: u32) -> f64 {
    (2.0f64).powi(m as i32)
}

/// Axis-aligned box of cells at scale `δ = 2^-m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicGrid {
    n: usize,
    m: u32,
    lo: Coord,
    dims: [u64; MAX_DIM],
}

impl DyadicGrid {
    /// Grid whose cells have global coordinates `lo[i] .. lo[i] + dims[i]`.
    pub fn new(n: usize, m: u32, lo: &[i64], dims: &[u64]) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(LabError::domain(format!("dimension {n} outside 1..=4")));
        }
        if m > 40 {
            return Err(LabError::domain(format!("scale exponent {m} too fine")));
        }
        if lo.len() != n || dims.len() != n {
            return Err(LabError::domain("grid bounds do not match dimension"));
        }
        let mut l = [0i64; MAX_DIM];
        let mut d = [1u64; MAX_DIM];
        let mut total: u128 = 1;
        for i in 0..n {
            if dims[i] == 0 {
                return Err(LabError::domain("grid box must have positive extent"));
            }
            l[i] = lo[i];
            d[i] = dims[i];
            total = total.saturating_mul(dims[i] as u128);
        }
        check_budget(total)?;
        Ok(Self { n, m, lo: l, dims: d })
    }

    /// Grid covering the closed real box `[lo, hi]` (cells whose center lies in it).
    pub fn covering_box(n: usize, m: u32, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let inv = scale_inv(m);
        let mut a = vec![0i64; n];
        let mut d = vec![0u64; n];
        for i in 0..n {
            let k0 = (lo[i] * inv).ceil() as i64;
            let k1 = (hi[i] * inv).floor() as i64;
            if k1 < k0 {
                return Err(LabError::domain("box contains no cell center"));
            }
            a[i] = k0;
            d[i] = (k1 - k0 + 1) as u64;
        }
        Self::new(n, m, &a, &d)
    }

    /// Rebuild from real box bounds as stored in files.
    pub fn from_bounds(n: usize, m: u32, box_lo: &[f64], box_hi: &[f64]) -> Result<Self> {
        let inv = scale_inv(m);
        let mut a = vec![0i64; n];
        let mut d = vec![0u64; n];
        for i in 0..n {
            let s = box_lo[i] * inv + 0.5;
            let e = box_hi[i] * inv + 0.5;
            if s.fract() != 0.0 || e.fract() != 0.0 || e <= s {
                return Err(LabError::Format(format!(
                    "box bounds [{}, {}] are not aligned to the cell lattice at m={m}",
                    box_lo[i], box_hi[i]
                )));
            }
            a[i] = s as i64;
            d[i] = (e - s) as u64;
        }
        Self::new(n, m, &a, &d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Scale `δ = 2^-m`.
    pub fn delta(&self) -> f64 {
        1.0 / scale_inv(self.m)
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo[..self.n]
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims[..self.n]
    }

    pub fn cell_count(&self) -> u64 {
        self.dims().iter().product()
    }

    pub fn box_lo(&self) -> Vec<f64> {
        let d = self.delta();
        (0..self.n).map(|i| (self.lo[i] as f64 - 0.5) * d).collect()
    }

    pub fn box_hi(&self) -> Vec<f64> {
        let d = self.delta();
        (0..self.n)
            .map(|i| (self.lo[i] as f64 + self.dims[i] as f64 - 0.5) * d)
            .collect()
    }

    pub fn contains(&self, c: &Coord) -> bool {
        (0..self.n).all(|i| c[i] >= self.lo[i] && ((c[i] - self.lo[i]) as u64) < self.dims[i])
    }

    /// Row-major index of a global coordinate (last axis fastest).
    pub fn index_of(&self, c: &Coord) -> Option<u64> {
        if !self.contains(c) {
            return None;
        }
        let mut idx = 0u64;
        for i in 0..self.n {
            idx = idx * self.dims[i] + (c[i] - self.lo[i]) as u64;
        }
        Some(idx)
    }

    pub fn coord_of(&self, mut idx: u64) -> Coord {
        let mut c = [0i64; MAX_DIM];
        for i in (0..self.n).rev() {
            c[i] = self.lo[i] + (idx % self.dims[i]) as i64;
            idx /= self.dims[i];
        }
        c
    }

    pub fn center(&self, c: &Coord) -> Vec<f64> {
        let d = self.delta();
        (0..self.n).map(|i| c[i] as f64 * d).collect()
    }

    /// Smallest grid containing every coordinate in `coords`.
    pub fn bounding(n: usize, m: u32, coords: &[Coord]) -> Result<Self> {
        if coords.is_empty() {
            return Self::new(n, m, &vec![0; n], &vec![1; n]);
        }
        let mut lo = [i64::MAX; MAX_DIM];
        let mut hi = [i64::MIN; MAX_DIM];
        for c in coords {
            for i in 0..n {
                lo[i] = lo[i].min(c[i]);
                hi[i] = hi[i].max(c[i]);
            }
        }
        let dims: Vec<u64> = (0..n).map(|i| (hi[i] - lo[i] + 1) as u64).collect();
        Self::new(n, m, &lo[..n], &dims)
    }

    /// Smallest grid containing both grids (same `n` and `m`).
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.m != other.m {
            return Err(LabError::domain("grids differ in dimension or scale"));
        }
        let mut lo = vec![0i64; self.n];
        let mut dims = vec![0u64; self.n];
        for i in 0..self.n {
            let a = self.lo[i].min(other.lo[i]);
            let b = (self.lo[i] + self.dims[i] as i64).max(other.lo[i] + other.dims[i] as i64);
            lo[i] = a;
            dims[i] = (b - a) as u64;
        }
        Self::new(self.n, self.m, &lo, &dims)
    }
}

/// A discretized subset of `R^n`: the set of occupied cells of a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSet {
    grid: DyadicGrid,
    cells: Vec<u64>,
}

impl GridSet {
    /// Build from row-major indices; indices are sorted and deduplicated.
    pub fn new(grid: DyadicGrid, mut cells: Vec<u64>) -> Result<Self> {
        let total = grid.cell_count();
        if let Some(&bad) = cells.iter().find(|&&c| c >= total) {
            return Err(LabError::domain(format!("cell index {bad} outside grid of {total} cells")));
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(Self { grid, cells })
    }

    pub fn empty(n: usize, m: u32) -> Result<Self> {
        Ok(Self { grid: DyadicGrid::bounding(n, m, &[])?, cells: Vec::new() })
    }

    /// Build from global coordinates on the bounding grid.
    pub fn from_coords(n: usize, m: u32, mut coords: Vec<Coord>) -> Result<Self> {
        coords.sort_unstable();
        coords.dedup();
        let grid = DyadicGrid::bounding(n, m, &coords)?;
        let mut cells: Vec<u64> = coords.iter().map(|c| grid.index_of(c).unwrap()).collect();
        cells.sort_unstable();
        Ok(Self { grid, cells })
    }

    /// Bin real points at scale `2^-m`.
    pub fn from_points<P: AsRef<[f64]>>(n: usize, m: u32, points: &[P]) -> Result<Self> {
        let coords = points
            .iter()
            .map(|p| {
                let p = p.as_ref();
                let mut c = [0i64; MAX_DIM];
                for i in 0..n {
                    c[i] = bin(p[i], m);
                }
                c
            })
            .collect();
        Self::from_coords(n, m, coords)
    }

    /// All cells whose center lies in the closed box `[lo, hi]`.
    pub fn closed_box(n: usize, m: u32, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let grid = DyadicGrid::covering_box(n, m, lo, hi)?;
        Ok(Self::full(grid))
    }

    /// All cells whose center lies in the half-open box `[lo, hi)`.
    pub fn half_open_box(n: usize, m: u32, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let inv = scale_inv(m);
        let mut a = vec![0i64; n];
        let mut d = vec![0u64; n];
        for i in 0..n {
            let k0 = (lo[i] * inv).ceil() as i64;
            let k1 = (hi[i] * inv).ceil() as i64 - 1;
            if k1 < k0 {
                return Err(LabError::domain("box contains no cell center"));
            }
            a[i] = k0;
            d[i] = (k1 - k0 + 1) as u64;
        }
        Ok(Self::full(DyadicGrid::new(n, m, &a, &d)?))
    }

    /// Every cell of the grid.
    pub fn full(grid: DyadicGrid) -> Self {
        let cells = (0..grid.cell_count()).collect();
        Self { grid, cells }
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn m(&self) -> u32 {
        self.grid.m
    }

    pub fn delta(&self) -> f64 {
        self.grid.delta()
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Global coordinates in row-major (lexicographic) order.
    pub fn coords(&self) -> Vec<Coord> {
        self.cells.iter().map(|&i| self.grid.coord_of(i)).collect()
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        self.coords().iter().map(|c| self.grid.center(c)).collect()
    }

    pub fn contains_coord(&self, c: &Coord) -> bool {
        self.grid
            .index_of(c)
            .map(|i| self.cells.binary_search(&i).is_ok())
            .unwrap_or(false)
    }

    /// Cell containing the point `x`, if occupied.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        let mut c = [0i64; MAX_DIM];
        for i in 0..self.n() {
            c[i] = bin(x[i], self.m());
        }
        self.contains_coord(&c)
    }

    /// Volume of the union of cells.
    pub fn volume(&self) -> f64 {
        self.len() as f64 * self.delta().powi(self.n() as i32)
    }

    /// `S ⊆ T` on global coordinates (same scale required).
    pub fn is_subset_of(&self, other: &GridSet) -> bool {
        self.m() == other.m()
            && self.n() == other.n()
            && self.coords().iter().all(|c| other.contains_coord(c))
    }

    /// Union on global coordinates.
    pub fn union(&self, other: &GridSet) -> Result<GridSet> {
        same_scale(self, other)?;
        let mut all = self.coords();
        all.extend(other.coords());
        GridSet::from_coords(self.n(), self.m(), all)
    }

    /// Coordinate-wise negation `-S`.
    pub fn negate(&self) -> Result<GridSet> {
        let coords = self
            .coords()
            .into_iter()
            .map(|mut c| {
                for x in c.iter_mut().take(self.n()) {
                    *x = -*x;
                }
                c
            })
            .collect();
        GridSet::from_coords(self.n(), self.m(), coords)
    }

    /// True when every cell center of the closed ball `B(center, r)` is occupied.
    pub fn covers_ball(&self, center: &[f64], r: f64) -> bool {
        let n = self.n();
        let inv = scale_inv(self.m());
        let d = self.delta();
        let lo: Vec<i64> = (0..n).map(|i| ((center[i] - r) * inv).ceil() as i64).collect();
        let hi: Vec<i64> = (0..n).map(|i| ((center[i] + r) * inv).floor() as i64).collect();
        let mut ok = true;
        for_each_in_box(&lo, &hi, |c| {
            if !ok {
                return;
            }
            let dist2: f64 = (0..n).map(|i| (c[i] as f64 * d - center[i]).powi(2)).sum();
            if dist2 <= r * r * (1.0 + 1e-12) && !self.contains_coord(c) {
                ok = false;
            }
        });
        ok
    }
}

pub(crate) fn same_scale(a: &GridSet, b: &GridSet) -> Result<()> {
    if a.n() != b.n() || a.m() != b.m() {
        return Err(LabError::domain("sets live on grids of different dimension or scale"));
    }
    Ok(())
}

/// Visit every integer vector in the box `lo..=hi` (lexicographic order).
pub(crate) fn for_each_in_box(lo: &[i64], hi: &[i64], mut f: impl FnMut(&Coord)) {
    let n = lo.len();
    if (0..n).any(|i| hi[i] < lo[i]) {
        return;
    }
    let mut c = [0i64; MAX_DIM];
    c[..n].copy_from_slice(lo);
    loop {
        f(&c);
        let mut axis = n;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if c[axis] < hi[axis] {
                c[axis] += 1;
                for j in axis + 1..n {
                    c[j] = lo[j];
                }
                break;
            }
        }
    }
}

/// Integer offsets `o` with `|o| δ <= radius` (radius given in cell units).
pub(crate) fn ball_offsets(n: usize, radius_cells: f64) -> Vec<Coord> {
    let r = radius_cells.floor() as i64;
    let lo = vec![-r; n];
    let hi = vec![r; n];
    let lim = radius_cells * radius_cells * (1.0 + 1e-12);
    let mut out = Vec::new();
    for_each_in_box(&lo, &hi, |c| {
        let d2: f64 = c[..n].iter().map(|&x| (x * x) as f64).sum();
        if d2 <= lim {
            out.push(*c);
        }
    });
    out
}

/// All cells whose center lies within `r + δ√n/2` of a cell center of `S`.
pub fn neighborhood(s: &GridSet, r: f64) -> Result<GridSet> {
    let d = s.delta();
    if r < d * (1.0 - 1e-12) {
        return Err(LabError::domain(format!("neighborhood radius {r} below grid scale {d}")));
    }
    let n = s.n();
    if s.is_empty() {
        return GridSet::empty(n, s.m());
    }
    let offsets = ball_offsets(n, r / d + (n as f64).sqrt() / 2.0);
    let base = s.coords();
    check_budget(base.len() as u128 * offsets.len() as u128 / 4)?;
    let mut out = Vec::with_capacity(base.len() * offsets.len().min(64));
    for c in &base {
        for o in &offsets {
            let mut x = *c;
            for i in 0..n {
                x[i] += o[i];
            }
            out.push(x);
        }
    }
    GridSet::from_coords(n, s.m(), out)
}

/// Number of occupied boxes of the ρ-aligned coarsening.
///
/// Cell `k` (center `kδ`) falls in the coarse box `floor(kδ / ρ)`.
pub fn covering_number(s: &GridSet, rho: f64) -> Result<u64> {
    let d = s.delta();
    if !(rho >= d * (1.0 - 1e-12)) {
        return Err(LabError::domain(format!("covering scale {rho} below grid scale {d}")));
    }
    let n = s.n();
    let mut boxes: Vec<Coord> = s
        .coords()
        .iter()
        .map(|c| {
            let mut b = [0i64; MAX_DIM];
            for i in 0..n {
                b[i] = coarse(c[i], d, rho);
            }
            b
        })
        .collect();
    boxes.sort_unstable();
    boxes.dedup();
    Ok(boxes.len() as u64)
}

#[inline]
fn coarse(k: i64, delta: f64, rho: f64) -> i64 {
    let q = k as f64 * delta / rho;
    // Exact multiples must not fall one box low through roundoff.
    (q + 1e-9).floor() as i64
}

/// Greedy maximal ρ-separated subset of cell coordinates (lexicographic scan).
pub fn separated_cells(s: &GridSet, rho: f64) -> Result<Vec<Coord>> {
    let d = s.delta();
    if !(rho >= d * (1.0 - 1e-12)) {
        return Err(LabError::domain(format!("separation {rho} below grid scale {d}")));
    }
    let n = s.n();
    let lim = rho * rho * (1.0 - 1e-12);
    let mut buckets: HashMap<Coord, Vec<Coord>> = HashMap::new();
    let mut kept = Vec::new();
    let bucket_of = |c: &Coord| {
        let mut b = [0i64; MAX_DIM];
        for i in 0..n {
            b[i] = (c[i] as f64 * d / rho).floor() as i64;
        }
        b
    };
    let lo = vec![-1i64; n];
    let hi = vec![1i64; n];
    for c in s.coords() {
        let b = bucket_of(&c);
        let mut free = true;
        for_each_in_box(&lo, &hi, |o| {
            if !free {
                return;
            }
            let mut nb = b;
            for i in 0..n {
                nb[i] += o[i];
            }
            if let Some(list) = buckets.get(&nb) {
                for q in list {
                    let dist2: f64 = (0..n).map(|i| ((c[i] - q[i]) as f64 * d).powi(2)).sum();
                    if dist2 < lim {
                        free = false;
                        return;
                    }
                }
            }
        });
        if free {
            buckets.entry(b).or_default().push(c);
            kept.push(c);
        }
    }
    Ok(kept)
}

/// Maximal ρ-separated subset of `S`, as cell centers.
pub fn separated_subset(s: &GridSet, rho: f64) -> Result<Vec<Vec<f64>>> {
    Ok(separated_cells(s, rho)?.iter().map(|c| s.grid().center(c)).collect())
}

/// A map `R^a -> R^b` with a declared Lipschitz bound.
#[derive(Clone)]
pub struct LipschitzMapSpec {
    map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    lip: f64,
    in_dim: usize,
    out_dim: usize,
}

impl std::fmt::Debug for LipschitzMapSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LipschitzMapSpec")
            .field("lip", &self.lip)
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .finish()
    }
}

impl LipschitzMapSpec {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        lip: f64,
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lip > 0.0) || !lip.is_finite() {
            return Err(LabError::domain("Lipschitz bound must be positive and finite"));
        }
        Ok(Self { map: Arc::new(map), lip, in_dim, out_dim })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, n, 1.0, |x| x.to_vec()).unwrap()
    }

    /// `x -> M x + b` with `K` the Frobenius norm of `M` (an upper bound of the operator norm).
    pub fn affine(matrix: Vec<Vec<f64>>, shift: Vec<f64>) -> Result<Self> {
        let n_out = matrix.len();
        let n_in = matrix.first().map(|r| r.len()).unwrap_or(0);
        let frob = matrix.iter().flatten().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        Self::new(n_in, n_out, frob, move |x| {
            (0..n_out)
                .map(|r| matrix[r].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + shift[r])
                .collect()
        })
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.map)(x)
    }

    /// Largest observed `|f(x)-f(y)| / |x-y|` over sampled center pairs of `S`.
    /// Fails if it exceeds the declared bound.
    pub fn spot_check(&self, s: &GridSet, pairs: usize, seed: u64) -> Result<f64> {
        let centers = s.centers();
        if centers.len() < 2 {
            return Ok(0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..pairs {
            let a = &centers[rng.gen_range(0..centers.len())];
            let b = &centers[rng.gen_range(0..centers.len())];
            let dx = dist(a, b);
            if dx == 0.0 {
                continue;
            }
            let dy = dist(&self.eval(a), &self.eval(b));
            worst = worst.max(dy / dx);
        }
        if worst > self.lip * (1.0 + 1e-9) {
            return Err(LabError::domain(format!(
                "declared Lipschitz bound {} violated: observed ratio {worst}",
                self.lip
            )));
        }
        Ok(worst)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Image `f(S)` at the same scale.
///
/// Each cell is sampled on a `⌈K⌉^n` sub-grid (capped at 16 per axis) so a
/// `K`-Lipschitz map cannot leave gaps between the images of adjacent cells.
pub fn map_image(s: &GridSet, f: &LipschitzMapSpec) -> Result<GridSet> {
    let n = s.n();
    if f.in_dim() != n {
        return Err(LabError::domain("map input dimension does not match the set"));
    }
    let out_n = f.out_dim();
    if out_n == 0 || out_n > MAX_DIM {
        return Err(LabError::domain("map output dimension outside 1..=4"));
    }
    if s.is_empty() {
        return GridSet::empty(out_n, s.m());
    }
    let sub = (f.lip().ceil() as i64).clamp(1, 16);
    check_budget(s.len() as u128 * (sub as u128).pow(n as u32))?;
    let d = s.delta();
    let h = d / sub as f64;
    let lo = vec![0i64; n];
    let hi = vec![sub - 1; n];
    let mut coords = Vec::with_capacity(s.len() * (sub as usize).pow(n as u32));
    let mut x = vec![0.0; n];
    for c in s.coords() {
        for_each_in_box(&lo, &hi, |o| {
            for i in 0..n {
                x[i] = c[i] as f64 * d - d / 2.0 + (o[i] as f64 + 0.5) * h;
            }
            let y = f.eval(&x);
            let mut k = [0i64; MAX_DIM];
            for i in 0..out_n {
                k[i] = bin(y[i], s.m());
            }
            coords.push(k);
        });
    }
    GridSet::from_coords(out_n, s.m(), coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(m: u32, lo: f64, hi: f64) -> GridSet {
        GridSet::closed_box(1, m, &[lo], &[hi]).unwrap()
    }

    #[test]
    fn row_major_round_trip() {
        let g = DyadicGrid::new(3, 4, &[-2, 0, 5], &[3, 4, 2]).unwrap();
        for idx in 0..g.cell_count() {
            assert_eq!(g.index_of(&g.coord_of(idx)), Some(idx));
        }
        assert_eq!(g.index_of(&[-3, 0, 5, 0]), None);
    }

    #[test]
    fn budget_is_a_hard_error() {
        let err = DyadicGrid::new(2, 20, &[0, 0], &[1 << 20, 1 << 20]).unwrap_err();
        assert!(matches!(err, LabError::Budget { required, .. } if required == 1u128 << 40));
    }

    #[test]
    fn neighborhood_examples() {
        let empty = GridSet::empty(1, 5).unwrap();
        assert!(neighborhood(&empty, 1.0 / 32.0).unwrap().is_empty());

        let zero = GridSet::from_points(1, 5, &[[0.0]]).unwrap();
        let nb = neighborhood(&zero, 1.0 / 32.0).unwrap();
        assert_eq!(nb.coords().iter().map(|c| c[0]).collect::<Vec<_>>(), vec![-1, 0, 1]);

        for n in 1..=3 {
            let full = GridSet::closed_box(n, 3, &vec![0.0; n], &vec![0.5; n]).unwrap();
            let nb = neighborhood(&full, 1.0 / 8.0).unwrap();
            assert_eq!(nb.len() as u64, nb.grid().cell_count());
            assert_eq!(nb.grid().dims()[0], full.grid().dims()[0] + 2);
        }
        assert!(neighborhood(&zero, 1.0 / 64.0).is_err());
    }

    #[test]
    fn covering_number_examples() {
        assert_eq!(covering_number(&GridSet::empty(1, 3).unwrap(), 0.125).unwrap(), 0);
        let unit = GridSet::half_open_box(1, 3, &[0.0], &[1.0]).unwrap();
        assert_eq!(covering_number(&unit, 0.125).unwrap(), 8);
        let two = GridSet::from_points(1, 3, &[[0.0], [0.5]]).unwrap();
        assert_eq!(covering_number(&two, 0.125).unwrap(), 2);
        assert!(covering_number(&two, 0.01).is_err());
    }

    #[test]
    fn separated_subset_examples() {
        let single = GridSet::from_points(2, 4, &[[0.25, 0.5]]).unwrap();
        assert_eq!(separated_subset(&single, 0.1).unwrap(), vec![vec![0.25, 0.5]]);

        let dense = interval(8, 0.0, 1.0);
        let pts = separated_subset(&dense, 0.25).unwrap();
        assert_eq!(pts, vec![vec![0.0], vec![0.25], vec![0.5], vec![0.75], vec![1.0]]);
    }

    #[test]
    fn map_image_examples() {
        let s = interval(8, 0.0, 1.0);
        let id = map_image(&s, &LipschitzMapSpec::identity(1)).unwrap();
        assert_eq!(id, s);

        let double = LipschitzMapSpec::new(1, 1, 2.0, |x| vec![2.0 * x[0]]).unwrap();
        let img = map_image(&s, &double).unwrap();
        let before = covering_number(&s, s.delta()).unwrap() as i64;
        let after = covering_number(&img, s.delta()).unwrap() as i64;
        assert!((after - 2 * before).abs() <= 1, "{before} -> {after}");

        let constant = LipschitzMapSpec::new(1, 1, 1e-9, |_| vec![0.3]).unwrap();
        assert_eq!(map_image(&s, &constant).unwrap().len(), 1);
    }

    #[test]
    fn spot_check_detects_false_bound() {
        let s = interval(6, 0.0, 1.0);
        let lying = LipschitzMapSpec::new(1, 1, 1.0, |x| vec![3.0 * x[0]]).unwrap();
        assert!(lying.spot_check(&s, 200, 1).is_err());
        let honest = LipschitzMapSpec::new(1, 1, 3.0, |x| vec![3.0 * x[0]]).unwrap();
        let r = honest.spot_check(&s, 200, 1).unwrap();
        assert!((r - 3.0).abs() < 1e-9);
    }

    #[test]
    fn covers_ball_and_bounds() {
        let s = interval(6, -0.5, 0.5);
        assert!(s.covers_ball(&[0.0], 0.5));
        assert!(!s.covers_ball(&[0.0], 0.6));
        let g = s.grid();
        let back = DyadicGrid::from_bounds(1, 6, &g.box_lo(), &g.box_hi()).unwrap();
        assert_eq!(&back, g);
    }
}
