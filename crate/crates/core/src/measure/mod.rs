//! Measures on dyadic grids.
//!
//! Storage is the mass of each cell, treated as an atom at the cell center
//! wherever a point location is needed. The density view is `weight / δⁿ`
//! and every L² norm is taken on it.

mod dyadic;
mod flatten;
mod nonconc;

pub use dyadic::{ball_volume, dyadic_decompose, sandwich_constants, DyadicLevel, DyadicLevels, SandwichConstants};
pub use flatten::{flattening_integral, flattening_integral_with, FlatteningOptions, FlatteningReport};
pub(crate) use nonconc::nonconcentration_over;
pub use nonconc::{
    direction_net, projected_sup, projective_nonconcentration, subalgebra_distance, NonConReport, NonConWitness,
    SubalgebraReport,
};

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fftnd::{convolve, DenseField};
use crate::grid::{check_budget, for_each_in_box, scale_inv, Coord, DyadicGrid, GridSet, MAX_DIM};
use crate::lattice::Sign;

/// Slack allowed on the total mass of a probability-type measure.
pub const MASS_TOL: f64 = 1e-9;

/// FFT outputs below this fraction of the largest weight are treated as roundoff.
const FFT_FLOOR: f64 = 1e-13;

/// Pairwise work above which convolutions switch to FFT.
const PAIRWISE_WORK: u128 = 2_000_000;

/// Cell pairs above which the default multiplicative convolution goes to log coordinates.
const PAIRWISE_MULT: u128 = 400_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    grid: DyadicGrid,
    cells: Vec<u64>,
    weights: Vec<f64>,
    mass: f64,
}

impl GridMeasure {
    /// Build from `(cell, mass)` pairs; repeated cells are summed in input order.
    pub fn from_entries(n: usize, m: u32, mut entries: Vec<(Coord, f64)>) -> Result<Self> {
        if let Some((_, w)) = entries.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(LabError::domain(format!("invalid cell weight {w}")));
        }
        for (c, _) in entries.iter_mut() {
            for x in c.iter_mut().skip(n) {
                *x = 0;
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Coord, f64)> = Vec::with_capacity(entries.len());
        for (c, w) in entries {
            match merged.last_mut() {
                Some((lc, lw)) if *lc == c => *lw += w,
                _ => merged.push((c, w)),
            }
        }
        merged.retain(|(_, w)| *w > 0.0);
        let coords: Vec<Coord> = merged.iter().map(|(c, _)| *c).collect();
        let grid = DyadicGrid::bounding(n, m, &coords)?;
        let cells: Vec<u64> = coords.iter().map(|c| grid.index_of(c).unwrap()).collect();
        let weights: Vec<f64> = merged.iter().map(|(_, w)| *w).collect();
        let mass = weights.iter().sum();
        if mass > 1.0 + MASS_TOL {
            return Err(LabError::domain(format!("total mass {mass} exceeds 1")));
        }
        Ok(Self { grid, cells, weights, mass })
    }

    pub fn point_mass(n: usize, m: u32, x: &[f64]) -> Result<Self> {
        let s = GridSet::from_points(n, m, &[x])?;
        Self::from_entries(n, m, vec![(s.coords()[0], 1.0)])
    }

    /// Normalized counting measure on the cells of `s`.
    pub fn uniform_on(s: &GridSet) -> Result<Self> {
        if s.is_empty() {
            return Err(LabError::domain("uniform measure on an empty set"));
        }
        let w = 1.0 / s.len() as f64;
        Self::from_entries(s.n(), s.m(), s.coords().into_iter().map(|c| (c, w)).collect())
    }

    pub(crate) fn from_field(m: u32, f: &DenseField) -> Result<Self> {
        let max = f.data.iter().fold(0.0f64, |a, &b| a.max(b));
        let floor = max * FFT_FLOOR;
        Self::from_entries(f.n, m, f.entries(floor).into_iter().filter(|(_, w)| *w > 0.0).collect())
    }

    /// Rebuild from stored parts; cells must be strictly increasing.
    pub(crate) fn from_parts(grid: DyadicGrid, cells: Vec<u64>, weights: Vec<f64>) -> Result<Self> {
        if cells.len() != weights.len() {
            return Err(LabError::Format("cell and weight counts differ".into()));
        }
        if cells.windows(2).any(|w| w[0] >= w[1]) || cells.last().is_some_and(|&c| c >= grid.cell_count()) {
            return Err(LabError::Format("cell indices not strictly increasing inside the grid".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(LabError::Format("non-positive or non-finite weight".into()));
        }
        let mass: f64 = weights.iter().sum();
        if mass > 1.0 + MASS_TOL {
            return Err(LabError::domain(format!("total mass {mass} exceeds 1")));
        }
        Ok(Self { grid, cells, weights, mass })
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn m(&self) -> u32 {
        self.grid.m()
    }

    pub fn delta(&self) -> f64 {
        self.grid.delta()
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn coords(&self) -> Vec<Coord> {
        self.cells.iter().map(|&i| self.grid.coord_of(i)).collect()
    }

    pub fn entries(&self) -> Vec<(Coord, f64)> {
        self.coords().into_iter().zip(self.weights.iter().copied()).collect()
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        self.coords().iter().map(|c| self.grid.center(c)).collect()
    }

    pub fn weight_at(&self, c: &Coord) -> f64 {
        match self.grid.index_of(c) {
            Some(i) => self.cells.binary_search(&i).map(|j| self.weights[j]).unwrap_or(0.0),
            None => 0.0,
        }
    }

    pub fn support(&self) -> GridSet {
        GridSet::new(self.grid.clone(), self.cells.clone()).expect("cells lie in the grid")
    }

    /// `‖density‖₂² = Σ w² / δⁿ`.
    pub fn l2_sq(&self) -> f64 {
        let vol = self.delta().powi(self.n() as i32);
        self.weights.iter().map(|w| w * w).sum::<f64>() / vol
    }

    pub fn max_density(&self) -> f64 {
        let vol = self.delta().powi(self.n() as i32);
        self.weights.iter().fold(0.0f64, |a, &b| a.max(b)) / vol
    }

    /// Largest `|x_i|` over support centers, per axis.
    pub fn abs_extent(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0f64; n];
        for c in self.coords() {
            for i in 0..n {
                out[i] = out[i].max((c[i] as f64 * self.delta()).abs());
            }
        }
        out
    }

    /// Euclidean diameter of the bounding box of the support.
    pub fn diameter(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let lo = self.grid.box_lo();
        let hi = self.grid.box_hi();
        lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt()
    }

    pub(crate) fn weight_field(&self) -> Result<DenseField> {
        let n = self.n();
        let mut lo = [0i64; MAX_DIM];
        lo[..n].copy_from_slice(self.grid.lo());
        let shape: Vec<usize> = self.grid.dims().iter().map(|&d| d as usize).collect();
        let mut f = DenseField::zeros(n, lo, &shape)?;
        for (&c, &w) in self.cells.iter().zip(&self.weights) {
            f.data[c as usize] = w;
        }
        Ok(f)
    }

    /// `μ⁻(E) = μ(-E)`.
    pub fn reflect(&self) -> Self {
        let n = self.n();
        let entries = self
            .entries()
            .into_iter()
            .map(|(mut c, w)| {
                for x in c.iter_mut().take(n) {
                    *x = -*x;
                }
                (c, w)
            })
            .collect();
        Self::from_entries(n, self.m(), entries).expect("reflection keeps mass")
    }

    /// `a μ + b ν` (same scale).
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        same_scale(self, other)?;
        let mut e: Vec<(Coord, f64)> = self.entries().into_iter().map(|(c, w)| (c, a * w)).collect();
        e.extend(other.entries().into_iter().map(|(c, w)| (c, b * w)));
        Self::from_entries(self.n(), self.m(), e)
    }

    /// `½(μ + μ⁻)`.
    pub fn symmetric_part(&self) -> Self {
        self.combine(0.5, &self.reflect(), 0.5).expect("same scale")
    }

    pub fn normalized(&self) -> Result<Self> {
        if self.mass <= 0.0 {
            return Err(LabError::domain("cannot normalize the zero measure"));
        }
        let s = 1.0 / self.mass;
        Self::from_entries(self.n(), self.m(), self.entries().into_iter().map(|(c, w)| (c, w * s)).collect())
    }

    /// Restriction to the cells whose centers satisfy `keep`.
    pub fn restrict(&self, keep: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let e = self
            .entries()
            .into_iter()
            .filter(|(c, _)| keep(&self.grid.center(c)))
            .collect();
        Self::from_entries(self.n(), self.m(), e)
    }

    /// Re-express at a coarser scale `2^-m2` by re-binning each center.
    pub fn coarsen(&self, m2: u32) -> Result<Self> {
        if m2 > self.m() {
            return Err(LabError::domain("coarsen target is finer than the grid"));
        }
        let n = self.n();
        let shift = self.m() - m2;
        let e = self
            .entries()
            .into_iter()
            .map(|(c, w)| {
                let mut k = [0i64; MAX_DIM];
                for i in 0..n {
                    k[i] = round_shift(c[i] as i128, shift);
                }
                (k, w)
            })
            .collect();
        Self::from_entries(n, m2, e)
    }

    /// Re-express at a finer scale `2^-m2`; each atom keeps its exact location.
    pub fn refine(&self, m2: u32) -> Result<Self> {
        if m2 < self.m() {
            return Err(LabError::domain("refine target is coarser than the grid"));
        }
        let n = self.n();
        let f = 1i64 << (m2 - self.m());
        let e = self
            .entries()
            .into_iter()
            .map(|(mut c, w)| {
                for x in c.iter_mut().take(n) {
                    *x *= f;
                }
                (c, w)
            })
            .collect();
        Self::from_entries(n, m2, e)
    }
}

pub(crate) fn same_scale(a: &GridMeasure, b: &GridMeasure) -> Result<()> {
    if a.n() != b.n() || a.m() != b.m() {
        return Err(LabError::domain("measures live on grids of different dimension or scale"));
    }
    Ok(())
}

/// `round(p / 2^shift)` with ties away from zero, matching `f64::round`.
pub(crate) fn round_shift(p: i128, shift: u32) -> i64 {
    if shift == 0 {
        return p as i64;
    }
    let half = 1i128 << (shift - 1);
    if p >= 0 {
        ((p + half) >> shift) as i64
    } else {
        -(((-p + half) >> shift) as i64)
    }
}

/// `½ Σ |μ(c) - ν(c)|` over cells.
pub fn total_variation(a: &GridMeasure, b: &GridMeasure) -> Result<f64> {
    same_scale(a, b)?;
    let mut diff: HashMap<Coord, f64> = HashMap::new();
    for (c, w) in a.entries() {
        *diff.entry(c).or_default() += w;
    }
    for (c, w) in b.entries() {
        *diff.entry(c).or_default() -= w;
    }
    let mut vals: Vec<(Coord, f64)> = diff.into_iter().collect();
    vals.sort_by(|x, y| x.0.cmp(&y.0));
    Ok(0.5 * vals.iter().map(|(_, v)| v.abs()).sum::<f64>())
}

/// Cell-mass kernel of `P_{δ₁}` (uniform probability on the ball of radius
/// `δ₁`), centered at the origin cell: the fraction of each cell inside the
/// ball, exact in one dimension and subsampled on an 8ⁿ grid for boundary
/// cells in higher dimensions, normalized to total mass one.
pub fn ball_kernel(n: usize, m: u32, delta1: f64) -> Result<Vec<(Coord, f64)>> {
    let d = 1.0 / scale_inv(m);
    if delta1 < d * (1.0 - 1e-12) {
        return Err(LabError::domain(format!("smoothing scale {delta1} below grid scale {d}")));
    }
    let r = delta1 / d; // radius in cell units
    let reach = (r + 0.5).ceil() as i64;
    check_budget((2 * reach as u128 + 1).pow(n as u32))?;
    let lo = vec![-reach; n];
    let hi = vec![reach; n];
    let mut out = Vec::new();
    const SUB: i64 = 8;
    for_each_in_box(&lo, &hi, |c| {
        let frac = if n == 1 {
            let a = (c[0] as f64 - 0.5).max(-r);
            let b = (c[0] as f64 + 0.5).min(r);
            (b - a).max(0.0)
        } else {
            let mut near = 0.0;
            let mut far = 0.0;
            for i in 0..n {
                let x = c[i].abs() as f64;
                near += (x - 0.5).max(0.0).powi(2);
                far += (x + 0.5).powi(2);
            }
            if far <= r * r {
                1.0
            } else if near > r * r {
                0.0
            } else {
                let sl = vec![0i64; n];
                let sh = vec![SUB - 1; n];
                let mut inside = 0u64;
                for_each_in_box(&sl, &sh, |s| {
                    let d2: f64 =
                        (0..n).map(|i| (c[i] as f64 - 0.5 + (s[i] as f64 + 0.5) / SUB as f64).powi(2)).sum();
                    if d2 <= r * r {
                        inside += 1;
                    }
                });
                inside as f64 / (SUB as f64).powi(n as i32)
            }
        };
        if frac > 0.0 {
            out.push((*c, frac));
        }
    });
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in out.iter_mut() {
        *w /= total;
    }
    Ok(out)
}

/// `ν_{δ₁} = ν * P_{δ₁}` as cell masses on the same grid.
pub fn smooth(nu: &GridMeasure, delta1: f64) -> Result<GridMeasure> {
    let k = ball_kernel(nu.n(), nu.m(), delta1)?;
    let kernel = DenseField::from_entries(nu.n(), &k)?;
    let out = convolve_fields(&nu.weight_field()?, &kernel, nu.len() as u128 * k.len() as u128)?;
    GridMeasure::from_field(nu.m(), &out)
}

fn convolve_fields(a: &DenseField, b: &DenseField, work: u128) -> Result<DenseField> {
    if work <= PAIRWISE_WORK {
        crate::fftnd::convolve_direct(a, b)
    } else {
        convolve(a, b)
    }
}

/// `μ * ν` or `μ * ν⁻`.
pub fn additive_convolve(mu: &GridMeasure, nu: &GridMeasure, sign: Sign) -> Result<GridMeasure> {
    same_scale(mu, nu)?;
    let nu = match sign {
        Sign::Plus => nu.clone(),
        Sign::Minus => nu.reflect(),
    };
    let out = convolve_fields(&mu.weight_field()?, &nu.weight_field()?, mu.len() as u128 * nu.len() as u128)?;
    GridMeasure::from_field(mu.m(), &out)
}

/// `(μ * μ⁻)^{(r)}`, whose transform is `|μ̂|^{2r}`.
pub fn symmetrize(mu: &GridMeasure, r: usize) -> Result<GridMeasure> {
    if r == 0 || r > 4 {
        return Err(LabError::domain(format!("symmetrize order {r} outside 1..=4")));
    }
    let base = additive_convolve(mu, mu, Sign::Minus)?;
    let mut acc = base.clone();
    for _ in 1..r {
        acc = additive_convolve(&acc, &base, Sign::Plus)?;
    }
    Ok(acc)
}

/// Multiplicative convolution algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MultMode {
    /// Every pair of cells, product of centers rebinned (integer arithmetic).
    Pairwise,
    /// Log-coordinate FFT with step `δ / (oversample · P)`, `P` the largest product
    /// magnitude. With `oversample > 2/δ` products are recovered exactly on the
    /// `δ²` lattice of center products and the result equals [`MultMode::Pairwise`].
    LogFft { oversample: u64 },
}

/// `μ ⊙ ν`: pushforward of `μ ⊗ ν` under coordinate-wise multiplication.
pub fn multiplicative_convolve(mu: &GridMeasure, nu: &GridMeasure) -> Result<GridMeasure> {
    let fast_ok = axis_signs(mu).is_ok() && axis_signs(nu).is_ok();
    let mode = if mu.len() as u128 * nu.len() as u128 <= PAIRWISE_MULT || !fast_ok {
        MultMode::Pairwise
    } else {
        MultMode::LogFft { oversample: 64 }
    };
    multiplicative_convolve_with(mu, nu, mode)
}

pub fn multiplicative_convolve_with(mu: &GridMeasure, nu: &GridMeasure, mode: MultMode) -> Result<GridMeasure> {
    same_scale(mu, nu)?;
    match mode {
        MultMode::Pairwise => mult_pairwise(mu, nu),
        MultMode::LogFft { oversample } => mult_log(mu, nu, oversample),
    }
}

fn mult_pairwise(mu: &GridMeasure, nu: &GridMeasure) -> Result<GridMeasure> {
    let n = mu.n();
    let m = mu.m();
    let a = mu.entries();
    let b = nu.entries();
    if a.is_empty() || b.is_empty() {
        return GridMeasure::from_entries(n, m, Vec::new());
    }
    let prod = |ca: &Coord, cb: &Coord| {
        let mut k = [0i64; MAX_DIM];
        for i in 0..n {
            k[i] = round_shift(ca[i] as i128 * cb[i] as i128, m);
        }
        k
    };
    // bounding box of the products, from the per-axis extremes
    let (alo, ahi) = extremes(&a, n);
    let (blo, bhi) = extremes(&b, n);
    let mut lo = [0i64; MAX_DIM];
    let mut shape = vec![0usize; n];
    let mut cells: u128 = 1;
    for i in 0..n {
        let cand = [alo[i] as i128 * blo[i] as i128, alo[i] as i128 * bhi[i] as i128, ahi[i] as i128 * blo[i] as i128, ahi[i] as i128 * bhi[i] as i128];
        let l = round_shift(*cand.iter().min().unwrap(), m);
        let h = round_shift(*cand.iter().max().unwrap(), m);
        lo[i] = l;
        shape[i] = (h - l + 1) as usize;
        cells *= shape[i] as u128;
    }
    let pairs = a.len() as u128 * b.len() as u128;
    if cells <= (4 * pairs).max(1 << 20) && check_budget(cells).is_ok() {
        let mut f = DenseField::zeros(n, lo, &shape)?;
        for (ca, wa) in &a {
            for (cb, wb) in &b {
                let idx = f.index(&prod(ca, cb)).expect("product inside its bounding box");
                f.data[idx] += wa * wb;
            }
        }
        return GridMeasure::from_entries(n, m, f.entries(0.0));
    }
    let mut acc: HashMap<Coord, f64> = HashMap::with_capacity(a.len().max(b.len()) * 4);
    for (ca, wa) in &a {
        for (cb, wb) in &b {
            *acc.entry(prod(ca, cb)).or_default() += wa * wb;
        }
    }
    GridMeasure::from_entries(n, m, acc.into_iter().collect())
}

fn extremes(e: &[(Coord, f64)], n: usize) -> (Coord, Coord) {
    let mut lo = [i64::MAX; MAX_DIM];
    let mut hi = [i64::MIN; MAX_DIM];
    for (c, _) in e {
        for i in 0..n {
            lo[i] = lo[i].min(c[i]);
            hi[i] = hi[i].max(c[i]);
        }
    }
    (lo, hi)
}

/// Per-axis sign of a support that avoids zero, or a mode error.
fn axis_signs(mu: &GridMeasure) -> Result<Vec<f64>> {
    let n = mu.n();
    let coords = mu.coords();
    let mut signs = vec![0.0; n];
    for i in 0..n {
        let pos = coords.iter().all(|c| c[i] > 0);
        let neg = coords.iter().all(|c| c[i] < 0);
        signs[i] = if pos {
            1.0
        } else if neg {
            -1.0
        } else {
            return Err(LabError::Mode(format!(
                "support meets or straddles zero on axis {i}; use MultMode::Pairwise"
            )));
        };
    }
    Ok(signs)
}

fn mult_log(mu: &GridMeasure, nu: &GridMeasure, oversample: u64) -> Result<GridMeasure> {
    let n = mu.n();
    let m = mu.m();
    if oversample == 0 {
        return Err(LabError::domain("oversample must be positive"));
    }
    let sa = axis_signs(mu)?;
    let sb = axis_signs(nu)?;
    let d = mu.delta();
    let ea = mu.abs_extent();
    let eb = nu.abs_extent();
    let p_max = (0..n).map(|i| ea[i] * eb[i]).fold(0.0f64, f64::max);
    let h = d / (oversample as f64 * p_max.max(f64::MIN_POSITIVE));
    // exact recovery needs the log rounding error P·h·(1+h) below half the δ² spacing
    let snap = p_max * h * (1.0 + 2.0 * h) < 0.5 * d * d * (1.0 - 1e-9);
    let to_log = |g: &GridMeasure| -> Result<DenseField> {
        let e: Vec<(Coord, f64)> = g
            .entries()
            .into_iter()
            .map(|(c, w)| {
                let mut j = [0i64; MAX_DIM];
                for i in 0..n {
                    j[i] = ((c[i] as f64 * d).abs().ln() / h).round() as i64;
                }
                (j, w)
            })
            .collect();
        let mut lo = [i64::MAX; MAX_DIM];
        let mut hi = [i64::MIN; MAX_DIM];
        for (c, _) in &e {
            for i in 0..n {
                lo[i] = lo[i].min(c[i]);
                hi[i] = hi[i].max(c[i]);
            }
        }
        check_budget((0..n).map(|i| (hi[i] - lo[i] + 1) as u128).product())?;
        DenseField::from_entries(n, &e)
    };
    let fa = to_log(mu)?;
    let fb = to_log(nu)?;
    let conv = convolve(&fa, &fb)?;
    let max = conv.data.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut acc: HashMap<Coord, f64> = HashMap::new();
    let d2inv = scale_inv(2 * m);
    for (j, w) in conv.entries(max * FFT_FLOOR) {
        if w <= 0.0 {
            continue;
        }
        let mut k = [0i64; MAX_DIM];
        for i in 0..n {
            let x = (j[i] as f64 * h).exp();
            let s = sa[i] * sb[i];
            k[i] = if snap {
                let q = (x * d2inv).round() as i128;
                round_shift(if s > 0.0 { q } else { -q }, m)
            } else {
                (s * x / d).round() as i64
            };
        }
        *acc.entry(k).or_default() += w;
    }
    GridMeasure::from_entries(n, m, acc.into_iter().collect())
}

/// `(m_y)_* ν`: each cell, viewed as a uniform box, is mapped to the box `y·cell`
/// and its mass spread over the output cells in proportion to overlap.
/// Mass is preserved exactly up to rounding.
pub fn pushforward_mult(y: &[f64], nu: &GridMeasure) -> Result<GridMeasure> {
    let n = nu.n();
    if y.len() < n || y[..n].iter().any(|&v| v == 0.0 || !v.is_finite()) {
        return Err(LabError::domain("pushforward needs a finite y with nonzero coordinates"));
    }
    pushforward_spread(y, nu)
}

/// Same as [`pushforward_mult`] but a zero coordinate collapses that axis to the origin cell.
pub(crate) fn pushforward_spread(y: &[f64], nu: &GridMeasure) -> Result<GridMeasure> {
    let n = nu.n();
    let m = nu.m();
    let mut acc: HashMap<Coord, f64> = HashMap::new();
    let mut axes: Vec<Vec<(i64, f64)>> = vec![Vec::new(); n];
    for (c, w) in nu.entries() {
        for i in 0..n {
            axes[i].clear();
            if y[i] == 0.0 {
                axes[i].push((0, 1.0));
                continue;
            }
            // image of [c-1/2, c+1/2] in cell units
            let (a, b) = {
                let p = y[i] * (c[i] as f64 - 0.5);
                let q = y[i] * (c[i] as f64 + 0.5);
                (p.min(q), p.max(q))
            };
            let len = b - a;
            let k0 = (a + 0.5).floor() as i64;
            let k1 = (b + 0.5).ceil() as i64 - 1;
            for k in k0..=k1 {
                let lo = (k as f64 - 0.5).max(a);
                let hi = (k as f64 + 0.5).min(b);
                if hi > lo {
                    axes[i].push((k, (hi - lo) / len));
                }
            }
        }
        let lo = vec![0i64; n];
        let hi: Vec<i64> = axes.iter().map(|v| v.len() as i64 - 1).collect();
        for_each_in_box(&lo, &hi, |t| {
            let mut k = [0i64; MAX_DIM];
            let mut f = w;
            for i in 0..n {
                let (kk, fr) = axes[i][t[i] as usize];
                k[i] = kk;
                f *= fr;
            }
            *acc.entry(k).or_default() += f;
        });
    }
    GridMeasure::from_entries(n, m, acc.into_iter().collect())
}

/// The two forms of non-concentration: (1) on coordinate projections and
/// (2) projective, related by [`convert_nonconc_params`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NonConcForm {
    One,
    Two,
}

/// Parameter conversion between the two non-concentration forms.
///
/// `(2)(κ, ε) ⇒ (1)(min(κ,1), ε)` and, when `κ > 2ε`, `(1)(κ, ε) ⇒ (2)(κ/2, 2ε/κ)`.
pub fn convert_nonconc_params(form: NonConcForm, kappa: f64, eps: f64) -> Result<(NonConcForm, f64, f64)> {
    match form {
        NonConcForm::Two => Ok((NonConcForm::One, kappa.min(1.0), eps)),
        NonConcForm::One => {
            if kappa <= 2.0 * eps {
                return Err(LabError::domain(format!(
                    "form (1) converts only when kappa > 2 eps (kappa = {kappa}, eps = {eps})"
                )));
            }
            Ok((NonConcForm::Two, kappa / 2.0, 2.0 * eps / kappa))
        }
    }
}

/// Mass of `{f >= mean/2}` and the constant `K = max f / mean` on the support.
pub fn inverse_chebyshev(nu: &GridMeasure, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let centers = nu.centers();
    let vals: Vec<f64> = centers.iter().map(|c| f(c)).collect();
    let mass = nu.mass();
    let mean = vals.iter().zip(nu.weights()).map(|(v, w)| v * w).sum::<f64>() / mass;
    let k = vals.iter().fold(0.0f64, |a, &b| a.max(b)) / mean;
    let above: f64 = vals
        .iter()
        .zip(nu.weights())
        .filter(|(v, _)| **v >= mean / 2.0)
        .map(|(_, w)| w)
        .sum::<f64>()
        / mass;
    (k, above)
}

/// `ν{y : |det y| <= t}` for the diagonal action.
pub fn small_det_mass(nu: &GridMeasure, t: f64) -> f64 {
    nu.centers()
        .iter()
        .zip(nu.weights())
        .filter(|(c, _)| c.iter().product::<f64>().abs() <= t)
        .map(|(_, w)| w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(m: u32, lo: f64, hi: f64) -> GridMeasure {
        GridMeasure::uniform_on(&GridSet::half_open_box(1, m, &[lo], &[hi]).unwrap()).unwrap()
    }

    #[test]
    fn smoothing_point_mass() {
        let m = 14;
        let nu = GridMeasure::point_mass(1, m, &[0.0]).unwrap();
        let d1 = 64.0 / scale_inv(m);
        let s = smooth(&nu, d1).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-12);
        let exact = 1.0 / (2.0 * d1);
        assert!((s.l2_sq() - exact).abs() / exact < 0.01);
        // interior density is 1/|B(0, δ₁)|
        let dens = s.weight_at(&[0, 0, 0, 0]) * scale_inv(m);
        assert!((dens - exact).abs() / exact < 1e-12);
    }

    #[test]
    fn smoothing_preserves_mass_2d() {
        let nu = GridMeasure::point_mass(2, 8, &[0.5, 0.25]).unwrap();
        let s = smooth(&nu, 5.0 / 256.0).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn additive_convolution_of_atoms() {
        let a = GridMeasure::point_mass(1, 6, &[0.25]).unwrap();
        let b = GridMeasure::point_mass(1, 6, &[-0.5]).unwrap();
        let c = additive_convolve(&a, &b, Sign::Plus).unwrap();
        assert_eq!(c, GridMeasure::point_mass(1, 6, &[-0.25]).unwrap());
    }

    #[test]
    fn uniform_convolution_is_a_triangle() {
        let m = 9;
        let u = uniform(m, 0.0, 1.0);
        let t = additive_convolve(&u, &u, Sign::Plus).unwrap();
        let d = 1.0 / scale_inv(m);
        for x in [0.25, 0.5, 1.0, 1.5] {
            let k = (x / d) as i64;
            let dens = t.weight_at(&[k, 0, 0, 0]) / d;
            let want = if x <= 1.0 { x } else { 2.0 - x };
            assert!((dens - want).abs() < 4.0 * d, "{x}: {dens} vs {want}");
        }
    }

    #[test]
    fn pushforward_doubles_uniform() {
        let m = 8;
        let u = uniform(m, 0.5, 1.0);
        let p = pushforward_mult(&[2.0], &u).unwrap();
        assert!((p.mass() - 1.0).abs() < 1e-12);
        let d = 1.0 / scale_inv(m);
        let c = p.coords();
        assert!((c[0][0] as f64 * d - 1.0).abs() <= d);
        assert!((c[c.len() - 1][0] as f64 * d - 2.0).abs() <= d);
        let ratio = p.max_density() / u.max_density();
        assert!((0.25..=1.0).contains(&ratio));
        assert_eq!(pushforward_mult(&[1.0], &u).unwrap(), u);
        assert!(pushforward_mult(&[0.0], &u).is_err());
    }

    #[test]
    fn multiplicative_identity_and_point_masses() {
        let m = 8;
        let u = uniform(m, 0.5, 1.0);
        let id = GridMeasure::point_mass(1, m, &[1.0]).unwrap();
        assert_eq!(multiplicative_convolve(&id, &u).unwrap(), u);
        let y = GridMeasure::point_mass(1, m, &[0.75]).unwrap();
        let a = multiplicative_convolve_with(&y, &u, MultMode::Pairwise).unwrap();
        assert!((a.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_path_is_exact_when_fine() {
        let m = 7;
        let u = uniform(m, 0.5, 1.0);
        let v = uniform(m, 0.625, 0.875);
        let p = multiplicative_convolve_with(&u, &v, MultMode::Pairwise).unwrap();
        let f = multiplicative_convolve_with(&u, &v, MultMode::LogFft { oversample: 1 << (m + 2) }).unwrap();
        assert!(total_variation(&p, &f).unwrap() < 1e-9);
        let straddle = uniform(m, -0.5, 0.5);
        assert!(matches!(
            multiplicative_convolve_with(&straddle, &u, MultMode::LogFft { oversample: 4 }),
            Err(LabError::Mode(_))
        ));
    }

    #[test]
    fn symmetrize_atom() {
        let a = GridMeasure::point_mass(1, 6, &[0.75]).unwrap();
        assert_eq!(symmetrize(&a, 1).unwrap(), GridMeasure::point_mass(1, 6, &[0.0]).unwrap());
    }

    #[test]
    fn conversion_examples() {
        assert_eq!(convert_nonconc_params(NonConcForm::Two, 0.5, 0.1).unwrap(), (NonConcForm::One, 0.5, 0.1));
        let (f, k, e) = convert_nonconc_params(NonConcForm::One, 0.4, 0.1).unwrap();
        assert_eq!(f, NonConcForm::Two);
        assert!((k - 0.2).abs() < 1e-15 && (e - 0.5).abs() < 1e-15);
        assert_eq!(convert_nonconc_params(NonConcForm::Two, 1.5, 0.1).unwrap().1, 1.0);
        assert!(convert_nonconc_params(NonConcForm::One, 0.2, 0.1).is_err());
    }

    #[test]
    fn round_shift_matches_float_round() {
        for p in -2000i128..2000 {
            let want = (p as f64 / 16.0).round() as i64;
            assert_eq!(round_shift(p, 4), want, "{p}");
        }
    }
}
