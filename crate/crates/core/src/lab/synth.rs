//! Test measures built by depth-limited recursion and binned by exact overlap.
//!
//! Self-similar families are constructed on the unit cube and then placed
//! affinely in the declared box (default `[1/2, 1]ⁿ`). Each leaf of the
//! recursion is a box of uniform mass; its mass goes to the cells it meets in
//! proportion to the overlap.

use std::collections::HashMap;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::complex::ComplexGridMeasure;
use crate::error::{LabError, Result};
use crate::grid::{bin, check_budget, scale_inv, Coord, GridSet, MAX_DIM};
use crate::measure::GridMeasure;
use crate::rng::stream_rng;

/// Largest number of recursion leaves an IFS may produce.
const MAX_LEAVES: u128 = 1 << 24;

/// Branching per axis of the random family.
const RANDOM_BASE: usize = 4;

/// `x ↦ scale·x + shift` on the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityMap {
    pub scale: f64,
    pub shift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// Two-map Cantor construction with the given contraction ratio on every axis.
    Cantor { ratio: f64, depth: u32 },
    /// Product of one-dimensional families, one per axis.
    #[serde(rename = "product-of-1d")]
    ProductOf1d { factors: Vec<Family> },
    Ifs { maps: Vec<SimilarityMap>, weights: Option<Vec<f64>>, depth: u32 },
    Uniform,
    /// Atoms at absolute positions; equal weights unless given.
    Atoms { points: Vec<Vec<f64>>, weights: Option<Vec<f64>> },
    /// Random Cantor-type set: each cube keeps `round(4^κ)` of its `4ⁿ` children.
    Random { kappa: f64, seed: u64, depth: Option<u32> },
    /// Product Cantor on the plane, read as a measure on ℂ.
    ComplexCantor { ratio: f64, depth: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub n: usize,
    pub m: u32,
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_hi: Option<Vec<f64>>,
}

impl MeasureSpec {
    pub fn new(n: usize, m: u32, family: Family) -> Self {
        Self { n, m, family, box_lo: None, box_hi: None }
    }

    pub fn with_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.box_lo = Some(lo);
        self.box_hi = Some(hi);
        self
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.family, Family::ComplexCantor { .. })
    }

    fn placement(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.n;
        let lo = self.box_lo.clone().unwrap_or_else(|| vec![0.5; n]);
        let hi = self.box_hi.clone().unwrap_or_else(|| vec![1.0; n]);
        if lo.len() != n || hi.len() != n {
            return Err(spec_err(format!("placement box must have {n} coordinates per corner")));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(spec_err("placement box needs box_lo < box_hi on every axis"));
        }
        Ok((lo, hi))
    }
}

fn spec_err(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

/// Leaf of a recursion on the unit cube: per-axis intervals and a mass.
struct Leaf {
    lo: Vec<f64>,
    len: Vec<f64>,
    mass: f64,
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio < 0.5) {
        return Err(spec_err(format!("Cantor ratio {ratio} must lie in (0, 1/2)")));
    }
    Ok(())
}

/// Cell masses of one leaf interval `[a, a + len]` on the axis grid.
fn interval_cells(a: f64, len: f64, inv: f64) -> Vec<(i64, f64)> {
    if len * inv < 1e-12 {
        return vec![((a * inv).round() as i64, 1.0)];
    }
    let lo = a * inv;
    let hi = (a + len) * inv;
    let k0 = (lo + 0.5).floor() as i64;
    let k1 = (hi + 0.5).ceil() as i64 - 1;
    let mut out: Vec<(i64, f64)> = (k0..=k1)
        .map(|k| {
            let l = (k as f64 - 0.5).max(lo);
            let h = (k as f64 + 0.5).min(hi);
            (k, (h - l).max(0.0))
        })
        .filter(|(_, f)| *f > 0.0)
        .collect();
    let s: f64 = out.iter().map(|(_, f)| f).sum();
    for (_, f) in out.iter_mut() {
        *f /= s;
    }
    out
}

/// One-dimensional cell masses of a product factor, already placed in `[lo, hi]`.
fn axis_masses(leaves: &[Leaf], lo: f64, hi: f64, m: u32) -> Vec<(i64, f64)> {
    let inv = scale_inv(m);
    let w = hi - lo;
    let mut acc: HashMap<i64, f64> = HashMap::new();
    for leaf in leaves {
        for (k, f) in interval_cells(lo + w * leaf.lo[0], w * leaf.len[0], inv) {
            *acc.entry(k).or_default() += leaf.mass * f;
        }
    }
    let mut v: Vec<(i64, f64)> = acc.into_iter().collect();
    v.sort_by_key(|e| e.0);
    v
}

fn cantor_leaves(ratio: f64, depth: u32) -> Result<Vec<Leaf>> {
    check_ratio(ratio)?;
    let maps = vec![
        SimilarityMap { scale: ratio, shift: vec![0.0] },
        SimilarityMap { scale: ratio, shift: vec![1.0 - ratio] },
    ];
    ifs_leaves(1, &maps, &[0.5, 0.5], depth)
}

fn ifs_leaves(n: usize, maps: &[SimilarityMap], weights: &[f64], depth: u32) -> Result<Vec<Leaf>> {
    if maps.is_empty() {
        return Err(spec_err("IFS needs at least one map"));
    }
    if (maps.len() as u128).checked_pow(depth).map_or(true, |c| c > MAX_LEAVES) {
        return Err(spec_err(format!("IFS with {} maps at depth {depth} exceeds {MAX_LEAVES} leaves", maps.len())));
    }
    for f in maps {
        if !(f.scale > 0.0 && f.scale < 1.0) || f.shift.len() != n {
            return Err(spec_err("IFS maps need scale in (0, 1) and one shift per axis"));
        }
        if f.shift.iter().any(|&t| t < 0.0 || t + f.scale > 1.0 + 1e-12) {
            return Err(spec_err("IFS map does not send the unit cube into itself"));
        }
    }
    let mut leaves = vec![Leaf { lo: vec![0.0; n], len: vec![1.0; n], mass: 1.0 }];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(leaves.len() * maps.len());
        for leaf in &leaves {
            for (f, &p) in maps.iter().zip(weights) {
                next.push(Leaf {
                    lo: leaf.lo.iter().zip(&leaf.len).zip(&f.shift).map(|((a, l), t)| a + l * t).collect(),
                    len: leaf.len.iter().map(|l| l * f.scale).collect(),
                    mass: leaf.mass * p,
                });
            }
        }
        leaves = next;
    }
    Ok(leaves)
}

fn random_leaves(n: usize, kappa: f64, seed: u64, depth: u32) -> Result<Vec<Leaf>> {
    if !(kappa > 0.0 && kappa <= n as f64) {
        return Err(spec_err(format!("random family needs kappa in (0, {n}]")));
    }
    let children = RANDOM_BASE.pow(n as u32);
    let keep = (RANDOM_BASE as f64).powf(kappa).round().clamp(1.0, children as f64) as usize;
    if (keep as u128).checked_pow(depth).map_or(true, |c| c > MAX_LEAVES) {
        return Err(spec_err("random family depth too large"));
    }
    let mut leaves = vec![Leaf { lo: vec![0.0; n], len: vec![1.0; n], mass: 1.0 }];
    let mut node = 0u64;
    for _ in 0..depth {
        let mut next = Vec::with_capacity(leaves.len() * keep);
        for leaf in &leaves {
            let mut rng = stream_rng(seed, node);
            node += 1;
            let mut picks = sample(&mut rng, children, keep).into_vec();
            picks.sort_unstable();
            let l = leaf.len[0] / RANDOM_BASE as f64;
            for p in picks {
                let mut q = p;
                let lo = (0..n)
                    .map(|i| {
                        let digit = q % RANDOM_BASE;
                        q /= RANDOM_BASE;
                        leaf.lo[i] + digit as f64 * l
                    })
                    .collect();
                next.push(Leaf { lo, len: vec![l; n], mass: leaf.mass / keep as f64 });
            }
        }
        leaves = next;
    }
    Ok(leaves)
}

/// Outer product of per-axis cell masses.
fn product_measure(n: usize, m: u32, axes: &[Vec<(i64, f64)>]) -> Result<GridMeasure> {
    check_budget(axes.iter().map(|a| a.len() as u128).product())?;
    let mut entries: Vec<(Coord, f64)> = vec![([0; MAX_DIM], 1.0)];
    for (i, axis) in axes.iter().enumerate() {
        let mut next = Vec::with_capacity(entries.len() * axis.len());
        for (c, w) in &entries {
            for &(k, f) in axis {
                let mut c2 = *c;
                c2[i] = k;
                next.push((c2, w * f));
            }
        }
        entries = next;
    }
    GridMeasure::from_entries(n, m, entries)
}

/// Spread general (non-product) leaves placed in `[lo, hi]`.
fn leaf_measure(n: usize, m: u32, leaves: &[Leaf], lo: &[f64], hi: &[f64]) -> Result<GridMeasure> {
    let inv = scale_inv(m);
    let mut acc: HashMap<Coord, f64> = HashMap::new();
    for leaf in leaves {
        let axes: Vec<Vec<(i64, f64)>> = (0..n)
            .map(|i| {
                let w = hi[i] - lo[i];
                interval_cells(lo[i] + w * leaf.lo[i], w * leaf.len[i], inv)
            })
            .collect();
        let mut cells: Vec<(Coord, f64)> = vec![([0; MAX_DIM], leaf.mass)];
        for (i, axis) in axes.iter().enumerate() {
            cells = cells
                .iter()
                .flat_map(|(c, w)| {
                    axis.iter().map(move |&(k, f)| {
                        let mut c2 = *c;
                        c2[i] = k;
                        (c2, w * f)
                    })
                })
                .collect();
        }
        for (c, w) in cells {
            *acc.entry(c).or_default() += w;
        }
    }
    let mut entries: Vec<(Coord, f64)> = acc.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    GridMeasure::from_entries(n, m, entries)
}

fn check_dims(spec: &MeasureSpec) -> Result<()> {
    if spec.n == 0 || spec.n > MAX_DIM {
        return Err(spec_err(format!("dimension {} outside 1..=4", spec.n)));
    }
    if spec.m > 30 {
        return Err(spec_err(format!("scale exponent {} too fine", spec.m)));
    }
    Ok(())
}

fn one_dim_leaves(f: &Family) -> Result<Vec<Leaf>> {
    match f {
        Family::Cantor { ratio, depth } => cantor_leaves(*ratio, *depth),
        Family::Uniform => Ok(vec![Leaf { lo: vec![0.0], len: vec![1.0], mass: 1.0 }]),
        Family::Ifs { maps, weights, depth } => ifs_leaves(1, maps, &ifs_weights(maps.len(), weights)?, *depth),
        Family::Random { kappa, seed, depth } => random_leaves(1, *kappa, *seed, depth.unwrap_or(8)),
        _ => Err(spec_err("product factors must be one-dimensional self-similar families")),
    }
}

fn ifs_weights(count: usize, weights: &Option<Vec<f64>>) -> Result<Vec<f64>> {
    let w = weights.clone().unwrap_or_else(|| vec![1.0 / count as f64; count]);
    if w.len() != count || w.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(spec_err("IFS weights must be positive, one per map"));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(spec_err(format!("IFS weights sum to {s}, not 1")));
    }
    Ok(w)
}

/// Build the measure described by `spec` at scale `2^-m`.
pub fn synth_measure(spec: &MeasureSpec) -> Result<GridMeasure> {
    check_dims(spec)?;
    let (n, m) = (spec.n, spec.m);
    let (lo, hi) = spec.placement()?;
    match &spec.family {
        Family::Cantor { ratio, depth } => {
            let leaves = cantor_leaves(*ratio, *depth)?;
            let axes: Vec<_> = (0..n).map(|i| axis_masses(&leaves, lo[i], hi[i], m)).collect();
            product_measure(n, m, &axes)
        }
        Family::ComplexCantor { ratio, depth } => {
            if n != 2 {
                return Err(spec_err("complex-cantor needs n = 2"));
            }
            let leaves = cantor_leaves(*ratio, *depth)?;
            let axes: Vec<_> = (0..2).map(|i| axis_masses(&leaves, lo[i], hi[i], m)).collect();
            product_measure(2, m, &axes)
        }
        Family::ProductOf1d { factors } => {
            if factors.len() != n {
                return Err(spec_err(format!("product-of-1d needs {n} factors, got {}", factors.len())));
            }
            let mut axes = Vec::with_capacity(n);
            for (i, f) in factors.iter().enumerate() {
                axes.push(axis_masses(&one_dim_leaves(f)?, lo[i], hi[i], m));
            }
            product_measure(n, m, &axes)
        }
        Family::Ifs { maps, weights, depth } => {
            let leaves = ifs_leaves(n, maps, &ifs_weights(maps.len(), weights)?, *depth)?;
            leaf_measure(n, m, &leaves, &lo, &hi)
        }
        Family::Random { kappa, seed, depth } => {
            // 4^-depth at or below the cell size
            let d = depth.unwrap_or(m.div_ceil(2));
            let leaves = random_leaves(n, *kappa, *seed, d)?;
            leaf_measure(n, m, &leaves, &lo, &hi)
        }
        Family::Uniform => {
            let s = GridSet::half_open_box(n, m, &lo, &hi)?;
            GridMeasure::uniform_on(&s)
        }
        Family::Atoms { points, weights } => {
            if points.is_empty() || points.iter().any(|p| p.len() != n) {
                return Err(spec_err(format!("atoms need at least one point with {n} coordinates")));
            }
            let w = weights.clone().unwrap_or_else(|| vec![1.0 / points.len() as f64; points.len()]);
            if w.len() != points.len() || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(spec_err("atom weights must be non-negative, one per point"));
            }
            let inside = |p: &Vec<f64>| p.iter().enumerate().all(|(i, x)| *x >= lo[i] && *x <= hi[i]);
            if spec.box_lo.is_some() && !points.iter().all(inside) {
                return Err(spec_err("an atom lies outside the placement box"));
            }
            let entries = points
                .iter()
                .zip(&w)
                .map(|(p, &wt)| {
                    let mut c = [0i64; MAX_DIM];
                    for i in 0..n {
                        c[i] = bin(p[i], m);
                    }
                    (c, wt)
                })
                .collect();
            GridMeasure::from_entries(n, m, entries)
        }
    }
}

pub fn synth_complex(spec: &MeasureSpec) -> Result<ComplexGridMeasure> {
    ComplexGridMeasure::new(synth_measure(spec)?)
}
