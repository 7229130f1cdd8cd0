//! Dyadic level-set decomposition of a measure at scale δ.
//!
//! Ball averages `ν_r(x) = ν(B(x, r)) / |B(0, r)|` are read off the smoothed
//! density [`smooth`](super::smooth), which treats each cell as a uniform box.
//! The separated set is the lattice `δℤⁿ`, restricted to points where
//! `ν_{2δ} > 0`; this is a maximal δ-separated set of ℝⁿ up to the null part.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{smooth, GridMeasure};
use crate::error::{LabError, Result};
use crate::grid::{ball_offsets, Coord, GridSet};

#[derive(Debug, Clone, Serialize)]
pub struct DyadicLevel {
    pub index: u32,
    /// Centers generating the level, in grid cell units.
    #[serde(skip)]
    pub centers: Vec<Coord>,
    #[serde(skip)]
    pub set: GridSet,
    pub center_count: usize,
    pub cell_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DyadicLevels {
    pub delta: f64,
    pub levels: Vec<DyadicLevel>,
    /// Largest index any probability measure can reach at this scale.
    pub level_bound: u32,
    /// Max number of generating balls meeting a single cell.
    pub max_overlap: usize,
}

impl DyadicLevels {
    pub fn indices(&self) -> Vec<u32> {
        self.levels.iter().map(|l| l.index).collect()
    }

    pub fn level(&self, i: u32) -> Option<&DyadicLevel> {
        self.levels.iter().find(|l| l.index == i)
    }
}

/// Level of a positive value `v`: `i = 0` when `v ≤ 1`, else `2^{i-1} < v ≤ 2^i`.
pub(crate) fn level_of(v: f64) -> u32 {
    let mut i = 0u32;
    let mut top = 1.0f64;
    while v > top * (1.0 + 1e-12) {
        top *= 2.0;
        i += 1;
    }
    i
}

fn step_of(nu: &GridMeasure, delta: f64) -> Result<i64> {
    let d = nu.delta();
    let s = (delta / d).round();
    if s < 1.0 || (s * d - delta).abs() > 1e-9 * delta {
        return Err(LabError::domain(format!("scale {delta} is not a positive multiple of the grid step {d}")));
    }
    Ok(s as i64)
}

fn density_map(nu: &GridMeasure, r: f64) -> Result<HashMap<Coord, f64>> {
    let s = smooth(nu, r)?;
    let vol = s.delta().powi(s.n() as i32);
    Ok(s.entries().into_iter().map(|(c, w)| (c, w / vol)).collect())
}

/// Split the lattice `δℤⁿ` by the dyadic size of `ν_{2δ}` and thicken each
/// level by δ-balls.
pub fn dyadic_decompose(nu: &GridMeasure, delta: f64) -> Result<DyadicLevels> {
    let n = nu.n();
    let step = step_of(nu, delta)?;
    let dens = density_map(nu, 2.0 * delta)?;
    let mut by_level: BTreeMap<u32, Vec<Coord>> = BTreeMap::new();
    let mut lattice: Vec<(Coord, f64)> = dens
        .iter()
        .filter(|(c, v)| **v > 0.0 && c[..n].iter().all(|x| x.rem_euclid(step) == 0))
        .map(|(c, v)| (*c, *v))
        .collect();
    lattice.sort_by(|a, b| a.0.cmp(&b.0));
    for (c, v) in lattice {
        by_level.entry(level_of(v)).or_default().push(c);
    }
    let offsets = ball_offsets(n, step as f64);
    let mut cover: HashMap<Coord, usize> = HashMap::new();
    let mut levels = Vec::new();
    for (index, centers) in by_level {
        let mut cells = Vec::with_capacity(centers.len() * offsets.len());
        for c in &centers {
            for o in &offsets {
                let mut x = *c;
                for i in 0..n {
                    x[i] += o[i];
                }
                *cover.entry(x).or_default() += 1;
                cells.push(x);
            }
        }
        let set = GridSet::from_coords(n, nu.m(), cells)?;
        levels.push(DyadicLevel { index, center_count: centers.len(), cell_count: set.len(), centers, set });
    }
    let unit_ball = ball_volume(n, 2.0 * delta);
    let level_bound = level_of(1.0 / unit_ball);
    Ok(DyadicLevels {
        delta,
        levels,
        level_bound,
        max_overlap: cover.values().copied().max().unwrap_or(0),
    })
}

/// Volume of the Euclidean ball of radius `r` in ℝⁿ, `n ≤ 4`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    let c = match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI * PI / 2.0,
    };
    c * r.powi(n as i32)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichConstants {
    /// `max ν_δ / Σ_{i≥0} 2^i 𝟙_{X_i}` where `ν_δ > 0`.
    pub lower: f64,
    /// `max Σ_{i>0} 2^i 𝟙_{X_i} / ν_{3δ}` where the numerator is positive.
    pub upper: f64,
}

/// Pointwise comparison of `ν_δ` and `ν_{3δ}` with the level function, on grid cells.
pub fn sandwich_constants(nu: &GridMeasure, levels: &DyadicLevels) -> Result<SandwichConstants> {
    let d1 = density_map(nu, levels.delta)?;
    let d3 = density_map(nu, 3.0 * levels.delta)?;
    let mut level_fn: HashMap<Coord, (f64, f64)> = HashMap::new();
    for l in &levels.levels {
        let w = 2f64.powi(l.index as i32);
        for c in l.set.coords() {
            let e = level_fn.entry(c).or_default();
            e.0 += w;
            if l.index > 0 {
                e.1 += w;
            }
        }
    }
    let mut lower = 0.0f64;
    for (c, v) in &d1 {
        if *v <= 0.0 {
            continue;
        }
        let s = level_fn.get(c).map(|e| e.0).unwrap_or(0.0);
        lower = lower.max(if s > 0.0 { v / s } else { f64::INFINITY });
    }
    let mut upper = 0.0f64;
    for (c, (_, sp)) in &level_fn {
        if *sp <= 0.0 {
            continue;
        }
        let v = d3.get(c).copied().unwrap_or(0.0);
        upper = upper.max(if v > 0.0 { sp / v } else { f64::INFINITY });
    }
    Ok(SandwichConstants { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::scale_inv;

    #[test]
    fn level_boundaries() {
        assert_eq!(level_of(0.3), 0);
        assert_eq!(level_of(1.0), 0);
        assert_eq!(level_of(1.5), 1);
        assert_eq!(level_of(2.0), 1);
        assert_eq!(level_of(2.0001), 2);
    }

    #[test]
    fn uniform_density_one_is_level_zero() {
        let m = 10;
        let s = GridSet::half_open_box(1, m, &[0.0], &[1.0]).unwrap();
        let nu = GridMeasure::uniform_on(&s).unwrap();
        let lv = dyadic_decompose(&nu, 1.0 / scale_inv(m)).unwrap();
        assert_eq!(lv.indices(), vec![0]);
        let c = sandwich_constants(&nu, &lv).unwrap();
        assert!(c.lower <= 32.0 && c.upper <= 32.0);
    }

    #[test]
    fn point_mass_top_level() {
        let m = 8;
        let d = 1.0 / scale_inv(m);
        let nu = GridMeasure::point_mass(2, m, &[0.5, 0.5]).unwrap();
        let lv = dyadic_decompose(&nu, d).unwrap();
        let top = *lv.indices().last().unwrap();
        let v = 1.0 / ball_volume(2, 2.0 * d);
        let pred = level_of(v);
        // subsampled disc area differs from π(2δ)² by well under a factor 2
        assert!(top.abs_diff(pred) <= 1, "{top} vs {pred}");
        assert!(top <= lv.level_bound + 1);
        let c = sandwich_constants(&nu, &lv).unwrap();
        assert!(c.lower <= 32.0 && c.upper <= 32.0, "{c:?}");
    }

    #[test]
    fn coarser_scale_uses_sublattice() {
        let m = 8;
        let s = GridSet::half_open_box(1, m, &[0.25], &[0.5]).unwrap();
        let nu = GridMeasure::uniform_on(&s).unwrap();
        let lv = dyadic_decompose(&nu, 4.0 / scale_inv(m)).unwrap();
        for l in &lv.levels {
            assert!(l.centers.iter().all(|c| c[0] % 4 == 0));
        }
        assert!(lv.max_overlap <= 3);
        assert!(dyadic_decompose(&nu, 1.5 / scale_inv(m)).is_err());
    }
}
