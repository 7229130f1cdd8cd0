//! Measures on ℂ, stored as planar grid measures (axis 0 real, axis 1 imaginary).
//!
//! The pairing is `μ̂(ξ) = ∫ e^{2πi Re(ξz)} dμ(z)`. Since
//! `Re(ξz) = ξ_r x - ξ_i y`, this is the planar transform at `(ξ_r, -ξ_i)`.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fftnd::{fast_len, fft_nd};
use crate::fourier::{annulus_sup, fourier_transform, DecayReport, FrequencyField, MAX_POWER};
use crate::grid::{check_budget, Coord, GridSet, MAX_DIM};
use crate::measure::{nonconcentration_over, round_shift, GridMeasure, NonConReport};

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGridMeasure {
    measure: GridMeasure,
}

impl ComplexGridMeasure {
    pub fn new(measure: GridMeasure) -> Result<Self> {
        if measure.n() != 2 {
            return Err(LabError::domain("a measure on ℂ lives on a planar grid"));
        }
        Ok(Self { measure })
    }

    pub fn point_mass(m: u32, z: Complex64) -> Result<Self> {
        Self::new(GridMeasure::point_mass(2, m, &[z.re, z.im])?)
    }

    pub fn measure(&self) -> &GridMeasure {
        &self.measure
    }

    pub fn into_measure(self) -> GridMeasure {
        self.measure
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.measure.centers().iter().map(|c| Complex64::new(c[0], c[1])).collect()
    }

    /// Support inside `{1/C₀ ≤ |z| ≤ C₀}`.
    pub fn in_annulus(&self, c0: f64) -> bool {
        self.points().iter().all(|z| {
            let r = z.norm();
            r >= 1.0 / c0 && r <= c0
        })
    }
}

/// `μ̂` on the planar node box, indexed by `(ξ_r, ξ_i)`.
pub fn complex_fourier(mu: &ComplexGridMeasure, max_freq: f64) -> Result<FrequencyField> {
    let mut f = fourier_transform(&mu.measure, max_freq)?;
    let side = (2 * f.half + 1) as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); f.values.len()];
    for a in 0..side {
        for b in 0..side {
            out[a * side + b] = f.values[a * side + (side - 1 - b)];
        }
    }
    f.values = out;
    f.center[1] = -f.center[1];
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ComplexMultMode {
    /// Every pair of cells, exact Gaussian-integer product rebinned.
    Pairwise,
    /// `(log|z|, arg z)` coordinates: radial step `δ / (oversample · P)`, `P` the
    /// largest product modulus, and the matching number of angle bins (circular).
    LogPolar { oversample: f64 },
}

pub fn complex_mult_convolve(mu: &ComplexGridMeasure, nu: &ComplexGridMeasure) -> Result<ComplexGridMeasure> {
    complex_mult_convolve_with(mu, nu, ComplexMultMode::Pairwise)
}

pub fn complex_mult_convolve_with(
    mu: &ComplexGridMeasure,
    nu: &ComplexGridMeasure,
    mode: ComplexMultMode,
) -> Result<ComplexGridMeasure> {
    let (a, b) = (&mu.measure, &nu.measure);
    if a.m() != b.m() {
        return Err(LabError::domain("measures on different scales"));
    }
    let out = match mode {
        ComplexMultMode::Pairwise => pairwise(a, b)?,
        ComplexMultMode::LogPolar { oversample } => log_polar(a, b, oversample)?,
    };
    ComplexGridMeasure::new(out)
}

fn pairwise(a: &GridMeasure, b: &GridMeasure) -> Result<GridMeasure> {
    let m = a.m();
    let ea = a.entries();
    let eb = b.entries();
    let mut acc: HashMap<Coord, f64> = HashMap::new();
    for (ca, wa) in &ea {
        let (x, y) = (ca[0] as i128, ca[1] as i128);
        for (cb, wb) in &eb {
            let (u, v) = (cb[0] as i128, cb[1] as i128);
            let mut k = [0i64; MAX_DIM];
            k[0] = round_shift(x * u - y * v, m);
            k[1] = round_shift(x * v + y * u, m);
            *acc.entry(k).or_default() += wa * wb;
        }
    }
    GridMeasure::from_entries(2, m, acc.into_iter().collect())
}

struct Polar {
    jr: i64,
    jt: usize,
    w: f64,
}

fn to_polar(g: &GridMeasure, h: f64, ht: f64, k: usize) -> Result<Vec<Polar>> {
    g.centers()
        .iter()
        .zip(g.weights())
        .map(|(c, &w)| {
            let z = Complex64::new(c[0], c[1]);
            if z.norm() == 0.0 {
                return Err(LabError::Mode("support meets the origin; use ComplexMultMode::Pairwise".into()));
            }
            let jr = (z.norm().ln() / h).round() as i64;
            let jt = ((z.arg() / ht).round() as i64).rem_euclid(k as i64) as usize;
            Ok(Polar { jr, jt, w })
        })
        .collect()
}

fn log_polar(a: &GridMeasure, b: &GridMeasure, oversample: f64) -> Result<GridMeasure> {
    if !(oversample > 0.0) {
        return Err(LabError::domain("oversample must be positive"));
    }
    let d = a.delta();
    let rmax = |g: &GridMeasure| g.centers().iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max);
    let p_max = rmax(a) * rmax(b);
    let h = d / (oversample * p_max);
    let k = fast_len((2.0 * std::f64::consts::PI / h).ceil() as usize);
    let ht = 2.0 * std::f64::consts::PI / k as f64;
    let pa = to_polar(a, h, ht, k)?;
    let pb = to_polar(b, h, ht, k)?;
    let range = |p: &[Polar]| {
        let lo = p.iter().map(|q| q.jr).min().unwrap_or(0);
        let hi = p.iter().map(|q| q.jr).max().unwrap_or(0);
        (lo, (hi - lo + 1) as usize)
    };
    let (alo, alen) = range(&pa);
    let (blo, blen) = range(&pb);
    let rlen = alen + blen - 1;
    let rpad = fast_len(rlen);
    check_budget(rpad as u128 * k as u128 * 2)?;
    let shape = [rpad, k];
    let fill = |p: &[Polar], lo: i64| {
        let mut v = vec![Complex64::new(0.0, 0.0); rpad * k];
        for q in p {
            v[(q.jr - lo) as usize * k + q.jt] += q.w;
        }
        v
    };
    let mut fa = fill(&pa, alo);
    let mut fb = fill(&pb, blo);
    fft_nd(&mut fa, &shape, false);
    fft_nd(&mut fb, &shape, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    drop(fb);
    fft_nd(&mut fa, &shape, true);
    let norm = 1.0 / (rpad * k) as f64;
    let max = fa.iter().map(|v| v.re).fold(0.0, f64::max) * norm;
    let floor = max * 1e-13;
    let mut acc: HashMap<Coord, f64> = HashMap::new();
    for ir in 0..rlen {
        for it in 0..k {
            let w = fa[ir * k + it].re * norm;
            if w <= floor {
                continue;
            }
            let r = ((ir as i64 + alo + blo) as f64 * h).exp();
            let t = it as f64 * ht;
            let mut c = [0i64; MAX_DIM];
            c[0] = (r * t.cos() / d).round() as i64;
            c[1] = (r * t.sin() / d).round() as i64;
            *acc.entry(c).or_default() += w;
        }
    }
    GridMeasure::from_entries(2, a.m(), acc.into_iter().collect())
}

/// k-fold ℂ-multiplicative convolution.
pub fn complex_power(mu: &ComplexGridMeasure, k: usize) -> Result<ComplexGridMeasure> {
    if k == 0 {
        return ComplexGridMeasure::point_mass(mu.measure.m(), Complex64::new(1.0, 0.0));
    }
    let mut acc = mu.clone();
    for _ in 1..k {
        acc = complex_mult_convolve(&acc, mu)?;
    }
    Ok(acc)
}

/// Annulus decay of `μ_k` on ℂ. The annulus is invariant under `ξ_i ↦ -ξ_i`,
/// so the planar sup is the complex one.
pub fn complex_decay_sup(mu: &ComplexGridMeasure, k: usize, delta: f64) -> Result<DecayReport> {
    if k == 0 || k > MAX_POWER {
        return Err(LabError::domain(format!("power {k} outside 1..={MAX_POWER}")));
    }
    let muk = complex_power(mu, k)?;
    let mut r = annulus_sup(&muk.measure, k, delta, !mu.in_annulus(2.0))?;
    r.argmax[1] = -r.argmax[1];
    Ok(r)
}

/// Sup-mass table for the projections `z ↦ Re(e^{iθ} z)`, `θ_j = jπ/count`.
pub fn rotational_nonconcentration(mu: &ComplexGridMeasure, rhos: &[f64], theta_count: usize) -> Result<NonConReport> {
    let count = theta_count.max(8);
    let dirs: Vec<Vec<f64>> = (0..count)
        .map(|j| {
            let t = std::f64::consts::PI * j as f64 / count as f64;
            vec![t.cos(), -t.sin()]
        })
        .collect();
    nonconcentration_over(&mu.measure, rhos, dirs, std::f64::consts::PI / (2.0 * count as f64))
}

/// `max |Im z|` over the cells of `A`.
pub fn distance_to_real_axis(a: &GridSet) -> Result<f64> {
    if a.n() != 2 {
        return Err(LabError::domain("a set in ℂ lives on a planar grid"));
    }
    if a.is_empty() {
        return Err(LabError::domain("empty set"));
    }
    Ok(a.centers().iter().map(|c| c[1].abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::transform_at;
    use crate::measure::total_variation;

    fn blob(m: u32) -> ComplexGridMeasure {
        let s = GridSet::closed_box(2, m, &[0.5, 0.25], &[0.75, 0.5]).unwrap();
        ComplexGridMeasure::new(GridMeasure::uniform_on(&s).unwrap()).unwrap()
    }

    #[test]
    fn point_mass_phase() {
        let z0 = Complex64::new(0.5, 0.25);
        let p = ComplexGridMeasure::point_mass(6, z0).unwrap();
        let f = complex_fourier(&p, 8.0).unwrap();
        for i in (0..f.len()).step_by(13) {
            let xi = f.node(i);
            let want = 2.0 * std::f64::consts::PI * (Complex64::new(xi[0], xi[1]) * z0).re;
            assert!((f.values[i] - Complex64::from_polar(1.0, want)).norm() < 1e-10);
        }
    }

    #[test]
    fn complex_fourier_is_reflected_planar() {
        let mu = blob(5);
        let f = complex_fourier(&mu, 6.0).unwrap();
        for i in (0..f.len()).step_by(11) {
            let xi = f.node(i);
            assert!((f.values[i] - transform_at(mu.measure(), &[xi[0], -xi[1]])).norm() < 1e-10);
        }
    }

    #[test]
    fn identity_and_quarter_turn() {
        let mu = blob(6);
        let one = ComplexGridMeasure::point_mass(6, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(complex_mult_convolve(&one, &mu).unwrap(), mu);
        let i = ComplexGridMeasure::point_mass(6, Complex64::new(0.0, 1.0)).unwrap();
        let rot = complex_mult_convolve(&i, &mu).unwrap();
        let want: Vec<(Coord, f64)> = mu.measure().entries().into_iter().map(|(c, w)| ([-c[1], c[0], 0, 0], w)).collect();
        assert_eq!(rot.measure(), &GridMeasure::from_entries(2, 6, want).unwrap());
    }

    #[test]
    fn log_polar_tracks_pairwise() {
        let mu = blob(5);
        let p = complex_mult_convolve(&mu, &mu).unwrap();
        let f = complex_mult_convolve_with(&mu, &mu, ComplexMultMode::LogPolar { oversample: 4.0 }).unwrap();
        assert!((f.measure().mass() - 1.0).abs() < 1e-6);
        assert!(total_variation(p.measure(), f.measure()).unwrap() < 0.5);
        let z = ComplexGridMeasure::point_mass(5, Complex64::new(0.0, 0.0)).unwrap();
        assert!(matches!(
            complex_mult_convolve_with(&z, &mu, ComplexMultMode::LogPolar { oversample: 1.0 }),
            Err(LabError::Mode(_))
        ));
    }

    #[test]
    fn real_axis_distance() {
        let a = GridSet::from_points(2, 4, &[[0.5, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(distance_to_real_axis(&a).unwrap(), 0.0);
        let b = GridSet::from_points(2, 4, &[[0.0, 1.0], [0.5, -0.25]]).unwrap();
        assert!(distance_to_real_axis(&b).unwrap() >= 1.0);
    }
}
