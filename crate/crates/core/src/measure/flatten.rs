//! Monte Carlo estimate of `∫ ‖ν_{δ₁} * (m_y)_* ν_{δ₁}‖₂² dν(y)` against `‖ν_{δ₁}‖₂²`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{additive_convolve, pushforward_spread, small_det_mass, smooth, GridMeasure};
use crate::error::{LabError, Result};
use crate::grid::{for_each_in_box, Coord};
use crate::lattice::Sign;
use crate::rng::stream_rng;

/// Direct-sum budget (terms) for the frequency-side comparison.
const FREQ_WORK: f64 = 2e9;

#[derive(Debug, Clone, Copy)]
pub struct FlatteningOptions {
    pub sample_count: usize,
    pub seed: u64,
    /// Run the frequency-side comparison when it fits the work budget.
    pub frequency_check: bool,
}

impl Default for FlatteningOptions {
    fn default() -> Self {
        Self { sample_count: 64, seed: 0, frequency_check: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatteningReport {
    pub delta1: f64,
    pub lhs: f64,
    /// Standard error of `lhs` over the samples.
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `log(ratio) / log δ₁`.
    pub eps_hat: f64,
    /// Ratio for a single atom at the identity on the same grid: the smoothing
    /// kernel's own contribution (2/3 in one dimension).
    pub atom_ratio: f64,
    /// `log(ratio / atom_ratio) / log δ₁`.
    pub eps_hat_normalized: f64,
    pub sample_count: usize,
    /// Single-cell input.
    pub degenerate: bool,
    pub min_abs_det: f64,
    /// `ν{|det y| ≤ δ₁^{n/2}}`.
    pub small_det_mass: f64,
    /// Average of `∫_{B(0, 2/δ)} |ν̂(ξ)|² |ν̂(yξ)|² dξ` with `δ = C δ₁ / 2`.
    pub freq_side: Option<f64>,
    /// `lhs / freq_side`, bounded below by a constant depending on `C` only.
    pub space_over_freq: Option<f64>,
    pub support_radius_c: f64,
}

fn flatten_value(nd: &GridMeasure, y: &[f64]) -> Result<f64> {
    let pushed = pushforward_spread(y, nd)?;
    Ok(additive_convolve(nd, &pushed, Sign::Plus)?.l2_sq())
}

/// Sample `count` cells of `ν` by weight; sample `i` uses its own stream.
pub(crate) fn sample_cells(nu: &GridMeasure, count: usize, seed: u64) -> Vec<usize> {
    let mut cum = Vec::with_capacity(nu.len());
    let mut s = 0.0;
    for w in nu.weights() {
        s += w;
        cum.push(s);
    }
    (0..count)
        .map(|i| {
            let u = stream_rng(seed, i as u64).gen::<f64>() * s;
            cum.partition_point(|&c| c <= u).min(nu.len() - 1)
        })
        .collect()
}

pub fn flattening_integral(nu: &GridMeasure, delta1: f64, sample_count: usize, seed: u64) -> Result<FlatteningReport> {
    flattening_integral_with(nu, delta1, &FlatteningOptions { sample_count, seed, ..Default::default() })
}

pub fn flattening_integral_with(nu: &GridMeasure, delta1: f64, opts: &FlatteningOptions) -> Result<FlatteningReport> {
    if opts.sample_count < 16 {
        return Err(LabError::domain("flattening needs at least 16 samples"));
    }
    if nu.is_empty() {
        return Err(LabError::domain("empty measure"));
    }
    let n = nu.n();
    let nd = smooth(nu, delta1)?;
    let rhs = nd.l2_sq();
    let centers = nu.centers();
    let picks = sample_cells(nu, opts.sample_count, opts.seed);
    let ys: Vec<&Vec<f64>> = picks.iter().map(|&i| &centers[i]).collect();
    let vals: Vec<f64> = ys.par_iter().map(|y| flatten_value(&nd, y)).collect::<Result<_>>()?;
    let k = vals.len() as f64;
    let lhs = vals.iter().sum::<f64>() / k;
    let var = vals.iter().map(|v| (v - lhs).powi(2)).sum::<f64>() / (k - 1.0);
    let ratio = lhs / rhs;

    let id = GridMeasure::point_mass(n, nu.m(), &vec![1.0; n])?;
    let id_s = smooth(&id, delta1)?;
    let atom_ratio = flatten_value(&id_s, &vec![1.0; n])? / id_s.l2_sq();

    let min_abs_det = ys.iter().map(|y| y.iter().product::<f64>().abs()).fold(f64::INFINITY, f64::min);
    let radius = centers.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0f64, f64::max);
    let c_const = (radius * (1.0 + 1e-9)).max(8.0 + 1.0);
    let freq_side = if opts.frequency_check {
        frequency_side(nu, &centers, &ys, c_const * delta1 / 2.0)
    } else {
        None
    };
    let ld = delta1.ln();
    Ok(FlatteningReport {
        delta1,
        lhs,
        lhs_stderr: (var / k).sqrt(),
        rhs,
        ratio,
        eps_hat: ratio.ln() / ld,
        atom_ratio,
        eps_hat_normalized: (ratio / atom_ratio).ln() / ld,
        sample_count: opts.sample_count,
        degenerate: nu.len() == 1,
        min_abs_det,
        small_det_mass: small_det_mass(nu, delta1.powf(n as f64 / 2.0)),
        space_over_freq: freq_side.map(|f| lhs / f),
        freq_side,
        support_radius_c: c_const,
    })
}

/// `ν̂(ξ) = Σ w e^{2πi⟨ξ, x⟩}` by direct summation.
pub(crate) fn transform_at(centers: &[Vec<f64>], weights: &[f64], xi: &[f64]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (x, w) in centers.iter().zip(weights) {
        let ph = 2.0 * std::f64::consts::PI * x.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
        s += Complex64::from_polar(*w, ph);
    }
    s
}

fn frequency_side(nu: &GridMeasure, centers: &[Vec<f64>], ys: &[&Vec<f64>], delta: f64) -> Option<f64> {
    let n = nu.n();
    let r = 2.0 / delta;
    // |ν̂|² varies on the scale 1/diam; sample at a quarter of that
    let step = 1.0 / (4.0 * nu.diameter().max(nu.delta()));
    let half = (r / step).ceil() as i64;
    let nodes_est = (2.0 * half as f64 + 1.0).powi(n as i32);
    if nodes_est * centers.len() as f64 * (ys.len() as f64 + 1.0) > FREQ_WORK {
        return None;
    }
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    for_each_in_box(&vec![-half; n], &vec![half; n], |c: &Coord| {
        let xi: Vec<f64> = c[..n].iter().map(|&k| k as f64 * step).collect();
        if xi.iter().map(|x| x * x).sum::<f64>() <= r * r {
            nodes.push(xi);
        }
    });
    let cell = step.powi(n as i32);
    let w = nu.weights();
    let base: Vec<f64> = nodes.par_iter().map(|xi| transform_at(centers, w, xi).norm_sqr()).collect();
    let per_y: Vec<f64> = ys
        .par_iter()
        .map(|y| {
            nodes
                .iter()
                .zip(&base)
                .map(|(xi, b)| {
                    let yxi: Vec<f64> = xi.iter().zip(y.iter()).map(|(a, b)| a * b).collect();
                    b * transform_at(centers, w, &yxi).norm_sqr()
                })
                .sum::<f64>()
                * cell
        })
        .collect();
    Some(per_y.iter().sum::<f64>() / per_y.len() as f64)
}
