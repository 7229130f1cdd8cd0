//! Fourier side of grid measures.
//!
//! Convention: `μ̂(ξ) = Σ_c w_c e^{+2πi⟨ξ, x_c⟩}` with `x_c` the cell center.
//! Transforms are sampled on the node lattice `s ℤⁿ`, `s = 1/(Lδ)`, by one
//! zero-padded inverse FFT of length `L` per axis; the sampled field is
//! periodic with period `1/δ`, which is exact for atoms on the `δ` lattice.

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fftnd::{fast_len, fft_nd, to_padded};
use crate::grid::{check_budget, for_each_in_box, Coord, MAX_DIM};
use crate::measure::{
    ball_kernel, multiplicative_convolve, projected_sup, smooth, symmetrize, GridMeasure,
};

/// Largest multiplicative power handled by the decay and σ experiments.
pub const MAX_POWER: usize = 6;

/// Relative Lipschitz slack accepted before the node grid is refined.
const SLACK_FRACTION: f64 = 0.1;

/// Transform samples on the nodes `j s`, `|j_i| ≤ half`, row-major.
#[derive(Debug, Clone)]
pub struct FrequencyField {
    pub n: usize,
    pub step: f64,
    pub half: i64,
    pub values: Vec<Complex64>,
    pub mass: f64,
    /// Center of the source support box; interpolation removes its phase first.
    pub center: Vec<f64>,
}

impl FrequencyField {
    fn side(&self) -> usize {
        (2 * self.half + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_freq(&self) -> f64 {
        self.half as f64 * self.step
    }

    pub fn index_of(&self, j: &[i64]) -> Option<usize> {
        let side = self.side();
        let mut idx = 0usize;
        for &x in &j[..self.n] {
            if x.abs() > self.half {
                return None;
            }
            idx = idx * side + (x + self.half) as usize;
        }
        Some(idx)
    }

    pub fn node_index(&self, mut idx: usize) -> Coord {
        let side = self.side();
        let mut j = [0i64; MAX_DIM];
        for i in (0..self.n).rev() {
            j[i] = (idx % side) as i64 - self.half;
            idx /= side;
        }
        j
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        let j = self.node_index(idx);
        j[..self.n].iter().map(|&x| x as f64 * self.step).collect()
    }

    pub fn at(&self, j: &[i64]) -> Option<Complex64> {
        self.index_of(j).map(|i| self.values[i])
    }

    fn phase(&self, xi: &[f64]) -> Complex64 {
        let t: f64 = xi.iter().zip(&self.center).map(|(a, b)| a * b).sum();
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t)
    }

    /// Multilinear interpolation at an arbitrary frequency inside the node box,
    /// applied to `μ̂(ξ) e^{-2πi⟨ξ, x₀⟩}` with `x₀` the support center.
    pub fn interpolate(&self, xi: &[f64]) -> Option<Complex64> {
        let n = self.n;
        let mut base = [0i64; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for i in 0..n {
            let t = xi[i] / self.step;
            let f = t.floor();
            base[i] = f as i64;
            frac[i] = t - f;
            if base[i] < -self.half || base[i] + 1 > self.half {
                return None;
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..(1usize << n) {
            let mut j = base;
            let mut w = 1.0;
            for i in 0..n {
                if corner >> i & 1 == 1 {
                    j[i] += 1;
                    w *= frac[i];
                } else {
                    w *= 1.0 - frac[i];
                }
            }
            if w != 0.0 {
                let node: Vec<f64> = j[..n].iter().map(|&x| x as f64 * self.step).collect();
                acc += self.values[self.index_of(&j[..n]).unwrap()] * self.phase(&node).conj() * w;
            }
        }
        Some(acc * self.phase(xi))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Riemann sum of `f(ξ, μ̂(ξ))` over the nodes with `‖ξ‖ ≤ radius`.
    pub fn ball_sum(&self, radius: f64, f: impl Fn(Complex64) -> f64 + Sync) -> f64 {
        let r2 = radius * radius * (1.0 + 1e-12);
        let cell = self.step.powi(self.n as i32);
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let xi = self.node(i);
                if xi.iter().map(|x| x * x).sum::<f64>() <= r2 {
                    f(self.values[i])
                } else {
                    0.0
                }
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
            * cell
    }
}

/// DFT of the weight field over one full period: `(L, values on j ∈ [0, L)ⁿ)`.
/// Values carry the origin phase so that entry `j` is `μ̂(j / (Lδ))`.
fn period_transform(nu: &GridMeasure, min_len: usize) -> Result<(usize, Vec<Complex64>)> {
    let n = nu.n();
    let dims = nu.grid().dims();
    let longest = dims.iter().copied().max().unwrap_or(1) as usize;
    let l = fast_len(min_len.max(longest));
    let shape = vec![l; n];
    check_budget((l as u128).pow(n as u32) * 2)?;
    let f = nu.weight_field()?;
    let mut data = to_padded(&f, &shape);
    fft_nd(&mut data, &shape, true);
    let lo: Vec<i64> = nu.grid().lo().to_vec();
    let li = l as i128;
    data.par_iter_mut().enumerate().for_each(|(idx, v)| {
        let mut rem = idx;
        let mut r: i128 = 0;
        for ax in (0..n).rev() {
            let j = (rem % l) as i128;
            rem /= l;
            r += j * lo[ax] as i128;
        }
        let ph = 2.0 * std::f64::consts::PI * (r.rem_euclid(li) as f64) / l as f64;
        *v *= Complex64::from_polar(1.0, ph);
    });
    Ok((l, data))
}

fn period_lookup(l: usize, data: &[Complex64], j: &[i64]) -> Complex64 {
    let mut idx = 0usize;
    for &x in j {
        idx = idx * l + x.rem_euclid(l as i64) as usize;
    }
    data[idx]
}

/// `μ̂` on the nodes `|ξ_i| ≤ max_freq`, spacing at most `step_max` (default `1/(4 diam)`).
pub fn fourier_transform(nu: &GridMeasure, max_freq: f64) -> Result<FrequencyField> {
    fourier_transform_with(nu, max_freq, None)
}

pub fn fourier_transform_with(nu: &GridMeasure, max_freq: f64, step_max: Option<f64>) -> Result<FrequencyField> {
    let d = nu.delta();
    if max_freq > 2.0 / d * (1.0 + 1e-12) {
        return Err(LabError::domain(format!("max frequency {max_freq} beyond 2/δ = {}", 2.0 / d)));
    }
    let step_max = step_max.unwrap_or(1.0 / (4.0 * nu.diameter().max(d)));
    let min_len = (1.0 / (step_max * d)).ceil() as usize;
    let longest = nu.grid().dims().iter().copied().max().unwrap_or(1) as usize;
    let (l, data) = period_transform(nu, min_len.max(2 * longest))?;
    let step = 1.0 / (l as f64 * d);
    let half = (max_freq / step).floor() as i64;
    let n = nu.n();
    let side = (2 * half + 1) as u128;
    check_budget(side.pow(n as u32))?;
    let center = nu.grid().box_lo().iter().zip(nu.grid().box_hi()).map(|(a, b)| (a + b) / 2.0).collect();
    let mut field = FrequencyField { n, step, half, values: Vec::new(), mass: nu.mass(), center };
    let total = side.pow(n as u32) as usize;
    field.values = (0..total)
        .into_par_iter()
        .map(|i| {
            let j = field.node_index(i);
            period_lookup(l, &data, &j[..n])
        })
        .collect();
    Ok(field)
}

/// `μ̂(ξ)` at one frequency by direct summation.
pub fn transform_at(mu: &GridMeasure, xi: &[f64]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (x, w) in mu.centers().iter().zip(mu.weights()) {
        let ph = 2.0 * std::f64::consts::PI * x.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
        s += Complex64::from_polar(*w, ph);
    }
    s
}

/// `Σ w² / δⁿ` against the full-period frequency energy; relative gap.
pub fn plancherel_gap(nu: &GridMeasure) -> Result<f64> {
    let n = nu.n();
    let (l, data) = period_transform(nu, 1)?;
    let freq: f64 = data.iter().map(|v| v.norm_sqr()).sum::<f64>() / (l as f64).powi(n as i32);
    let space: f64 = nu.weights().iter().map(|w| w * w).sum();
    Ok((freq - space).abs() / space)
}

/// `μ_k`: k-fold multiplicative convolution.
pub fn multiplicative_power(mu: &GridMeasure, k: usize) -> Result<GridMeasure> {
    if k == 0 {
        return GridMeasure::point_mass(mu.n(), mu.m(), &vec![1.0; mu.n()]);
    }
    let mut acc = mu.clone();
    for _ in 1..k {
        acc = multiplicative_convolve(&acc, mu)?;
    }
    Ok(acc)
}

fn in_unit_box(mu: &GridMeasure) -> bool {
    mu.centers().iter().all(|x| x.iter().all(|&v| (0.5..=1.0).contains(&v)))
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub k: usize,
    pub delta: f64,
    pub annulus: (f64, f64),
    pub sup: f64,
    pub argmax: Vec<f64>,
    /// `-log(sup) / log(1/δ)`.
    pub eps1_hat: f64,
    pub node_step: f64,
    /// Bound on how much the true sup can exceed the node max.
    pub lipschitz_slack: f64,
    pub refined: bool,
    /// Support left `[1/2, 1]ⁿ` (relaxed mode).
    pub relaxed: bool,
}

impl DecayReport {
    pub fn csv_header() -> &'static str {
        "k,delta,sup,eps1_hat,node_step,lipschitz_slack,refined,relaxed,argmax"
    }

    pub fn csv_row(&self) -> String {
        let a: Vec<String> = self.argmax.iter().map(|x| format!("{x:.6}")).collect();
        format!(
            "{},{:.10e},{:.10e},{:.10e},{:.6e},{:.6e},{},{},{}",
            self.k,
            self.delta,
            self.sup,
            self.eps1_hat,
            self.node_step,
            self.lipschitz_slack,
            self.refined,
            self.relaxed,
            a.join(" ")
        )
    }
}

/// Sup of `|μ̂|` over the annulus `δ⁻¹/2 ≤ ‖ξ‖ ≤ δ⁻¹` for an already-built measure.
pub fn annulus_sup(mu: &GridMeasure, k: usize, delta: f64, relaxed: bool) -> Result<DecayReport> {
    let (lo, hi) = (0.5 / delta, 1.0 / delta);
    let radius = mu.diameter() / 2.0;
    let lip = 2.0 * std::f64::consts::PI * radius.max(mu.delta()) * mu.mass();
    let sqrt_n = (mu.n() as f64).sqrt();
    let scan = |step: f64| -> Result<(f64, Vec<f64>, f64)> {
        let f = fourier_transform_with(mu, hi, Some(step))?;
        let (best, idx) = (0..f.len())
            .into_par_iter()
            .filter_map(|i| {
                let xi = f.node(i);
                let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                (r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)).then(|| (f.values[i].norm(), i))
            })
            .reduce(|| (-1.0, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        if idx == usize::MAX {
            return Err(LabError::domain("annulus contains no frequency nodes"));
        }
        Ok((best, f.node(idx), f.step))
    };
    let mut found = scan(1.0 / (16.0 * radius.max(mu.delta())))?;
    let mut refined = false;
    if lip * found.2 * sqrt_n / 2.0 > SLACK_FRACTION * found.0 {
        // a finer node grid that does not fit the budget leaves the coarse scan standing
        match scan(found.2 / 4.0) {
            Ok(fine) => {
                found = fine;
                refined = true;
            }
            Err(LabError::Budget { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let (sup, argmax, node_step) = found;
    Ok(DecayReport {
        k,
        delta,
        annulus: (lo, hi),
        sup,
        argmax,
        eps1_hat: -sup.ln() / (1.0 / delta).ln(),
        node_step,
        lipschitz_slack: lip * node_step * sqrt_n / 2.0,
        refined,
        relaxed,
    })
}

/// Annulus decay of `μ_k`. In strict mode the support must lie in `[1/2, 1]ⁿ`.
pub fn decay_sup(mu: &GridMeasure, k: usize, delta: f64, strict: bool) -> Result<DecayReport> {
    if k == 0 || k > MAX_POWER {
        return Err(LabError::domain(format!("power {k} outside 1..={MAX_POWER}")));
    }
    let relaxed = !in_unit_box(mu);
    if relaxed && strict {
        return Err(LabError::domain("support leaves [1/2, 1]^n; use relaxed mode"));
    }
    let muk = multiplicative_power(mu, k)?;
    annulus_sup(&muk, k, delta, relaxed)
}

/// Annulus decay of `λ₁ ⊙ ⋯ ⊙ λ_k` (left fold).
pub fn multi_measure_decay(lambdas: &[GridMeasure], delta: f64, strict: bool) -> Result<DecayReport> {
    if lambdas.is_empty() {
        return Err(LabError::domain("no measures"));
    }
    if lambdas.iter().any(|l| l.mass() > 1.0 + 1e-9) {
        return Err(LabError::domain("mass above one"));
    }
    let relaxed = lambdas.iter().any(|l| !in_unit_box(l));
    if relaxed && strict {
        return Err(LabError::domain("support leaves [1/2, 1]^n; use relaxed mode"));
    }
    let mut acc = lambdas[0].clone();
    for l in &lambdas[1..] {
        acc = multiplicative_convolve(&acc, l)?;
    }
    annulus_sup(&acc, lambdas.len(), delta, relaxed)
}

/// `log ∫_{B(0, 2/δ)} |f̂|^{2r} / |log δ|` for an already-built measure.
pub fn sigma_of(f: &GridMeasure, r: usize, delta: f64) -> Result<f64> {
    let rmax = 2.0 / delta;
    if rmax > 0.5 / f.delta() {
        return Err(LabError::domain("grid too coarse for the frequency ball B(0, 2/δ)"));
    }
    // |f̂|^{2r} is the transform of a measure of diameter 2r·diam
    let step = 1.0 / (4.0 * r as f64 * f.diameter().max(f.delta()));
    let field = fourier_transform_with(f, rmax, Some(step))?;
    let e = 2 * r as i32;
    let integral = field.ball_sum(rmax, |v| v.norm().powi(e));
    Ok(integral.ln() / (1.0 / delta).ln())
}

/// `σ_{k,r}` of the grid measure.
pub fn sigma_exponent(mu: &GridMeasure, k: usize, r: usize, delta: f64) -> Result<f64> {
    sigma_of(&multiplicative_power(mu, k)?, r, delta)
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaTable {
    pub delta: f64,
    pub rows: Vec<(usize, usize, f64)>,
}

impl SigmaTable {
    pub fn csv(&self) -> String {
        let mut s = String::from("k,r,delta,sigma\n");
        for (k, r, v) in &self.rows {
            s.push_str(&format!("{k},{r},{:.10e},{:.10e}\n", self.delta, v));
        }
        s
    }
}

pub fn sigma_table(mu: &GridMeasure, ks: &[usize], rs: &[usize], delta: f64) -> Result<SigmaTable> {
    let mut rows = Vec::new();
    for &k in ks {
        let muk = multiplicative_power(mu, k)?;
        for &r in rs {
            rows.push((k, r, sigma_of(&muk, r, delta)?));
        }
    }
    Ok(SigmaTable { delta, rows })
}

/// `r' = 8r² + 4r`.
pub fn r_prime(r: u64) -> u64 {
    8 * r * r + 4 * r
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaDecrement {
    pub k: usize,
    pub r: usize,
    pub r_prime: usize,
    /// `σ_{k,2r}`.
    pub sigma_before: f64,
    /// `σ_{2k,r'}`.
    pub sigma_after: f64,
    pub decrement: f64,
    /// `σ_{k,r}`, for reference; `σ_{k,2r} ≤ σ_{k,r}`.
    pub sigma_kr: f64,
}

pub fn sigma_decrement_experiment(mu: &GridMeasure, k: usize, r: usize, delta: f64) -> Result<SigmaDecrement> {
    if 2 * k > MAX_POWER {
        return Err(LabError::domain("2k exceeds the supported power"));
    }
    let rp = r_prime(r as u64) as usize;
    let muk = multiplicative_power(mu, k)?;
    let mu2k = multiplicative_power(mu, 2 * k)?;
    let before = sigma_of(&muk, 2 * r, delta)?;
    let after = sigma_of(&mu2k, rp, delta)?;
    Ok(SigmaDecrement {
        k,
        r,
        r_prime: rp,
        sigma_before: before,
        sigma_after: after,
        decrement: before - after,
        sigma_kr: sigma_of(&muk, r, delta)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    /// `sup over annulus nodes of ∫ |ν̂(xξ)| dμ(x)`.
    pub lhs: f64,
    pub xi_star: Vec<f64>,
    pub bound: f64,
    /// `lhs / bound`, the implied constant.
    pub constant: f64,
    /// `max_j sup_a (π_j)_* μ(B(a, δ))`.
    pub projection_sup: f64,
    pub alpha_ok: bool,
    /// `∫_{B(0, 2/δ)} |ν̂|`.
    pub nu_l1: f64,
    pub beta_ok: bool,
    /// Hypotheses hold and `lhs ≤ constant_cap · bound`.
    pub pass: bool,
}

/// Constant allowed in the regularity-decay comparison.
pub const REGULARITY_CONSTANT: f64 = 16.0;

/// `∫ |ν̂(xξ)| dμ(x)` over annulus frequencies versus `δ^{(α-β)/(n+2)}`.
pub fn regularity_decay_bound(
    mu: &GridMeasure,
    nu: &GridMeasure,
    alpha: f64,
    beta: f64,
    delta: f64,
) -> Result<RegularityReport> {
    let n = mu.n();
    if nu.n() != n {
        return Err(LabError::domain("dimension mismatch"));
    }
    let tau = (alpha - beta) / (n as f64 + 2.0);
    let bound = delta.powf(tau);
    let projection_sup = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            projected_sup(mu, &e, delta, mu.delta().min(delta / 8.0))
        })
        .fold(0.0f64, f64::max);
    let alpha_ok = projection_sup <= delta.powf(alpha) * (1.0 + 1e-9);
    let rmax = 2.0 / delta;
    let field = fourier_transform_with(nu, rmax, Some(1.0 / (32.0 * nu.diameter().max(nu.delta()))))?;
    let nu_l1 = field.ball_sum(rmax, |v| v.norm());
    let beta_ok = nu_l1 <= delta.powf(-beta) * (1.0 + 1e-9);
    let xmax = mu.abs_extent().iter().copied().fold(0.0, f64::max);
    if xmax / delta > field.max_freq() {
        return Err(LabError::domain("support of μ reaches beyond the sampled frequency box"));
    }
    // annulus nodes: all of them in 1D, a bounded deterministic subset otherwise
    let step = if n == 1 { 0.25 } else { 1.0 };
    let (lo, hi) = (0.5 / delta, 1.0 / delta);
    let half = (hi / step).floor() as i64;
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    for_each_in_box(&vec![-half; n], &vec![half; n], |j| {
        let xi: Vec<f64> = j[..n].iter().map(|&x| x as f64 * step).collect();
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r >= lo && r <= hi {
            nodes.push(xi);
        }
    });
    if nodes.len() > 4096 && n > 1 {
        let stride = nodes.len() / 4096;
        nodes = nodes.into_iter().step_by(stride.max(1)).collect();
    }
    let centers = mu.centers();
    let w = mu.weights();
    let (lhs, at) = nodes
        .par_iter()
        .enumerate()
        .map(|(i, xi)| {
            let v: f64 = centers
                .iter()
                .zip(w)
                .map(|(x, wx)| {
                    let y: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a * b).collect();
                    wx * field.interpolate(&y).map(|c| c.norm()).unwrap_or(0.0)
                })
                .sum();
            (v, i)
        })
        .reduce(|| (-1.0, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let constant = lhs / bound;
    Ok(RegularityReport {
        delta,
        alpha,
        beta,
        tau,
        lhs,
        xi_star: nodes.get(at).cloned().unwrap_or_default(),
        bound,
        constant,
        projection_sup,
        alpha_ok,
        nu_l1,
        beta_ok,
        pass: alpha_ok && beta_ok && alpha > beta && constant <= REGULARITY_CONSTANT,
    })
}

/// `τ = (α - β)/(n + 2)`.
pub fn tau_exponent(alpha: Ratio<i64>, beta: Ratio<i64>, n: i64) -> Ratio<i64> {
    (alpha - beta) / Ratio::from_integer(n + 2)
}

#[derive(Debug, Clone, Serialize)]
pub struct Schedule {
    pub kappa0: Ratio<i64>,
    pub kappa1: Ratio<i64>,
    pub eps: Ratio<i64>,
    /// `r, r', r'', …`.
    pub r_chain: Vec<u64>,
    /// `(κ₀ - ε - κ₁) / (4(n+2)r)`.
    pub eps1: Ratio<i64>,
    /// `κ₁ / (4(n+2)r)`.
    pub eps1_floor: Ratio<i64>,
    /// `min{ε₂, ε₂κ₀, 1} / (10k)`.
    pub eps3: Ratio<i64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ScheduleInput {
    pub kappa0: Ratio<i64>,
    pub n: i64,
    pub r: u64,
    pub eps_measured: Ratio<i64>,
    pub eps2: Ratio<i64>,
    pub k: i64,
    pub chain_len: usize,
}

/// Exponent bookkeeping of the decay argument, in exact rationals.
pub fn schedule_exponents(inp: &ScheduleInput) -> Result<Schedule> {
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    if inp.kappa0 <= zero || inp.kappa0 > Ratio::from_integer(inp.n) {
        return Err(LabError::domain("kappa0 must lie in (0, n]"));
    }
    if inp.r == 0 || inp.k <= 0 || inp.n <= 0 || inp.eps_measured < zero || inp.eps2 <= zero {
        return Err(LabError::domain("schedule inputs out of range"));
    }
    let kappa1 = inp.kappa0 / 4;
    let eps = inp.eps_measured.min(inp.kappa0) / 2;
    let mut r_chain = vec![inp.r];
    for _ in 1..inp.chain_len.max(1) {
        let last = *r_chain.last().unwrap();
        r_chain.push(r_prime(last));
    }
    let denom = Ratio::from_integer(4 * (inp.n + 2) * inp.r as i64);
    let eps1 = (inp.kappa0 - eps - kappa1) / denom;
    let eps1_floor = kappa1 / denom;
    let eps3 = inp.eps2.min(inp.eps2 * inp.kappa0).min(one) / Ratio::from_integer(10 * inp.k);
    Ok(Schedule { kappa0: inp.kappa0, kappa1, eps, r_chain, eps1, eps1_floor, eps3 })
}

#[derive(Debug, Clone, Serialize)]
pub struct NudelReport {
    pub delta: f64,
    pub delta1: f64,
    pub c: f64,
    /// `‖ν_{δ₁}‖₂²`, space side.
    pub smoothed_l2: f64,
    /// `∫ |ν̂|² |P̂_{δ₁}|²` over a full period.
    pub weighted_freq: f64,
    pub plancherel_gap: f64,
    /// `∫_{B(0, 2/δ)} |ν̂|²`.
    pub ball_integral: f64,
    /// `smoothed_l2 / ball_integral`.
    pub ratio: f64,
}

/// Exact Plancherel identity for `ν_{δ₁}` and the measured two-sided comparison.
pub fn nudel_check(nu: &GridMeasure, delta: f64, c: f64) -> Result<NudelReport> {
    if c <= 8.0 {
        return Err(LabError::domain("C must exceed 8"));
    }
    let radius = nu.centers().iter().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    if radius > c {
        return Err(LabError::domain(format!("support reaches radius {radius} > C = {c}")));
    }
    let n = nu.n();
    let delta1 = 2.0 * delta / c;
    let sm = smooth(nu, delta1)?;
    let smoothed_l2 = sm.l2_sq();
    let kernel = ball_kernel(n, nu.m(), delta1)?;
    let kmax = kernel.iter().map(|(k, _)| k[0].abs()).max().unwrap_or(0) as usize;
    let longest = nu.grid().dims().iter().copied().max().unwrap_or(1) as usize;
    let fine = (4.0 * nu.diameter().max(nu.delta()) / nu.delta()).ceil() as usize;
    let (l, data) = period_transform(nu, (longest + 2 * kmax + 1).max(fine))?;
    let kmeas = GridMeasure::from_entries(n, nu.m(), kernel)?;
    let kfield = {
        let shape = vec![l; n];
        let f = kmeas.weight_field()?;
        let mut d = to_padded(&f, &shape);
        fft_nd(&mut d, &shape, true);
        d
    };
    let vol = nu.delta().powi(n as i32);
    let lp = (l as f64).powi(n as i32);
    let weighted_freq: f64 =
        data.iter().zip(&kfield).map(|(a, b)| a.norm_sqr() * b.norm_sqr()).sum::<f64>() / lp / vol;
    let gap = (weighted_freq - smoothed_l2).abs() / smoothed_l2;
    let rmax = 2.0 / delta;
    let step = 1.0 / (l as f64 * nu.delta());
    if rmax > 0.5 / nu.delta() {
        return Err(LabError::domain("grid too coarse for the frequency ball B(0, 2/δ)"));
    }
    let half = (rmax / step).floor() as i64;
    let mut ball = 0.0;
    for_each_in_box(&vec![-half; n], &vec![half; n], |j| {
        let r2: f64 = j[..n].iter().map(|&x| (x as f64 * step).powi(2)).sum();
        if r2 <= rmax * rmax {
            ball += period_lookup(l, &data, &j[..n]).norm_sqr();
        }
    });
    let ball_integral = ball * step.powi(n as i32);
    Ok(NudelReport {
        delta,
        delta1,
        c,
        smoothed_l2,
        weighted_freq,
        plancherel_gap: gap,
        ball_integral,
        ratio: smoothed_l2 / ball_integral,
    })
}

/// `Σ_{S ⊆ [k]} (-1)^{k-|S|} F(𝟙_S)`: the `z₁⋯z_k` coefficient of a polynomial of degree ≤ k.
pub fn multilinear_coefficient(f: impl Fn(&[f64]) -> Complex64, k: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut z = vec![0.0; k];
    for mask in 0u64..(1u64 << k) {
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = (mask >> i & 1) as f64;
        }
        let sign = if (k as u32 - mask.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
        acc += f(&z) * sign;
    }
    acc
}

/// `∫ e^{2πi⟨ξ, x₁⋯x_k⟩} dλ₁(x₁)⋯dλ_k(x_k)` by direct summation over atoms (no rebinning).
pub fn mixed_integral(lambdas: &[&GridMeasure], xi: &[f64]) -> Complex64 {
    fn rec(ls: &[(Vec<Vec<f64>>, Vec<f64>)], prod: &mut Vec<f64>, w: f64, xi: &[f64]) -> Complex64 {
        match ls.split_first() {
            None => {
                let ph = 2.0 * std::f64::consts::PI * prod.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
                Complex64::from_polar(w, ph)
            }
            Some(((cs, ws), rest)) => {
                let mut s = Complex64::new(0.0, 0.0);
                let saved = prod.clone();
                for (c, wc) in cs.iter().zip(ws) {
                    for (p, x) in prod.iter_mut().zip(c) {
                        *p *= x;
                    }
                    s += rec(rest, prod, w * wc, xi);
                    prod.copy_from_slice(&saved);
                }
                s
            }
        }
    }
    let n = xi.len();
    let ls: Vec<(Vec<Vec<f64>>, Vec<f64>)> = lambdas.iter().map(|l| (l.centers(), l.weights().to_vec())).collect();
    rec(&ls, &mut vec![1.0; n], 1.0, xi)
}

#[derive(Debug, Clone)]
pub struct RescaledPiece {
    /// Sign of each coordinate of the orthant.
    pub orthant: Vec<i8>,
    /// Dyadic exponents: the piece came from `∏ ±[2^{l_i - 1}, 2^{l_i})`.
    pub l: Vec<i32>,
    /// Restriction rescaled by `2^{-l}` onto `[1/2, 1)ⁿ`.
    pub piece: GridMeasure,
}

/// Split by orthant and dyadic shell per coordinate, rescaling each part to `[1/2, 1)ⁿ`.
pub fn dyadic_rescale_decompose(lambda: &GridMeasure, eps3: f64, tau: f64) -> Result<Vec<RescaledPiece>> {
    let n = lambda.n();
    let m = lambda.m() as i32;
    let (lo, hi) = (tau.powf(-eps3), tau.powf(eps3));
    for x in lambda.centers() {
        if x.iter().any(|v| v.abs() < lo * (1.0 - 1e-12) || v.abs() > hi * (1.0 + 1e-12)) {
            return Err(LabError::domain(format!("support leaves the shell [{lo}, {hi}] in some coordinate")));
        }
    }
    let mut groups: std::collections::BTreeMap<(Vec<i8>, Vec<i32>), Vec<(Coord, f64)>> = Default::default();
    for (c, w) in lambda.entries() {
        let mut sign = vec![0i8; n];
        let mut l = vec![0i32; n];
        let mut y = [0i64; MAX_DIM];
        for i in 0..n {
            let a = c[i].unsigned_abs();
            sign[i] = if c[i] > 0 { 1 } else { -1 };
            // |x| = a 2^{-m} ∈ [2^{l-1}, 2^l)
            let msb = 63 - a.leading_zeros() as i32;
            l[i] = msb - m + 1;
            y[i] = if l[i] > 0 {
                crate::measure::round_shift(a as i128, l[i] as u32)
            } else {
                (a << (-l[i])) as i64
            };
        }
        groups.entry((sign, l)).or_default().push((y, w));
    }
    groups
        .into_iter()
        .map(|((orthant, l), e)| {
            Ok(RescaledPiece { orthant, l, piece: GridMeasure::from_entries(n, m as u32, e)? })
        })
        .collect()
}

/// Upper bound on the number of pieces: `(2ε₃ log₂ τ + 2)ⁿ 2ⁿ`.
pub fn piece_bound(n: usize, eps3: f64, tau: f64) -> f64 {
    ((2.0 * eps3 * tau.log2() + 2.0) * 2.0).powi(n as i32)
}

/// `½((μ₂ * μ₂⁻)^{(r)} + (μ * μ⁻)^{(r)})` for `μ` and its square `μ₂`.
pub fn flattening_measure(mu: &GridMeasure, r: usize) -> Result<GridMeasure> {
    let mu2 = multiplicative_convolve(mu, mu)?;
    symmetrize(&mu2, r)?.combine(0.5, &symmetrize(mu, r)?, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{scale_inv, GridSet};

    fn uniform(m: u32, lo: f64, hi: f64) -> GridMeasure {
        GridMeasure::uniform_on(&GridSet::half_open_box(1, m, &[lo], &[hi]).unwrap()).unwrap()
    }

    #[test]
    fn point_mass_transform_is_one() {
        let p = GridMeasure::point_mass(1, 8, &[0.0]).unwrap();
        let f = fourier_transform(&p, 100.0).unwrap();
        assert!(f.values.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn uniform_transform_is_sinc() {
        let m = 12;
        let u = uniform(m, 0.0, 1.0);
        let f = fourier_transform(&u, 50.0).unwrap();
        let d = 1.0 / scale_inv(m);
        for i in 0..f.len() {
            let xi = f.node(i)[0];
            let want = if xi == 0.0 { 1.0 } else { (std::f64::consts::PI * xi).sin().abs() / (std::f64::consts::PI * xi).abs() };
            // cell-center sampling of the interval: |Σ| = |sin(πξ)/(N sin(πξδ))|
            assert!((f.values[i].norm() - want).abs() < 1e-4 + 2.0 * d, "{xi}");
        }
        let g = fourier_transform_with(&u, 50.0, Some(1.0 / 64.0)).unwrap();
        for xi in [0.37, 3.3, 17.91] {
            let node = g.interpolate(&[xi]).unwrap();
            assert!((transform_at(&u, &[xi]) - node).norm() < 1e-3, "{xi}");
        }
    }

    #[test]
    fn field_matches_direct_sum_with_offset() {
        let s = GridSet::from_points(2, 5, &[[0.5, -0.25], [0.75, 1.0], [-0.125, 0.0625]]).unwrap();
        let mu = GridMeasure::uniform_on(&s).unwrap();
        let f = fourier_transform(&mu, 20.0).unwrap();
        for i in (0..f.len()).step_by(37) {
            let xi = f.node(i);
            assert!((f.values[i] - transform_at(&mu, &xi)).norm() < 1e-10);
        }
    }

    #[test]
    fn plancherel_is_exact() {
        let u = uniform(9, 0.25, 0.8);
        assert!(plancherel_gap(&u).unwrap() < 1e-10);
    }

    #[test]
    fn point_mass_sigma_is_dimension_plus_ball() {
        let m = 8;
        let p = GridMeasure::point_mass(1, m + 4, &[1.0]).unwrap();
        let delta = 1.0 / scale_inv(m);
        let s = sigma_exponent(&p, 1, 1, delta).unwrap();
        let want = (4.0 / delta).ln() / (1.0 / delta).ln();
        assert!((s - want).abs() < 1e-3, "{s} vs {want}");
    }

    #[test]
    fn schedule_examples() {
        let inp = ScheduleInput {
            kappa0: Ratio::new(2, 5),
            n: 1,
            r: 1,
            eps_measured: Ratio::new(1, 10),
            eps2: Ratio::new(1, 10),
            k: 3,
            chain_len: 3,
        };
        let s = schedule_exponents(&inp).unwrap();
        assert_eq!(s.kappa1, Ratio::new(1, 10));
        assert_eq!(s.r_chain, vec![1, 12, 1200]);
        assert_eq!(s.eps3, Ratio::new(4, 100) / 30);
        assert_eq!(tau_exponent(Ratio::from_integer(1), Ratio::new(2, 5), 1), Ratio::new(1, 5));
        assert!(s.eps1 >= s.eps1_floor);
    }

    #[test]
    fn coefficient_extraction() {
        let g = Complex64::new(2.5, -1.0);
        assert_eq!(multilinear_coefficient(|z| g * z[0], 1), g);
        let c = multilinear_coefficient(|z| Complex64::new(3.0 * z[0] * z[1] + z[0] * z[0], 0.0), 2);
        assert!((c.re - 3.0).abs() < 1e-15 && c.im == 0.0);
    }

    #[test]
    fn rescale_uniform_quarter() {
        let u = uniform(10, 0.25, 1.0);
        let pieces = dyadic_rescale_decompose(&u, 0.5, 16.0).unwrap();
        assert_eq!(pieces.len(), 2);
        assert!((pieces[0].piece.mass() - 1.0 / 3.0).abs() < 1e-12);
        assert!((pieces[1].piece.mass() - 2.0 / 3.0).abs() < 1e-12);
        for p in &pieces {
            assert!(p.piece.centers().iter().all(|x| x[0] >= 0.5 && x[0] < 1.0));
        }
        let v = uniform(10, 0.5, 1.0);
        let one = dyadic_rescale_decompose(&v, 0.5, 16.0).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].piece, v);
    }
}
