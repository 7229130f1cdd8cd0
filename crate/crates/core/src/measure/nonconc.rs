//! Projective non-concentration diagnostics.
//!
//! For each direction `v` of a deterministic net the measure is projected to
//! the line, binned at resolution `h`, and the heaviest window covering any
//! interval of length `2ρ` is found by prefix sums. Windows are `⌈2ρ'/h⌉ + 1`
//! bins wide with `ρ' = ρ + slack`, so every tabled value bounds the true
//! sup over all of `S^{n-1}` from above (the net error is folded into `ρ`).

use rayon::prelude::*;
use serde::Serialize;

use super::GridMeasure;
use crate::error::{LabError, Result};
use crate::grid::GridSet;

/// Number of probe directions used to estimate the covering radius of a net.
const PROBES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonConWitness {
    pub direction: Vec<f64>,
    /// Left edge of the heaviest window.
    pub left: f64,
    /// Window length (`bins * h`).
    pub width: f64,
    center: Vec<f64>,
    origin: f64,
    h: f64,
    start: i64,
    bins: i64,
}

impl NonConWitness {
    /// Mass of the witness window, recomputed from scratch.
    pub fn recheck(&self, mu: &GridMeasure) -> f64 {
        let mut s = 0.0;
        for (x, w) in mu.centers().iter().zip(mu.weights()) {
            let y: Vec<f64> = x.iter().zip(&self.center).map(|(a, m)| a - m).collect();
            let b = bin_of(dot(&self.direction, &y), self.origin, self.h);
            if b >= self.start && b < self.start + self.bins {
                s += w;
            }
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NonConReport {
    pub scales: Vec<f64>,
    pub sup_mass: Vec<f64>,
    pub kappa_hat: f64,
    /// Smallest `ε ≥ 0` with `sup_mass ≤ δ^{-ε} ρ^{κ̂}` on the table, `δ = min ρ`.
    pub eps_hat: f64,
    pub witnesses: Vec<NonConWitness>,
    pub direction_count: usize,
    /// Estimated covering angle of the direction net.
    pub net_angle: f64,
    /// Amount added to every `ρ` for the net error.
    pub net_slack: f64,
    pub resolution: f64,
    pub directions: Vec<Vec<f64>>,
    /// `per_direction[d][i]`: tabled sup for direction `d` at scale `i`.
    pub per_direction: Vec<Vec<f64>>,
}

impl NonConReport {
    pub fn worst_direction(&self, i: usize) -> &[f64] {
        &self.witnesses[i].direction
    }

    pub fn worst_offset(&self, i: usize) -> f64 {
        self.witnesses[i].left
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.scales
            .iter()
            .zip(&self.sup_mass)
            .zip(&self.witnesses)
            .map(|((r, s), w)| {
                let dir: Vec<String> = w.direction.iter().map(|x| format!("{x:.6}")).collect();
                format!("{r:.10e},{s:.10e},{},{:.10e},{:.10e}", dir.join(" "), w.left, w.width)
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bin_of(p: f64, origin: f64, h: f64) -> i64 {
    ((p - origin) / h).floor() as i64
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let r = dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / r).collect()
}

/// Golden-ratio point set of `count` directions on the upper half of `S^{n-1}`.
fn spiral(n: usize, count: usize) -> Vec<Vec<f64>> {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    match n {
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|j| {
                let t = std::f64::consts::PI * j as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => (0..count)
            .map(|i| {
                let z = 1.0 - (i as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = 2.0 * std::f64::consts::PI * i as f64 / golden;
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect(),
        _ => {
            // uniform quaternions from a Kronecker sequence in [0,1)^3
            let a = [0.819_172_513_396_164_4, 0.671_043_606_703_789_2, 0.549_700_477_901_970_2];
            (0..count)
                .map(|i| {
                    let u: Vec<f64> = a.iter().map(|x| (0.5 + x * i as f64).fract()).collect();
                    let (s, t) = ((1.0 - u[0]).sqrt(), u[0].sqrt());
                    let (p, q) = (2.0 * std::f64::consts::PI * u[1], 2.0 * std::f64::consts::PI * u[2]);
                    vec![s * p.sin(), s * p.cos(), t * q.sin(), t * q.cos()]
                })
                .collect()
        }
    }
}

/// Deterministic direction net (modulo `v ~ -v`) containing every `±e_i`.
/// Returns the directions and an estimate of the covering angle.
pub fn direction_net(n: usize, count: usize) -> (Vec<Vec<f64>>, f64) {
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    if n == 1 {
        return (dirs, 0.0);
    }
    for v in spiral(n, count) {
        let v = unit(v);
        if dirs.iter().all(|d| dot(d, &v).abs() < 1.0 - 1e-12) {
            dirs.push(v);
        }
    }
    let angle = if n == 2 {
        let mut ts: Vec<f64> = dirs
            .iter()
            .map(|d| d[1].atan2(d[0]).rem_euclid(std::f64::consts::PI))
            .collect();
        ts.sort_by(f64::total_cmp);
        let mut gap = ts[0] + std::f64::consts::PI - ts[ts.len() - 1];
        for w in ts.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        gap / 2.0
    } else {
        // probe with a denser net of the same family, offset so it is distinct
        let probes: Vec<Vec<f64>> = spiral(n, PROBES + 1).into_iter().skip(1).map(unit).collect();
        probes
            .par_iter()
            .map(|p| {
                let best = dirs.iter().map(|d| dot(d, p).abs()).fold(0.0f64, f64::max);
                best.min(1.0).acos()
            })
            .reduce(|| 0.0, f64::max)
    };
    (dirs, angle)
}

/// Heaviest window of `bins` consecutive bins for one direction.
/// Returns `(mass, start_bin)`.
fn window_sup(hist: &[f64], bins: usize) -> (f64, i64) {
    if bins >= hist.len() {
        return (hist.iter().sum(), 0);
    }
    let mut prefix = Vec::with_capacity(hist.len() + 1);
    prefix.push(0.0);
    let mut s = 0.0;
    for v in hist {
        s += v;
        prefix.push(s);
    }
    let mut best = (f64::NEG_INFINITY, 0i64);
    for i in 0..=hist.len() - bins {
        let w = prefix[i + bins] - prefix[i];
        if w > best.0 {
            best = (w, i as i64);
        }
    }
    best
}

struct Projection {
    origin: f64,
    hist: Vec<f64>,
}

fn project(mu: &GridMeasure, centers: &[Vec<f64>], v: &[f64], h: f64) -> Projection {
    let ps: Vec<f64> = centers.iter().map(|x| dot(v, x)).collect();
    let lo = ps.iter().copied().fold(f64::INFINITY, f64::min);
    let origin = lo - 0.5 * h;
    let hi = ps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let len = bin_of(hi, origin, h) as usize + 1;
    let mut hist = vec![0.0; len];
    for (p, w) in ps.iter().zip(mu.weights()) {
        hist[bin_of(*p, origin, h) as usize] += w;
    }
    Projection { origin, hist }
}

fn bins_for(rho: f64, h: f64) -> usize {
    (2.0 * rho / h).ceil() as usize + 1
}

/// Histogram sup of `(π_v)_* μ` over windows of length `2ρ` at resolution `h`.
/// Lies between the true sup at `ρ` and the true sup at `ρ + h`.
pub fn projected_sup(mu: &GridMeasure, v: &[f64], rho: f64, h: f64) -> f64 {
    let centers = mu.centers();
    let v = unit(v.to_vec());
    let p = project(mu, &centers, &v, h);
    window_sup(&p.hist, bins_for(rho, h)).0
}

/// Sup-mass table `ρ ↦ sup_{a,v} (π_v)_*μ(B(a,ρ))` with slope and excess fits.
pub fn projective_nonconcentration(mu: &GridMeasure, rhos: &[f64], direction_count: usize) -> Result<NonConReport> {
    let n = mu.n();
    let count = direction_count.max(2 * n);
    let (dirs, net_angle) = direction_net(n, count);
    nonconcentration_over(mu, rhos, dirs, net_angle)
}

/// Same engine over an explicit direction set with a known covering angle.
pub(crate) fn nonconcentration_over(
    mu: &GridMeasure,
    rhos: &[f64],
    dirs: Vec<Vec<f64>>,
    net_angle: f64,
) -> Result<NonConReport> {
    if rhos.is_empty() || rhos.iter().any(|r| !(*r > 0.0)) {
        return Err(LabError::domain("scales must be positive"));
    }
    if mu.is_empty() {
        return Err(LabError::domain("empty measure"));
    }
    // projections shift by at most R·|v - v'| with R the box radius about its center
    let radius = mu.diameter() / 2.0;
    let net_slack = radius * 2.0 * (net_angle / 2.0).sin();
    let rho_min = rhos.iter().copied().fold(f64::INFINITY, f64::min);
    let h = rho_min / 8.0;
    let mut centers = mu.centers();
    let mid: Vec<f64> = mu.grid().box_lo().iter().zip(mu.grid().box_hi()).map(|(a, b)| (a + b) / 2.0).collect();
    for c in centers.iter_mut() {
        for (x, m) in c.iter_mut().zip(&mid) {
            *x -= m;
        }
    }
    // per direction: best (mass, start, bins) at every scale
    let per_dir: Vec<(f64, Vec<(f64, i64, usize)>)> = dirs
        .par_iter()
        .map(|v| {
            let p = project(mu, &centers, v, h);
            let rows = rhos
                .iter()
                .map(|&r| {
                    let bins = bins_for(r + net_slack, h);
                    let (s, start) = window_sup(&p.hist, bins);
                    (s, start, bins)
                })
                .collect();
            (p.origin, rows)
        })
        .collect();
    let mut sup_mass = Vec::with_capacity(rhos.len());
    let mut witnesses = Vec::with_capacity(rhos.len());
    for (k, _) in rhos.iter().enumerate() {
        let mut best = 0usize;
        for d in 1..dirs.len() {
            if per_dir[d].1[k].0 > per_dir[best].1[k].0 {
                best = d;
            }
        }
        let (s, start, bins) = per_dir[best].1[k];
        let origin = per_dir[best].0;
        let shift = dot(&dirs[best], &mid);
        sup_mass.push(s);
        witnesses.push(NonConWitness {
            direction: dirs[best].clone(),
            left: origin + shift + start as f64 * h,
            width: bins as f64 * h,
            center: mid.clone(),
            origin,
            h,
            start,
            bins: bins as i64,
        });
    }
    let (kappa_hat, eps_hat) = fit_exponents(rhos, &sup_mass);
    let per_direction = per_dir.iter().map(|(_, rows)| rows.iter().map(|r| r.0).collect()).collect();
    Ok(NonConReport {
        scales: rhos.to_vec(),
        sup_mass,
        kappa_hat,
        eps_hat,
        witnesses,
        direction_count: dirs.len(),
        net_angle,
        net_slack,
        resolution: h,
        directions: dirs,
        per_direction,
    })
}

/// Least-squares slope of `log s` against `log ρ`, and the excess over `ρ^κ`
/// measured in units of `log(1/min ρ)`.
pub(crate) fn fit_exponents(rhos: &[f64], sup: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = sup.iter().map(|s| s.max(f64::MIN_POSITIVE).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let kappa = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let delta = rhos.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = (1.0 / delta).ln();
    let eps = if scale > 0.0 {
        xs.iter().zip(&ys).map(|(x, y)| (y - kappa * x) / scale).fold(0.0f64, f64::max)
    } else {
        0.0
    };
    (kappa, eps)
}

#[derive(Debug, Clone, Serialize)]
pub struct SubalgebraReport {
    /// `(i, j, max over cells of |xⁱ - xʲ| / √2)`.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Minimum over pairs: distance the set reaches away from every `{xⁱ = xʲ}`.
    pub headline: f64,
}

/// How far a set gets from each maximal proper unital subalgebra `{xⁱ = xʲ}`.
pub fn subalgebra_distance(a: &GridSet) -> Result<SubalgebraReport> {
    let n = a.n();
    if n < 2 {
        return Err(LabError::domain("ℝ¹ has no proper unital subalgebra"));
    }
    if a.is_empty() {
        return Err(LabError::domain("empty set"));
    }
    let centers = a.centers();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let v = centers.iter().map(|x| (x[i] - x[j]).abs()).fold(0.0f64, f64::max) / 2f64.sqrt();
            pairs.push((i, j, v));
        }
    }
    let headline = pairs.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    Ok(SubalgebraReport { pairs, headline })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::scale_inv;

    #[test]
    fn point_mass_is_fully_concentrated() {
        let mu = GridMeasure::point_mass(2, 8, &[0.5, 0.75]).unwrap();
        let r = projective_nonconcentration(&mu, &[0.01, 0.02, 0.04], 8).unwrap();
        assert!(r.sup_mass.iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert!(r.kappa_hat.abs() < 1e-12);
    }

    #[test]
    fn uniform_interval_has_linear_sup() {
        let m = 14;
        let s = GridSet::half_open_box(1, m, &[0.5], &[1.0]).unwrap();
        let mu = GridMeasure::uniform_on(&s).unwrap();
        let rhos: Vec<f64> = (3..=9).map(|k| 2f64.powi(-k)).collect();
        let r = projective_nonconcentration(&mu, &rhos, 2).unwrap();
        for (rho, sm) in rhos.iter().zip(&r.sup_mass) {
            let want = (4.0 * rho).min(1.0);
            assert!((sm - want).abs() <= 4.0 * (r.resolution + 1.0 / scale_inv(m)), "{rho}: {sm} vs {want}");
        }
        assert!((r.kappa_hat - 1.0).abs() < 0.05, "{}", r.kappa_hat);
        for (w, s) in r.witnesses.iter().zip(&r.sup_mass) {
            assert!((w.recheck(&mu) - s).abs() < 1e-9);
        }
    }

    #[test]
    fn witnesses_recheck_in_2d() {
        let s = GridSet::closed_box(2, 6, &[0.5, 0.5], &[1.0, 0.75]).unwrap();
        let mu = GridMeasure::uniform_on(&s).unwrap();
        let r = projective_nonconcentration(&mu, &[0.05, 0.1], 16).unwrap();
        for (w, s) in r.witnesses.iter().zip(&r.sup_mass) {
            assert!((w.recheck(&mu) - s).abs() < 1e-9);
        }
        assert!(r.net_angle > 0.0 && r.net_angle <= std::f64::consts::PI / 16.0 + 1e-12);
    }

    #[test]
    fn nets_contain_axes() {
        for n in 2..=4 {
            let (dirs, angle) = direction_net(n, 64);
            for i in 0..n {
                assert!(dirs.iter().any(|d| (d[i] - 1.0).abs() < 1e-15));
            }
            assert!(angle > 0.0 && angle < 1.0, "{n}: {angle}");
        }
    }

    #[test]
    fn subalgebra_examples() {
        let diag = GridSet::from_points(2, 6, &[[0.5, 0.5], [0.75, 0.75]]).unwrap();
        assert_eq!(subalgebra_distance(&diag).unwrap().headline, 0.0);
        let p = GridSet::from_points(2, 6, &[[0.5, 1.0]]).unwrap();
        assert!((subalgebra_distance(&p).unwrap().headline - 0.5 / 2f64.sqrt()).abs() < 1e-12);
        assert!(subalgebra_distance(&GridSet::from_points(1, 4, &[[0.5]]).unwrap()).is_err());
    }
}
