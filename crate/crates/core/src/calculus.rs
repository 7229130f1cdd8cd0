//! Set calculus at scale δ: sumsets, dilations, Ruzsa distance, energies,
//! generated sets and the sum-product growth statistic.
//!
//! `N_δ` of a grid set is its number of occupied cells. Sums of cell centers
//! are exact on the center lattice; products are rebinned, which moves each
//! element by at most `δ/2` per coordinate.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fftnd::{convolve, DenseField};
use crate::grid::{
    ball_offsets, bin, check_budget, covering_number, dist, for_each_in_box, same_scale, separated_cells, Coord,
    GridSet, LipschitzMapSpec, MAX_DIM,
};
use crate::lattice::Sign;
use crate::rng::stream_rng;

/// Pair count above which sumsets switch from enumeration to FFT.
const PAIRWISE_LIMIT: u128 = 4_000_000;

pub(crate) fn n_delta(s: &GridSet) -> f64 {
    s.len() as f64
}

/// Indicator of the occupied cells as a dense field on the set's grid.
pub(crate) fn indicator_field(s: &GridSet) -> Result<DenseField> {
    let g = s.grid();
    let n = s.n();
    let mut lo = [0i64; MAX_DIM];
    lo[..n].copy_from_slice(g.lo());
    let shape: Vec<usize> = g.dims().iter().map(|&d| d as usize).collect();
    let mut f = DenseField::zeros(n, lo, &shape)?;
    for &c in s.cells() {
        f.data[c as usize] = 1.0;
    }
    Ok(f)
}

fn nonzero_coords(f: &DenseField) -> Vec<Coord> {
    f.entries(0.5).into_iter().map(|(c, _)| c).collect()
}

/// Sum or difference set, binned at the common scale.
///
/// Cell centers add exactly, so the only discretization error is the
/// `δ/2` binning of the inputs themselves.
pub fn sumset(a: &GridSet, b: &GridSet, sign: Sign) -> Result<GridSet> {
    same_scale(a, b)?;
    let n = a.n();
    if a.is_empty() || b.is_empty() {
        return GridSet::empty(n, a.m());
    }
    let b = match sign {
        Sign::Plus => b.clone(),
        Sign::Minus => b.negate()?,
    };
    if a.len() as u128 * b.len() as u128 <= PAIRWISE_LIMIT {
        pairwise_sum(a, &b)
    } else {
        fft_sum(a, &b)
    }
}

fn pairwise_sum(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    let n = a.n();
    let bc = b.coords();
    let mut out = HashSet::with_capacity(a.len() + b.len());
    for p in a.coords() {
        for q in &bc {
            let mut c = p;
            for i in 0..n {
                c[i] += q[i];
            }
            out.insert(c);
        }
    }
    GridSet::from_coords(n, a.m(), out.into_iter().collect())
}

fn fft_sum(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    let conv = convolve(&indicator_field(a)?, &indicator_field(b)?)?;
    GridSet::from_coords(a.n(), a.m(), nonzero_coords(&conv))
}

/// Coordinate-wise products `{a_i x_i}` over cell centers of `x`, rebinned.
pub fn dilate_set(a: &[f64], x: &GridSet) -> Result<GridSet> {
    let n = x.n();
    if a.len() < n {
        return Err(LabError::domain("dilation vector shorter than the dimension"));
    }
    let d = x.delta();
    let coords = x
        .coords()
        .into_iter()
        .map(|c| {
            let mut k = [0i64; MAX_DIM];
            for i in 0..n {
                k[i] = bin(a[i] * c[i] as f64 * d, x.m());
            }
            k
        })
        .collect();
    GridSet::from_coords(n, x.m(), coords)
}

/// `{a x : a ∈ A, x ∈ X}` on cell centers, rebinned.
pub fn product_set(a: &GridSet, x: &GridSet) -> Result<GridSet> {
    same_scale(a, x)?;
    let n = x.n();
    check_budget(a.len() as u128 * x.len() as u128)?;
    let ac = a.centers();
    let xc = x.centers();
    let mut out = HashSet::new();
    for p in &ac {
        for q in &xc {
            let mut k = [0i64; MAX_DIM];
            for i in 0..n {
                k[i] = bin(p[i] * q[i], x.m());
            }
            out.insert(k);
        }
    }
    GridSet::from_coords(n, x.m(), out.into_iter().collect())
}

/// `½ log(N_δ(A-B)² / (N_δ(A) N_δ(B)))`.
pub fn ruzsa_distance(a: &GridSet, b: &GridSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(LabError::domain("Ruzsa distance of an empty set"));
    }
    let diff = n_delta(&sumset(a, b, Sign::Minus)?);
    Ok(0.5 * (diff * diff / (n_delta(a) * n_delta(b))).ln())
}

/// `N_δ(A+A) / N_δ(A)`.
pub fn doubling_constant(a: &GridSet) -> Result<f64> {
    if a.is_empty() {
        return Err(LabError::domain("doubling constant of an empty set"));
    }
    Ok(n_delta(&sumset(a, a, Sign::Plus)?) / n_delta(a))
}

/// Cell representation counts `c = 1_A * 1_B` on the center lattice.
pub(crate) fn cell_convolution(a: &GridSet, b: &GridSet) -> Result<DenseField> {
    let mut c = convolve(&indicator_field(a)?, &indicator_field(b)?)?;
    for v in c.data.iter_mut() {
        *v = v.round();
    }
    Ok(c)
}

/// Apply `[1/6, 2/3, 1/6]` along every axis (Gram matrix of unit hat functions).
pub(crate) fn hat_gram(f: &DenseField) -> Result<DenseField> {
    let n = f.n;
    let mut lo = f.lo;
    let mut shape = f.shape;
    for i in 0..n {
        lo[i] -= 1;
        shape[i] += 2;
    }
    let mut cur = DenseField::zeros(n, lo, &shape[..n])?;
    for (i, &v) in f.data.iter().enumerate() {
        let j = cur.index(&f.coord(i)).unwrap();
        cur.data[j] = v;
    }
    for axis in 0..n {
        let stride: usize = shape[axis + 1..n].iter().product();
        let len = shape[axis];
        let mut next = vec![0.0; cur.data.len()];
        for (idx, out) in next.iter_mut().enumerate() {
            let k = (idx / stride) % len;
            let mut v = cur.data[idx] * (2.0 / 3.0);
            if k > 0 {
                v += cur.data[idx - stride] / 6.0;
            }
            if k + 1 < len {
                v += cur.data[idx + stride] / 6.0;
            }
            *out = v;
        }
        cur.data = next;
    }
    Ok(cur)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridEnergy {
    /// `δ^{-3n} ‖1_A * 1_B‖²` for the unions of cells, computed exactly.
    pub l2: f64,
    /// Pairs of `(a,b),(a',b')` cell pairs with `|a+b-a'-b'| <= (1+2√2)δ`.
    pub pair_count: Option<u64>,
}

/// Largest `nnz(c) · |ball|` for which the pair count is evaluated.
const PAIR_COUNT_LIMIT: u128 = 200_000_000;

/// Additive energy at scale δ by two estimators.
///
/// The cells of `A` and `B` are δ-separated, so they serve as the maximal
/// separated subsets of the pair-count estimator; the Lipschitz constant of
/// `(a,b) -> a+b` is `√2`.
pub fn additive_energy_grid(a: &GridSet, b: &GridSet) -> Result<GridEnergy> {
    same_scale(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Ok(GridEnergy { l2: 0.0, pair_count: Some(0) });
    }
    let c = cell_convolution(a, b)?;
    let smooth = hat_gram(&c)?;
    let l2: f64 = c.data.iter().enumerate().map(|(i, &v)| v * smooth.get(&c.coord(i))).sum();

    let n = a.n();
    let offsets = ball_offsets(n, 1.0 + 2.0 * 2f64.sqrt());
    let support = c.entries(0.5);
    let pair_count = if support.len() as u128 * offsets.len() as u128 <= PAIR_COUNT_LIMIT {
        let mut total = 0u64;
        for (k, v) in &support {
            let mut near = 0.0;
            for o in &offsets {
                let mut q = *k;
                for i in 0..n {
                    q[i] += o[i];
                }
                near += c.get(&q);
            }
            total += (v * near) as u64;
        }
        Some(total)
    } else {
        None
    };
    Ok(GridEnergy { l2, pair_count })
}

/// Pair-count energy of a map: ordered pairs of cells of `C` whose images lie
/// within `(1 + 2K)δ`.
pub fn map_energy(phi: &LipschitzMapSpec, c: &GridSet) -> Result<u64> {
    if phi.in_dim() != c.n() {
        return Err(LabError::domain("map input dimension does not match the set"));
    }
    let d = c.delta();
    let cells = separated_cells(c, d)?;
    let thr = (1.0 + 2.0 * phi.lip()) * d;
    let out_n = phi.out_dim();
    let images: Vec<Vec<f64>> = cells.iter().map(|k| phi.eval(&c.grid().center(k))).collect();
    let key = |y: &[f64]| {
        let mut b = [0i64; MAX_DIM];
        for i in 0..out_n {
            b[i] = (y[i] / thr).floor() as i64;
        }
        b
    };
    let mut buckets: HashMap<Coord, Vec<usize>> = HashMap::new();
    for (i, y) in images.iter().enumerate() {
        buckets.entry(key(y)).or_default().push(i);
    }
    let lo = vec![-1i64; out_n];
    let hi = vec![1i64; out_n];
    let lim = thr * (1.0 + 1e-12);
    let count: u64 = images
        .par_iter()
        .map(|y| {
            let b = key(y);
            let mut cnt = 0u64;
            for_each_in_box(&lo, &hi, |o| {
                let mut nb = b;
                for i in 0..out_n {
                    nb[i] += o[i];
                }
                if let Some(list) = buckets.get(&nb) {
                    cnt += list.iter().filter(|&&j| dist(y, &images[j]) <= lim).count() as u64;
                }
            });
            cnt
        })
        .sum();
    Ok(count)
}

pub const MAX_GENERATION: usize = 8;

/// Levels `L_1 ⊆ … ⊆ L_s` of the generated set `⟨A, X⟩`.
///
/// `L_1 = ±A ∪ ±X`; `L_t` adds `L_i + L_j` for `i + j = t` and `A·L_{t-1}`.
/// Every combine rebins to δ; only products round, so an element of `L_t`
/// is within `t · δ · max(1, |A|_∞)^t` of the exact expression value.
pub fn generated_levels(a: &GridSet, x: &GridSet, s: usize) -> Result<Vec<GridSet>> {
    same_scale(a, x)?;
    if s == 0 || s > MAX_GENERATION {
        return Err(LabError::domain(format!("complexity {s} outside 1..=8")));
    }
    let l1 = a.union(&a.negate()?)?.union(x)?.union(&x.negate()?)?;
    let mut levels = vec![l1];
    for t in 2..=s {
        let mut cur = levels[t - 2].clone();
        for i in 1..=t / 2 {
            let j = t - i;
            cur = cur.union(&sumset(&levels[i - 1], &levels[j - 1], Sign::Plus)?)?;
        }
        cur = cur.union(&product_set(a, &levels[t - 2])?)?;
        levels.push(cur);
    }
    Ok(levels)
}

/// `⟨A, X⟩_s`: values of expressions of size at most `s`.
pub fn generated_set(a: &GridSet, x: &GridSet, s: usize) -> Result<GridSet> {
    Ok(generated_levels(a, x, s)?.pop().unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodSet {
    pub is_good: bool,
    pub ratio: f64,
    /// Operator norm of the diagonal action, `max |a_i|`.
    pub norm: f64,
}

/// Whether `a ∈ S_δ(X, K)`: `|a| <= K` and `N_δ(X + aX) <= K N_δ(X)`.
pub fn good_set_membership(a: &[f64], x: &GridSet, k: f64) -> Result<GoodSet> {
    if x.is_empty() {
        return Err(LabError::domain("empty base set"));
    }
    let norm = a[..x.n()].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ax = dilate_set(a, x)?;
    let ratio = n_delta(&sumset(x, &ax, Sign::Plus)?) / n_delta(x);
    Ok(GoodSet { is_good: norm <= k && ratio <= k, ratio, norm })
}

/// Smallest `C` with `ratio <= K^C` (zero when the ratio is at most one).
pub fn closure_exponent(ratio: f64, k: f64) -> f64 {
    if ratio <= 1.0 {
        0.0
    } else {
        ratio.ln() / k.ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub delta: f64,
    pub n_x: u64,
    pub n_sum: u64,
    pub n_best_dilate: u64,
    pub witness_a: Vec<f64>,
    pub ratio: f64,
    pub eps_hat: f64,
    /// Every sampled `a` with its `N_δ(X + aX)`.
    pub samples: Vec<(Vec<f64>, u64)>,
}

impl GrowthReport {
    pub fn csv_header(n: usize) -> String {
        let mut h = "delta,n_X,n_sum,n_best_dilate,ratio,eps_hat".to_string();
        for i in 0..n {
            h.push_str(&format!(",witness_{i}"));
        }
        h
    }

    pub fn csv_row(&self) -> String {
        let mut r = format!(
            "{},{},{},{},{},{}",
            self.delta, self.n_x, self.n_sum, self.n_best_dilate, self.ratio, self.eps_hat
        );
        for w in &self.witness_a {
            r.push_str(&format!(",{w}"));
        }
        r
    }
}

/// `N_δ(X+X) + max_a N_δ(X + aX)` relative to `N_δ(X)`, with `a` drawn from the
/// cells of `A`. The maximum over samples is a lower bound for the supremum
/// over all of `A`.
pub fn growth_statistic(a: &GridSet, x: &GridSet, sample_count: usize, seed: u64) -> Result<GrowthReport> {
    same_scale(a, x)?;
    if a.is_empty() || x.is_empty() {
        return Err(LabError::domain("growth statistic needs nonempty A and X"));
    }
    if sample_count == 0 {
        return Err(LabError::domain("sample_count must be positive"));
    }
    let acells = a.coords();
    let samples: Vec<Vec<f64>> = (0..sample_count as u64)
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            a.grid().center(&acells[rng.gen_range(0..acells.len())])
        })
        .collect();
    let counts: Vec<Result<u64>> = samples
        .par_iter()
        .map(|s| Ok(sumset(x, &dilate_set(s, x)?, Sign::Plus)?.len() as u64))
        .collect();
    let mut best = (0u64, 0usize);
    let mut per = Vec::with_capacity(sample_count);
    for (i, c) in counts.into_iter().enumerate() {
        let c = c?;
        if c > best.0 {
            best = (c, i);
        }
        per.push((samples[i].clone(), c));
    }
    let n_x = x.len() as u64;
    let n_sum = sumset(x, x, Sign::Plus)?.len() as u64;
    let ratio = (n_sum + best.0) as f64 / n_x as f64;
    let delta = x.delta();
    Ok(GrowthReport {
        delta,
        n_x,
        n_sum,
        n_best_dilate: best.0,
        witness_a: samples[best.1].clone(),
        ratio,
        eps_hat: -ratio.ln() / delta.ln(),
        samples: per,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberBound {
    pub n_sum: u64,
    /// `N_ρ(π_j X)`
    pub n_proj: u64,
    /// `max_b N_δ(X ∩ π_j^{-1} B(b, ρ))`, over ρ-boxes in the `j`-th coordinate.
    pub max_fiber: u64,
}

/// Both sides of `N_δ(X+X) >= N_ρ(π_j X) · max_b N_δ(X ∩ π_j^{-1}B(b,ρ))`.
pub fn fiber_bound(x: &GridSet, j: usize, rho: f64) -> Result<FiberBound> {
    if j >= x.n() {
        return Err(LabError::domain("projection axis out of range"));
    }
    let d = x.delta();
    let coords = x.coords();
    let proj = GridSet::from_coords(1, x.m(), coords.iter().map(|c| [c[j], 0, 0, 0]).collect())?;
    let n_proj = covering_number(&proj, rho)?;
    let mut slabs: HashMap<i64, u64> = HashMap::new();
    for c in &coords {
        *slabs.entry((c[j] as f64 * d / rho + 1e-9).floor() as i64).or_default() += 1;
    }
    let max_fiber = slabs.values().copied().max().unwrap_or(0);
    let n_sum = sumset(x, x, Sign::Plus)?.len() as u64;
    Ok(FiberBound { n_sum, n_proj, max_fiber })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingGrowth {
    /// `max(σ_δ[A], N_δ(A + A·A)/N_δ(A))`
    pub k: f64,
    /// `N_δ(⟨A⟩_s)/N_δ(A)` for `s = 1..`
    pub ratios: Vec<f64>,
    /// `log(ratio_s)/log K`
    pub c_s: Vec<f64>,
}

/// Growth of `⟨A⟩_s` measured against the doubling and ring-growth constant of `A`.
pub fn ring_growth(a: &GridSet, s_max: usize) -> Result<RingGrowth> {
    let base = n_delta(a);
    let sigma = doubling_constant(a)?;
    let aa = product_set(a, a)?;
    let k = sigma.max(n_delta(&sumset(a, &aa, Sign::Plus)?) / base);
    let levels = generated_levels(a, a, s_max)?;
    let ratios: Vec<f64> = levels.iter().map(|l| n_delta(l) / base).collect();
    let c_s = ratios.iter().map(|&r| closure_exponent(r, k)).collect();
    Ok(RingGrowth { k, ratios, c_s })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(m: u32, v: &[f64]) -> GridSet {
        GridSet::from_points(1, m, &v.iter().map(|&x| [x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn sumset_examples() {
        let a = pts(4, &[0.0, 0.25]);
        let s = sumset(&a, &a, Sign::Plus).unwrap();
        assert_eq!(s, pts(4, &[0.0, 0.25, 0.5]));
        let z = pts(4, &[0.0]);
        let b = pts(4, &[0.5, -0.125, 0.75]);
        assert_eq!(sumset(&z, &b, Sign::Plus).unwrap(), b);
        assert_eq!(sumset(&a, &b, Sign::Plus).unwrap(), sumset(&b, &a, Sign::Plus).unwrap());
    }

    #[test]
    fn fft_and_pairwise_sumsets_agree() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3 {
            let mut draw = |k: usize| {
                let c: Vec<Coord> = (0..k)
                    .map(|_| {
                        let mut c = [0i64; MAX_DIM];
                        for x in c.iter_mut().take(n) {
                            *x = rng.gen_range(-20..20);
                        }
                        c
                    })
                    .collect();
                GridSet::from_coords(n, 6, c).unwrap()
            };
            let a = draw(40);
            let b = draw(25);
            assert_eq!(pairwise_sum(&a, &b).unwrap(), fft_sum(&a, &b).unwrap());
        }
    }

    #[test]
    fn dilate_examples() {
        let x = GridSet::from_points(2, 6, &[[1.0, 1.0]]).unwrap();
        let y = dilate_set(&[2.0, 1.0], &x).unwrap();
        assert_eq!(y, GridSet::from_points(2, 6, &[[2.0, 1.0]]).unwrap());
        let i = GridSet::closed_box(1, 10, &[0.5], &[1.0]).unwrap();
        let h = dilate_set(&[0.5], &i).unwrap();
        let r = h.len() as f64 / i.len() as f64;
        assert!((0.25..=1.0).contains(&r), "ratio {r}");
        assert_eq!(dilate_set(&[1.0], &i).unwrap(), i);
    }

    #[test]
    fn ruzsa_and_doubling() {
        let c = pts(8, &[0.25]);
        assert_eq!(ruzsa_distance(&c, &c).unwrap(), 0.0);
        let i = GridSet::closed_box(1, 10, &[0.0], &[1.0]).unwrap();
        let d = ruzsa_distance(&i, &i).unwrap();
        assert!((d - 2f64.ln()).abs() <= 2f64.ln());
        let a = pts(6, &[0.0, 0.5]);
        assert!((doubling_constant(&a).unwrap() - 1.5).abs() < 1e-12);
        let sc = doubling_constant(&c).unwrap();
        assert!((0.5..=3.0).contains(&sc));
        let b = pts(6, &[0.125, 0.75, 0.8]);
        let lhs = ruzsa_distance(&a, &b).unwrap();
        let rhs = ruzsa_distance(&b.negate().unwrap(), &a.negate().unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn hat_gram_single_cell() {
        let c = pts(6, &[0.0]);
        let e = additive_energy_grid(&c, &c).unwrap();
        assert!((e.l2 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(e.pair_count, Some(1));
    }

    #[test]
    fn map_energy_extremes() {
        let c = GridSet::closed_box(2, 5, &[0.0, 0.0], &[0.25, 0.25]).unwrap();
        let n = c.len() as u64;
        let konst = LipschitzMapSpec::new(2, 1, 1e-9, |_| vec![0.3]).unwrap();
        assert_eq!(map_energy(&konst, &c).unwrap(), n * n);
        let id = map_energy(&LipschitzMapSpec::identity(2), &c).unwrap();
        assert!(id >= n && id <= 30 * n, "{id} vs {n}");
    }

    #[test]
    fn generated_levels_are_monotone() {
        let a = GridSet::closed_box(1, 8, &[0.9], &[1.1]).unwrap();
        let x = pts(8, &[1.0]);
        let levels = generated_levels(&a, &x, 3).unwrap();
        let l1 = a.union(&a.negate().unwrap()).unwrap().union(&x).unwrap().union(&x.negate().unwrap()).unwrap();
        assert_eq!(levels[0], l1);
        for w in levels.windows(2) {
            assert!(w[0].is_subset_of(&w[1]));
        }
    }

    #[test]
    fn good_set_zero_and_identity() {
        let x = GridSet::closed_box(1, 8, &[0.0], &[1.0]).unwrap();
        let g = good_set_membership(&[0.0], &x, 2.5).unwrap();
        assert!(g.is_good);
        assert!((g.ratio - 1.0).abs() < 0.01);
        let g = good_set_membership(&[1.0], &x, 2.5).unwrap();
        assert!((g.ratio - 2.0).abs() < 0.01);
        assert!(g.is_good);
        assert!(!good_set_membership(&[1.0], &x, 1.9).unwrap().is_good);
    }

    #[test]
    fn growth_of_progression_with_identity() {
        let m = 12;
        let step = 64; // spacing √δ in cell units
        let x = GridSet::from_coords(1, m, (0..64).map(|i| [i * step, 0, 0, 0]).collect()).unwrap();
        let a = pts(m, &[1.0]);
        let r = growth_statistic(&a, &x, 4, 7).unwrap();
        assert_eq!(r.n_sum, 127);
        assert_eq!(r.n_best_dilate, 127);
        assert!((r.ratio - 254.0 / 64.0).abs() < 1e-12);
        let again = growth_statistic(&a, &x, 4, 7).unwrap();
        assert_eq!(r, again);
    }
}
