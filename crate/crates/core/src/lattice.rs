//! Exact finite point sets in ℤⁿ and the discrete inequalities checked on them.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::grid::{Coord, MAX_DIM};

pub const MAX_SUMSET_CARD: usize = 100_000;
pub const MAX_PAIR_COUNT: u128 = 10_000_000_000;
pub const MAX_ENUM_PAIRS: usize = 10_000;
pub const MAX_EXHAUSTIVE_BSG: usize = 14;
pub const MAX_HEURISTIC_BSG: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Sorted, duplicate-free set of integer points.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeSet {
    n: usize,
    points: Vec<Coord>,
}

impl LatticeSet {
    pub fn new(n: usize, mut points: Vec<Coord>) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(LabError::domain(format!("dimension {n} outside 1..=4")));
        }
        for p in points.iter_mut() {
            for x in p.iter_mut().skip(n) {
                *x = 0;
            }
        }
        points.sort_unstable();
        points.dedup();
        if points.len() > MAX_SUMSET_CARD {
            return Err(LabError::Cap(format!("{} points > {MAX_SUMSET_CARD}", points.len())));
        }
        Ok(Self { n, points })
    }

    pub fn from_ints(values: &[i64]) -> Self {
        Self::new(1, values.iter().map(|&v| [v, 0, 0, 0]).collect()).expect("1-d set within caps")
    }

    pub fn interval(lo: i64, hi: i64) -> Self {
        Self::from_ints(&(lo..=hi).collect::<Vec<_>>())
    }

    pub fn singleton(n: usize, p: Coord) -> Self {
        Self::new(n, vec![p]).expect("valid dimension")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[Coord] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &Coord) -> bool {
        self.points.binary_search(p).is_ok()
    }

    pub fn negate(&self) -> Self {
        let pts = self.points.iter().map(|p| neg(p)).collect();
        Self::new(self.n, pts).unwrap()
    }

    pub fn subset(&self, mask: u64) -> Self {
        let pts = (0..self.len()).filter(|i| mask >> i & 1 == 1).map(|i| self.points[i]).collect();
        Self { n: self.n, points: pts }
    }

    /// Text form: `n count` then one point per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.len());
        for p in &self.points {
            let row: Vec<String> = p[..self.n].iter().map(|v| v.to_string()).collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| LabError::Format("empty lattice file".into()))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| LabError::Format(format!("bad header `{header}`"))))
            .collect::<Result<_>>()?;
        let [n, count] = nums[..] else {
            return Err(LabError::Format(format!("header must be `n count`, got `{header}`")));
        };
        let mut pts = Vec::with_capacity(count);
        for line in lines {
            let vals: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| LabError::Format(format!("bad integer in `{line}`"))))
                .collect::<Result<_>>()?;
            if vals.len() != n {
                return Err(LabError::Format(format!("expected {n} coordinates, got `{line}`")));
            }
            let mut c = [0i64; MAX_DIM];
            c[..n].copy_from_slice(&vals);
            pts.push(c);
        }
        if pts.len() != count {
            return Err(LabError::Format(format!("header says {count} points, found {}", pts.len())));
        }
        let set = Self::new(n, pts)?;
        if set.len() != count {
            return Err(LabError::Format("duplicate points".into()));
        }
        Ok(set)
    }
}

fn neg(p: &Coord) -> Coord {
    [-p[0], -p[1], -p[2], -p[3]]
}

fn add(a: &Coord, b: &Coord) -> Coord {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn sub(a: &Coord, b: &Coord) -> Coord {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn check_pair(a: &LatticeSet, b: &LatticeSet) -> Result<()> {
    if a.n != b.n {
        return Err(LabError::domain(format!("dimension mismatch {} vs {}", a.n, b.n)));
    }
    let pairs = a.len() as u128 * b.len() as u128;
    if pairs > MAX_PAIR_COUNT {
        return Err(LabError::Cap(format!("|A||B| = {pairs} > 10^10")));
    }
    Ok(())
}

/// `{a + b}` or `{a - b}`.
pub fn exact_sumset(a: &LatticeSet, b: &LatticeSet, sign: Sign) -> Result<LatticeSet> {
    check_pair(a, b)?;
    let mut out = HashSet::with_capacity(a.len().max(b.len()) * 2);
    for p in &a.points {
        for q in &b.points {
            out.insert(match sign {
                Sign::Plus => add(p, q),
                Sign::Minus => sub(p, q),
            });
            if out.len() > MAX_SUMSET_CARD {
                return Err(LabError::Cap(format!("sumset exceeds {MAX_SUMSET_CARD} points")));
            }
        }
    }
    LatticeSet::new(a.n, out.into_iter().collect())
}

/// `kA - lA` with `k + l >= 1`.
pub fn iterated_sumset(a: &LatticeSet, k: usize, l: usize) -> Result<LatticeSet> {
    if k + l == 0 {
        return Err(LabError::domain("k + l must be positive"));
    }
    let mut acc: Option<LatticeSet> = None;
    for _ in 0..k {
        acc = Some(match acc {
            None => a.clone(),
            Some(s) => exact_sumset(&s, a, Sign::Plus)?,
        });
    }
    for _ in 0..l {
        acc = Some(match acc {
            None => a.negate(),
            Some(s) => exact_sumset(&s, a, Sign::Minus)?,
        });
    }
    Ok(acc.unwrap())
}

/// Representation counts `r(s) = #{(a,b) : a + b = s}`.
pub fn representation_counts(a: &LatticeSet, b: &LatticeSet) -> Result<HashMap<Coord, u64>> {
    check_pair(a, b)?;
    let mut r: HashMap<Coord, u64> = HashMap::new();
    for p in &a.points {
        for q in &b.points {
            *r.entry(add(p, q)).or_default() += 1;
        }
    }
    Ok(r)
}

/// Additive energy as the squared ℓ² norm of `1_A * 1_B`.
pub fn energy_by_norm(a: &LatticeSet, b: &LatticeSet) -> Result<u128> {
    Ok(representation_counts(a, b)?.values().map(|&c| c as u128 * c as u128).sum())
}

/// Additive energy by enumerating `(a, b, a')` and testing `a + b - a' ∈ B`.
pub fn energy_by_enumeration(a: &LatticeSet, b: &LatticeSet) -> Result<u128> {
    check_pair(a, b)?;
    if a.len() * b.len() > MAX_ENUM_PAIRS {
        return Err(LabError::Cap(format!("|A||B| = {} > {MAX_ENUM_PAIRS}", a.len() * b.len())));
    }
    let mut count = 0u128;
    for p in &a.points {
        for q in &b.points {
            let s = add(p, q);
            for p2 in &a.points {
                if b.contains(&sub(&s, p2)) {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

/// `#{(a,b,a',b') : a + b = a' + b'}`; both routes run when small enough and must agree.
pub fn exact_energy(a: &LatticeSet, b: &LatticeSet) -> Result<u128> {
    let e = energy_by_norm(a, b)?;
    if a.len() * b.len() <= MAX_ENUM_PAIRS {
        let e2 = energy_by_enumeration(a, b)?;
        if e != e2 {
            return Err(LabError::domain(format!("energy routes disagree: {e} vs {e2}")));
        }
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub k_const: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `|kA - lA| <= K^{k+l} |B|` with `K = |A+B|/|B|`.
pub fn plunnecke_check(a: &LatticeSet, b: &LatticeSet, k: usize, l: usize) -> Result<InequalityReport> {
    if a.is_empty() || b.is_empty() {
        return Err(LabError::domain("empty set"));
    }
    let ab = exact_sumset(a, b, Sign::Plus)?;
    let kk = ab.len() as f64 / b.len() as f64;
    let lhs = iterated_sumset(a, k, l)?.len() as f64;
    let rhs = kk.powi((k + l) as i32) * b.len() as f64;
    Ok(InequalityReport { k_const: kk, lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-12) })
}

/// `|B||A - C| <= |A - B||B - C|`.
pub fn ruzsa_triangle_check(a: &LatticeSet, b: &LatticeSet, c: &LatticeSet) -> Result<InequalityReport> {
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(LabError::domain("empty set"));
    }
    let ac = exact_sumset(a, c, Sign::Minus)?.len() as f64;
    let ab = exact_sumset(a, b, Sign::Minus)?.len() as f64;
    let bc = exact_sumset(b, c, Sign::Minus)?.len() as f64;
    let lhs = b.len() as f64 * ac;
    let rhs = ab * bc;
    Ok(InequalityReport { k_const: 1.0, lhs, rhs, pass: lhs <= rhs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BsgCertificate {
    pub a_prime: Vec<Coord>,
    pub b_prime: Vec<Coord>,
    pub sumset_size: usize,
    /// `|A'+B'| / sqrt(|A'||B'|)`
    pub doubling: f64,
    pub frac_a: f64,
    pub frac_b: f64,
    pub exhaustive: bool,
}

impl BsgCertificate {
    pub fn objective(&self) -> f64 {
        self.frac_a.min(self.frac_b)
    }
}

fn certificate(a: &LatticeSet, b: &LatticeSet, ma: u64, mb: u64, exhaustive: bool) -> Result<BsgCertificate> {
    let ap = a.subset(ma);
    let bp = b.subset(mb);
    let s = exact_sumset(&ap, &bp, Sign::Plus)?.len();
    Ok(BsgCertificate {
        doubling: s as f64 / ((ap.len() * bp.len()) as f64).sqrt(),
        frac_a: ap.len() as f64 / a.len() as f64,
        frac_b: bp.len() as f64 / b.len() as f64,
        a_prime: ap.points,
        b_prime: bp.points,
        sumset_size: s,
        exhaustive,
    })
}

/// Subsets `A' ⊆ A`, `B' ⊆ B` maximizing `min(|A'|/|A|, |B'|/|B|)` subject to
/// `|A'+B'| <= K³ (|A'||B'|)^{1/2}`.
///
/// Exhaustive up to 14 elements per side; above that (up to 200) greedy removal of
/// the vertex with fewest popular-sum edges. Ties prefer larger `|A'|+|B'|`, then
/// the lexicographically smaller subset masks.
pub fn bsg_search(a: &LatticeSet, b: &LatticeSet, k: f64) -> Result<BsgCertificate> {
    check_pair(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Err(LabError::domain("empty set"));
    }
    if k < 1.0 {
        return Err(LabError::domain(format!("K = {k} < 1")));
    }
    if a.len() <= MAX_EXHAUSTIVE_BSG && b.len() <= MAX_EXHAUSTIVE_BSG {
        let (ma, mb) = bsg_exhaustive(a, b, k);
        certificate(a, b, ma, mb, true)
    } else if a.len() <= MAX_HEURISTIC_BSG && b.len() <= MAX_HEURISTIC_BSG {
        bsg_greedy(a, b, k)
    } else {
        Err(LabError::Cap(format!("bsg_search supports at most {MAX_HEURISTIC_BSG} points per side")))
    }
}

const WORDS: usize = 4; // 14 * 14 = 196 distinct sums at most

fn bsg_exhaustive(a: &LatticeSet, b: &LatticeSet, k: f64) -> (u64, u64) {
    let (na, nb) = (a.len(), b.len());
    let mut ids: HashMap<Coord, usize> = HashMap::new();
    let mut sid = vec![vec![0usize; nb]; na];
    for i in 0..na {
        for j in 0..nb {
            let next = ids.len();
            sid[i][j] = *ids.entry(add(&a.points[i], &b.points[j])).or_insert(next);
        }
    }
    let k3 = k * k * k;
    // best: (objective numerator compared as rational sa*nb vs sb*na, total size, masks)
    let mut best: Option<(u64, u64)> = None;
    let mut best_key = (0u128, 0usize); // (min(sa*nb, sb*na), sa+sb)
    let full_a = (1u64 << na) - 1;
    let mut union = vec![[0u64; WORDS]; 1usize << na];
    // B' in order of decreasing size so pruning bites early
    let mut bmasks: Vec<u64> = (1..(1u64 << nb)).collect();
    bmasks.sort_by_key(|&m| (std::cmp::Reverse(m.count_ones()), m));
    let mut row = vec![[0u64; WORDS]; na];
    for mb in bmasks {
        let sb = mb.count_ones() as usize;
        let cap_key = (sb as u128) * na as u128;
        // best reachable with this B' is min(na*nb, sb*na)
        if cap_key < best_key.0 || (cap_key == best_key.0 && sb + na <= best_key.1 && best.is_some()) {
            continue;
        }
        for i in 0..na {
            let mut w = [0u64; WORDS];
            for j in 0..nb {
                if mb >> j & 1 == 1 {
                    let s = sid[i][j];
                    w[s / 64] |= 1 << (s % 64);
                }
            }
            row[i] = w;
        }
        for ma in 1..=full_a {
            let low = ma.trailing_zeros() as usize;
            let rest = ma & (ma - 1);
            let mut u = union[rest as usize];
            for w in 0..WORDS {
                u[w] |= row[low][w];
            }
            union[ma as usize] = u;
            let sa = ma.count_ones() as usize;
            let key = ((sa as u128 * nb as u128).min(sb as u128 * na as u128), sa + sb);
            if key < best_key || (key == best_key && best.is_some()) {
                continue;
            }
            let size: u32 = u.iter().map(|w| w.count_ones()).sum();
            if (size as f64) <= k3 * ((sa * sb) as f64).sqrt() * (1.0 + 1e-12) {
                best_key = key;
                best = Some((ma, mb));
            }
        }
    }
    best.expect("singletons always qualify since K >= 1")
}

fn bsg_greedy(a: &LatticeSet, b: &LatticeSet, k: f64) -> Result<BsgCertificate> {
    let k3 = k * k * k;
    let mut ia: Vec<usize> = (0..a.len()).collect();
    let mut ib: Vec<usize> = (0..b.len()).collect();
    loop {
        let mut r: HashMap<Coord, u64> = HashMap::new();
        for &i in &ia {
            for &j in &ib {
                *r.entry(add(&a.points[i], &b.points[j])).or_default() += 1;
            }
        }
        let (sa, sb) = (ia.len(), ib.len());
        if (r.len() as f64) <= k3 * ((sa * sb) as f64).sqrt() * (1.0 + 1e-12) {
            break;
        }
        // a sum is popular when its multiplicity is at least half the mean
        let thr = (sa * sb) as f64 / (2.0 * r.len() as f64);
        let popular = |s: &Coord| r[s] as f64 >= thr;
        let deg_a: Vec<f64> = ia
            .iter()
            .map(|&i| ib.iter().filter(|&&j| popular(&add(&a.points[i], &b.points[j]))).count() as f64 / sb as f64)
            .collect();
        let deg_b: Vec<f64> = ib
            .iter()
            .map(|&j| ia.iter().filter(|&&i| popular(&add(&a.points[i], &b.points[j]))).count() as f64 / sa as f64)
            .collect();
        let (pa, va) = argmin(&deg_a);
        let (pb, vb) = argmin(&deg_b);
        // remove from the side whose fraction stays larger after removal
        let fa = (sa - 1) as f64 / a.len() as f64;
        let fb = (sb - 1) as f64 / b.len() as f64;
        let take_a = if sa == 1 {
            false
        } else if sb == 1 {
            true
        } else if va != vb {
            va < vb
        } else {
            fa >= fb
        };
        if take_a {
            ia.remove(pa);
        } else {
            ib.remove(pb);
        }
    }
    let ap = LatticeSet { n: a.n, points: ia.iter().map(|&i| a.points[i]).collect() };
    let bp = LatticeSet { n: b.n, points: ib.iter().map(|&j| b.points[j]).collect() };
    let s = exact_sumset(&ap, &bp, Sign::Plus)?.len();
    Ok(BsgCertificate {
        doubling: s as f64 / ((ap.len() * bp.len()) as f64).sqrt(),
        frac_a: ap.len() as f64 / a.len() as f64,
        frac_b: bp.len() as f64 / b.len() as f64,
        a_prime: ap.points,
        b_prime: bp.points,
        sumset_size: s,
        exhaustive: false,
    })
}

fn argmin(v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &x) in v.iter().enumerate() {
        if x < best.1 {
            best = (i, x);
        }
    }
    best
}
