//! Dense lattice fields and FFT-based linear convolution in up to four dimensions.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::Result;
use crate::grid::{check_budget, Coord, MAX_DIM};

/// Real values on the integer box `lo .. lo + shape` (row-major, last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseField {
    pub n: usize,
    pub lo: Coord,
    pub shape: [usize; MAX_DIM],
    pub data: Vec<f64>,
}

impl DenseField {
    pub fn zeros(n: usize, lo: Coord, shape: &[usize]) -> Result<Self> {
        let mut s = [1usize; MAX_DIM];
        s[..n].copy_from_slice(&shape[..n]);
        let total: u128 = s[..n].iter().map(|&x| x as u128).product();
        check_budget(total)?;
        Ok(Self { n, lo, shape: s, data: vec![0.0; total as usize] })
    }

    /// Field spanning the bounding box of `entries`, filled with their values (summed on collision).
    pub fn from_entries(n: usize, entries: &[(Coord, f64)]) -> Result<Self> {
        if entries.is_empty() {
            return Self::zeros(n, [0; MAX_DIM], &[1; MAX_DIM][..n]);
        }
        let mut lo = [i64::MAX; MAX_DIM];
        let mut hi = [i64::MIN; MAX_DIM];
        for (c, _) in entries {
            for i in 0..n {
                lo[i] = lo[i].min(c[i]);
                hi[i] = hi[i].max(c[i]);
            }
        }
        for i in n..MAX_DIM {
            lo[i] = 0;
        }
        let shape: Vec<usize> = (0..n).map(|i| (hi[i] - lo[i] + 1) as usize).collect();
        let mut f = Self::zeros(n, lo, &shape)?;
        for (c, v) in entries {
            let idx = f.index(c).expect("entry inside its bounding box");
            f.data[idx] += v;
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.n]
    }

    pub fn index(&self, c: &Coord) -> Option<usize> {
        let mut idx = 0usize;
        for i in 0..self.n {
            let off = c[i] - self.lo[i];
            if off < 0 || off as usize >= self.shape[i] {
                return None;
            }
            idx = idx * self.shape[i] + off as usize;
        }
        Some(idx)
    }

    pub fn coord(&self, mut idx: usize) -> Coord {
        let mut c = [0i64; MAX_DIM];
        for i in (0..self.n).rev() {
            c[i] = self.lo[i] + (idx % self.shape[i]) as i64;
            idx /= self.shape[i];
        }
        c
    }

    pub fn get(&self, c: &Coord) -> f64 {
        self.index(c).map(|i| self.data[i]).unwrap_or(0.0)
    }

    /// Nonzero entries (|v| > threshold) with their coordinates.
    pub fn entries(&self, threshold: f64) -> Vec<(Coord, f64)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > threshold)
            .map(|(i, &v)| (self.coord(i), v))
            .collect()
    }

    /// Point reflection `c -> -c`.
    pub fn reflect(&self) -> Self {
        let n = self.n;
        let mut lo = [0i64; MAX_DIM];
        for i in 0..n {
            lo[i] = -(self.lo[i] + self.shape[i] as i64 - 1);
        }
        let mut out = Self { n, lo, shape: self.shape, data: vec![0.0; self.data.len()] };
        for (i, &v) in self.data.iter().enumerate() {
            let mut c = self.coord(i);
            for x in c.iter_mut().take(n) {
                *x = -*x;
            }
            let j = out.index(&c).unwrap();
            out.data[j] = v;
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Smallest `L >= len` of the form `2^a 3^b 5^c`.
pub fn fast_len(len: usize) -> usize {
    let mut l = len.max(1);
    loop {
        let mut r = l;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return l;
        }
        l += 1;
    }
}

/// In-place multi-dimensional DFT on a row-major array.
///
/// Forward uses `e^{-2πi jk/N}`, inverse `e^{+2πi jk/N}`; neither is normalized.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let n = shape.len();
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = shape.iter().product();
    debug_assert_eq!(total, data.len());
    for axis in 0..n {
        let len = shape[axis];
        if len == 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        let stride: usize = shape[axis + 1..].iter().product();
        let outer = total / (len * stride);
        if stride == 1 {
            fft.process(data);
            continue;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * len * stride + s;
                for k in 0..len {
                    line[k] = data[base + k * stride];
                }
                fft.process(&mut line);
                for k in 0..len {
                    data[base + k * stride] = line[k];
                }
            }
        }
    }
}

/// Copy a real field into a zero-padded complex array of `padded` shape.
pub(crate) fn to_padded(f: &DenseField, padded: &[usize]) -> Vec<Complex64> {
    let n = f.n;
    let total: usize = padded.iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    for (i, &v) in f.data.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let c = f.coord(i);
        let mut idx = 0usize;
        for a in 0..n {
            idx = idx * padded[a] + (c[a] - f.lo[a]) as usize;
        }
        out[idx] = Complex64::new(v, 0.0);
    }
    out
}

/// Linear convolution `(a * b)[k] = Σ_j a[j] b[k - j]` via FFT.
pub fn convolve(a: &DenseField, b: &DenseField) -> Result<DenseField> {
    let n = a.n;
    assert_eq!(n, b.n);
    let out_shape: Vec<usize> = (0..n).map(|i| a.shape[i] + b.shape[i] - 1).collect();
    let padded: Vec<usize> = out_shape.iter().map(|&l| fast_len(l)).collect();
    check_budget(padded.iter().map(|&x| x as u128).product::<u128>() * 2)?;
    let mut fa = to_padded(a, &padded);
    let mut fb = to_padded(b, &padded);
    fft_nd(&mut fa, &padded, false);
    fft_nd(&mut fb, &padded, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft_nd(&mut fa, &padded, true);
    let norm = 1.0 / fa.len() as f64;
    let mut lo = [0i64; MAX_DIM];
    for i in 0..n {
        lo[i] = a.lo[i] + b.lo[i];
    }
    let mut out = DenseField::zeros(n, lo, &out_shape)?;
    let total = out.data.len();
    for idx in 0..total {
        // row-major index in out_shape -> index in padded
        let mut rem = idx;
        let mut pidx = 0usize;
        let mut mult = 1usize;
        for ax in (0..n).rev() {
            let k = rem % out_shape[ax];
            rem /= out_shape[ax];
            pidx += k * mult;
            mult *= padded[ax];
        }
        out.data[idx] = fa[pidx].re * norm;
    }
    Ok(out)
}

/// Direct (quadratic) convolution, used for small kernels and as a cross-check.
pub fn convolve_direct(a: &DenseField, b: &DenseField) -> Result<DenseField> {
    let n = a.n;
    let out_shape: Vec<usize> = (0..n).map(|i| a.shape[i] + b.shape[i] - 1).collect();
    let mut lo = [0i64; MAX_DIM];
    for i in 0..n {
        lo[i] = a.lo[i] + b.lo[i];
    }
    let mut out = DenseField::zeros(n, lo, &out_shape)?;
    let bent = b.entries(0.0);
    for (i, &va) in a.data.iter().enumerate() {
        if va == 0.0 {
            continue;
        }
        let ca = a.coord(i);
        for (cb, vb) in &bent {
            let mut c = ca;
            for ax in 0..n {
                c[ax] += cb[ax];
            }
            let j = out.index(&c).unwrap();
            out.data[j] += va * vb;
        }
    }
    Ok(out)
}
