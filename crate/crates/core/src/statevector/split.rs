//! Split-complex storage (separate real and imaginary arrays) and its kernels.
//!
//! The execution engine works in this layout because every kernel becomes
//! plain lane-wise arithmetic with no re/im shuffles. Indexing matches
//! [`super::kernels`]: qubit `q` is bit `q` of the amplitude index.

use super::gates::Mat2;
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Split {
    pub fn basis_zero(n_qubits: usize) -> Self {
        let len = 1usize << n_qubits;
        let mut re = vec![0.0; len];
        re[0] = 1.0;
        Self {
            re,
            im: vec![0.0; len],
        }
    }

    /// Tensor product with `qubits[q]` on wire `q`.
    pub fn product(qubits: &[[Complex64; 2]]) -> Self {
        let len = 1usize << qubits.len();
        let mut re = Vec::with_capacity(len);
        let mut im = Vec::with_capacity(len);
        re.push(1.0);
        im.push(0.0);
        for v in qubits {
            let n = re.len();
            re.extend_from_within(..n);
            im.extend_from_within(..n);
            let (rl, rh) = re.split_at_mut(n);
            let (il, ih) = im.split_at_mut(n);
            for (r, i) in rl.iter_mut().zip(il.iter_mut()) {
                let (a, b) = (*r, *i);
                *r = a * v[0].re - b * v[0].im;
                *i = a * v[0].im + b * v[0].re;
            }
            for (r, i) in rh.iter_mut().zip(ih.iter_mut()) {
                let (a, b) = (*r, *i);
                *r = a * v[1].re - b * v[1].im;
                *i = a * v[1].im + b * v[1].re;
            }
        }
        Self { re, im }
    }

    pub fn from_complex(amps: &[Complex64]) -> Self {
        Self {
            re: amps.iter().map(|a| a.re).collect(),
            im: amps.iter().map(|a| a.im).collect(),
        }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    }

    /// ⟨⊗_{q ∈ mask} Z_q⟩.
    pub fn expect_z_mask(&self, mask: usize) -> f64 {
        let mut acc = 0.0;
        for (b, (r, i)) in self.re.iter().zip(&self.im).enumerate() {
            let p = r * r + i * i;
            if (b & mask).count_ones() % 2 == 0 {
                acc += p;
            } else {
                acc -= p;
            }
        }
        acc
    }
}

/// Pair positions inside an 8-element chunk for a wire of stride `S < 8`:
/// `lo[j]` has the wire bit clear and `lo[j] + S` has it set.
#[inline(always)]
const fn lanes<const S: usize>() -> [usize; 4] {
    let mut lo = [0; 4];
    let mut j = 0;
    while j < 4 {
        lo[j] = (j / S) * 2 * S + j % S;
        j += 1;
    }
    lo
}

#[derive(Clone, Copy)]
struct Coef {
    ar: f64,
    ai: f64,
    br: f64,
    bi: f64,
    cr: f64,
    ci: f64,
    dr: f64,
    di: f64,
}

impl Coef {
    #[inline(always)]
    fn new(m: &Mat2) -> Self {
        Self {
            ar: m[0][0].re,
            ai: m[0][0].im,
            br: m[0][1].re,
            bi: m[0][1].im,
            cr: m[1][0].re,
            ci: m[1][0].im,
            dr: m[1][1].re,
            di: m[1][1].im,
        }
    }

    /// `(x, y) ← M (x, y)` for one amplitude pair given as `(re, im)` parts.
    #[inline(always)]
    fn apply(&self, a: f64, b: f64, c: f64, d: f64) -> [f64; 4] {
        [
            self.ar * a - self.ai * b + self.br * c - self.bi * d,
            self.ar * b + self.ai * a + self.br * d + self.bi * c,
            self.cr * a - self.ci * b + self.dr * c - self.di * d,
            self.cr * b + self.ci * a + self.dr * d + self.di * c,
        ]
    }
}

#[inline(always)]
fn rotate_runs(xr: &mut [f64], xi: &mut [f64], yr: &mut [f64], yi: &mut [f64], c: Coef) {
    let n = xr.len();
    let (xi, yr, yi) = (&mut xi[..n], &mut yr[..n], &mut yi[..n]);
    for k in 0..n {
        let [a, b, e, f] = c.apply(xr[k], xi[k], yr[k], yi[k]);
        xr[k] = a;
        xi[k] = b;
        yr[k] = e;
        yi[k] = f;
    }
}

#[inline(always)]
fn rotate_small<const S: usize>(re: &mut [f64], im: &mut [f64], c: Coef) {
    let lo = const { lanes::<S>() };
    for (r, i) in re.chunks_exact_mut(8).zip(im.chunks_exact_mut(8)) {
        let r: &mut [f64; 8] = r.try_into().unwrap();
        let i: &mut [f64; 8] = i.try_into().unwrap();
        let mut out = [[0.0; 4]; 4];
        for j in 0..4 {
            out[j] = c.apply(r[lo[j]], i[lo[j]], r[lo[j] + S], i[lo[j] + S]);
        }
        for j in 0..4 {
            r[lo[j]] = out[j][0];
            i[lo[j]] = out[j][1];
            r[lo[j] + S] = out[j][2];
            i[lo[j] + S] = out[j][3];
        }
    }
}

/// Apply a 2×2 matrix to wire `target`.
pub fn apply_1q(re: &mut [f64], im: &mut [f64], target: usize, m: &Mat2) {
    let c = Coef::new(m);
    let stride = 1usize << target;
    if re.len() < 8 {
        for (r, i) in re.chunks_exact_mut(2 * stride).zip(im.chunks_exact_mut(2 * stride)) {
            let (xr, yr) = r.split_at_mut(stride);
            let (xi, yi) = i.split_at_mut(stride);
            rotate_runs(xr, xi, yr, yi, c);
        }
        return;
    }
    match stride {
        1 => rotate_small::<1>(re, im, c),
        2 => rotate_small::<2>(re, im, c),
        4 => rotate_small::<4>(re, im, c),
        _ => {
            for (r, i) in re.chunks_exact_mut(2 * stride).zip(im.chunks_exact_mut(2 * stride)) {
                let (xr, yr) = r.split_at_mut(stride);
                let (xi, yi) = i.split_at_mut(stride);
                rotate_runs(xr, xi, yr, yi, c);
            }
        }
    }
}

/// ECR on one group of four amplitudes in local order `bit(first) + 2·bit(second)`.
#[inline(always)]
fn ecr4(a: [f64; 8]) -> [f64; 8] {
    let [a0r, a0i, a1r, a1i, a2r, a2i, a3r, a3i] = a;
    let h = FRAC_1_SQRT_2;
    [
        (a1r - a3i) * h,
        (a1i + a3r) * h,
        (a0r + a2i) * h,
        (a0i - a2r) * h,
        (a3r - a1i) * h,
        (a1r + a3i) * h,
        (a2r + a0i) * h,
        (a2i - a0r) * h,
    ]
}

/// ECR on four equally long runs holding local indices 0..3.
#[inline(always)]
fn ecr_runs(r: [&mut [f64]; 4], i: [&mut [f64]; 4]) {
    let [r0, r1, r2, r3] = r;
    let [i0, i1, i2, i3] = i;
    let n = r0.len();
    let (r1, r2, r3) = (&mut r1[..n], &mut r2[..n], &mut r3[..n]);
    let (i0, i1, i2, i3) = (&mut i0[..n], &mut i1[..n], &mut i2[..n], &mut i3[..n]);
    for k in 0..n {
        let o = ecr4([r0[k], i0[k], r1[k], i1[k], r2[k], i2[k], r3[k], i3[k]]);
        r0[k] = o[0];
        i0[k] = o[1];
        r1[k] = o[2];
        i1[k] = o[3];
        r2[k] = o[4];
        i2[k] = o[5];
        r3[k] = o[6];
        i3[k] = o[7];
    }
}

/// ECR whose low wire has stride `S < 8` and high wire stride at least 8.
/// `h0`/`h1` are the halves of one high-wire block.
#[inline(always)]
fn ecr_small_low<const S: usize>(
    rh: [&mut [f64]; 2],
    ih: [&mut [f64]; 2],
    low_is_first: bool,
) {
    let lo = const { lanes::<S>() };
    let [r0, r1] = rh;
    let [i0, i1] = ih;
    for (((ra, rb), ia), ib) in r0
        .chunks_exact_mut(8)
        .zip(r1.chunks_exact_mut(8))
        .zip(i0.chunks_exact_mut(8))
        .zip(i1.chunks_exact_mut(8))
    {
        let ra: &mut [f64; 8] = ra.try_into().unwrap();
        let rb: &mut [f64; 8] = rb.try_into().unwrap();
        let ia: &mut [f64; 8] = ia.try_into().unwrap();
        let ib: &mut [f64; 8] = ib.try_into().unwrap();
        for &p in &lo {
            let q = p + S;
            // (high bit, low bit): 00 = a[p], 01 = a[q], 10 = b[p], 11 = b[q]
            let (x01, x10) = if low_is_first {
                ([ra[q], ia[q]], [rb[p], ib[p]])
            } else {
                ([rb[p], ib[p]], [ra[q], ia[q]])
            };
            let o = ecr4([ra[p], ia[p], x01[0], x01[1], x10[0], x10[1], rb[q], ib[q]]);
            ra[p] = o[0];
            ia[p] = o[1];
            let (y01, y10) = ([o[2], o[3]], [o[4], o[5]]);
            let (v01, v10) = if low_is_first { (y01, y10) } else { (y10, y01) };
            ra[q] = v01[0];
            ia[q] = v01[1];
            rb[p] = v10[0];
            ib[p] = v10[1];
            rb[q] = o[6];
            ib[q] = o[7];
        }
    }
}

/// Fixed ECR gate; local index is `bit(first) + 2·bit(second)`.
pub fn apply_ecr(re: &mut [f64], im: &mut [f64], first: usize, second: usize) {
    let (lo, hi) = (first.min(second), first.max(second));
    let (sl, sh) = (1usize << lo, 1usize << hi);
    if sh < 8 {
        // both wires inside an 8-amplitude chunk: plain indexed loop
        let (ma, mb) = (1usize << first, 1usize << second);
        for i0 in 0..re.len() {
            if i0 & (ma | mb) != 0 {
                continue;
            }
            let idx = [i0, i0 | ma, i0 | mb, i0 | ma | mb];
            let mut a = [0.0; 8];
            for (k, &j) in idx.iter().enumerate() {
                a[2 * k] = re[j];
                a[2 * k + 1] = im[j];
            }
            let o = ecr4(a);
            for (k, &j) in idx.iter().enumerate() {
                re[j] = o[2 * k];
                im[j] = o[2 * k + 1];
            }
        }
        return;
    }
    let low_is_first = first == lo;
    for (rb, ib) in re.chunks_exact_mut(2 * sh).zip(im.chunks_exact_mut(2 * sh)) {
        let (rh0, rh1) = rb.split_at_mut(sh);
        let (ih0, ih1) = ib.split_at_mut(sh);
        match sl {
            1 => ecr_small_low::<1>([rh0, rh1], [ih0, ih1], low_is_first),
            2 => ecr_small_low::<2>([rh0, rh1], [ih0, ih1], low_is_first),
            4 => ecr_small_low::<4>([rh0, rh1], [ih0, ih1], low_is_first),
            _ => {
                for (((r0c, r1c), i0c), i1c) in rh0
                    .chunks_exact_mut(2 * sl)
                    .zip(rh1.chunks_exact_mut(2 * sl))
                    .zip(ih0.chunks_exact_mut(2 * sl))
                    .zip(ih1.chunks_exact_mut(2 * sl))
                {
                    // runs indexed by (hi bit, lo bit)
                    let (r00, r01) = r0c.split_at_mut(sl);
                    let (r10, r11) = r1c.split_at_mut(sl);
                    let (i00, i01) = i0c.split_at_mut(sl);
                    let (i10, i11) = i1c.split_at_mut(sl);
                    if low_is_first {
                        ecr_runs([r00, r01, r10, r11], [i00, i01, i10, i11]);
                    } else {
                        ecr_runs([r00, r10, r01, r11], [i00, i10, i01, i11]);
                    }
                }
            }
        }
    }
}

/// Four-lane accumulator for the entries of a cross-reduced 2×2 matrix.
#[derive(Default)]
struct CrossAcc {
    // entries 00, 01, 10, 11, each as (re, im) lanes
    v: [[f64; 4]; 8],
}

impl CrossAcc {
    /// Add x·conj(u), x·conj(v), y·conj(u), y·conj(v) in lane `l`.
    #[inline(always)]
    fn add(&mut self, l: usize, x: [f64; 2], y: [f64; 2], u: [f64; 2], v: [f64; 2]) {
        let prods = [(x, u), (x, v), (y, u), (y, v)];
        for (e, (a, b)) in prods.into_iter().enumerate() {
            self.v[2 * e][l] += a[0] * b[0] + a[1] * b[1];
            self.v[2 * e + 1][l] += a[1] * b[0] - a[0] * b[1];
        }
    }

    /// Lane-wise [`CrossAcc::add`] over four consecutive pairs, each argument
    /// given as `[re lanes, im lanes]`.
    #[inline(always)]
    fn add4(&mut self, x: [[f64; 4]; 2], y: [[f64; 4]; 2], u: [[f64; 4]; 2], v: [[f64; 4]; 2]) {
        let prods = [(x, u), (x, v), (y, u), (y, v)];
        for (e, (a, b)) in prods.into_iter().enumerate() {
            let (re, im) = self.v.split_at_mut(2 * e + 1);
            let (re, im) = (&mut re[2 * e], &mut im[0]);
            for l in 0..4 {
                re[l] += a[0][l] * b[0][l] + a[1][l] * b[1][l];
                im[l] += a[1][l] * b[0][l] - a[0][l] * b[1][l];
            }
        }
    }

    fn finish(&self) -> Mat2 {
        let s = |e: usize| {
            let re: f64 = self.v[2 * e].iter().sum();
            let im: f64 = self.v[2 * e + 1].iter().sum();
            Complex64::new(re, im)
        };
        [[s(0), s(1)], [s(2), s(3)]]
    }
}

#[inline(always)]
fn cross_small<const S: usize>(pr: &[f64], pi: &[f64], lr: &[f64], li: &[f64], acc: &mut CrossAcc) {
    let lo = const { lanes::<S>() };
    for (((a, b), c), d) in pr
        .chunks_exact(8)
        .zip(pi.chunks_exact(8))
        .zip(lr.chunks_exact(8))
        .zip(li.chunks_exact(8))
    {
        for (l, &p) in lo.iter().enumerate() {
            let q = p + S;
            acc.add(l, [a[p], b[p]], [a[q], b[q]], [c[p], d[p]], [c[q], d[q]]);
        }
    }
}

/// `C[i][j] = Σ_r ψ[r,i] · conj(λ[r,j])` over the other wires, for wire `target`.
pub fn cross_reduced(pr: &[f64], pi: &[f64], lr: &[f64], li: &[f64], target: usize) -> Mat2 {
    let stride = 1usize << target;
    let mut acc = CrossAcc::default();
    if pr.len() >= 8 && stride < 8 {
        match stride {
            1 => cross_small::<1>(pr, pi, lr, li, &mut acc),
            2 => cross_small::<2>(pr, pi, lr, li, &mut acc),
            _ => cross_small::<4>(pr, pi, lr, li, &mut acc),
        }
        return acc.finish();
    }
    for (((a, b), c), d) in pr
        .chunks_exact(2 * stride)
        .zip(pi.chunks_exact(2 * stride))
        .zip(lr.chunks_exact(2 * stride))
        .zip(li.chunks_exact(2 * stride))
    {
        let (xr, yr) = a.split_at(stride);
        let (xi, yi) = b.split_at(stride);
        let (ur, vr) = c.split_at(stride);
        let (ui, vi) = d.split_at(stride);
        let mut k = 0;
        while k + 4 <= stride {
            let g = |s: &[f64]| -> [f64; 4] { s[k..k + 4].try_into().unwrap() };
            acc.add4(
                [g(xr), g(xi)],
                [g(yr), g(yi)],
                [g(ur), g(ui)],
                [g(vr), g(vi)],
            );
            k += 4;
        }
        for j in k..stride {
            acc.add(0, [xr[j], xi[j]], [yr[j], yi[j]], [ur[j], ui[j]], [vr[j], vi[j]]);
        }
    }
    acc.finish()
}
