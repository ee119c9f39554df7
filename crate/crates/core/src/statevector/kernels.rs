//! Unchecked in-place kernels over raw amplitude slices.
//!
//! Qubit `q` is bit `q` of the amplitude index (little-endian). Callers validate
//! indices; these functions assume `amps.len()` is a power of two and every
//! target is in range.

use super::gates::Mat2;
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

#[inline(always)]
fn mul_i(z: Complex64) -> Complex64 {
    Complex64::new(-z.im, z.re)
}

#[inline(always)]
fn as_f64_mut(amps: &mut [Complex64]) -> &mut [f64] {
    // SAFETY: Complex64 is #[repr(C)] { re: f64, im: f64 }
    unsafe { std::slice::from_raw_parts_mut(amps.as_mut_ptr() as *mut f64, amps.len() * 2) }
}

/// Apply `m` to the pairs `(lo[i], hi[i])` of two equally long interleaved
/// `re, im` runs. Written over fixed-width lanes so it vectorizes.
#[inline(always)]
fn rotate_runs(lo: &mut [f64], hi: &mut [f64], m: &Mat2) {
    const W: usize = 4;
    let (ar, ai) = (m[0][0].re, m[0][0].im);
    let (br, bi) = (m[0][1].re, m[0][1].im);
    let (cr, ci) = (m[1][0].re, m[1][0].im);
    let (dr, di) = (m[1][1].re, m[1][1].im);
    let mut lc = lo.chunks_exact_mut(2 * W);
    let mut hc = hi.chunks_exact_mut(2 * W);
    for (l, h) in (&mut lc).zip(&mut hc) {
        let mut xr = [0.0; W];
        let mut xi = [0.0; W];
        let mut yr = [0.0; W];
        let mut yi = [0.0; W];
        for k in 0..W {
            xr[k] = l[2 * k];
            xi[k] = l[2 * k + 1];
            yr[k] = h[2 * k];
            yi[k] = h[2 * k + 1];
        }
        for k in 0..W {
            l[2 * k] = ar * xr[k] - ai * xi[k] + br * yr[k] - bi * yi[k];
            l[2 * k + 1] = ar * xi[k] + ai * xr[k] + br * yi[k] + bi * yr[k];
            h[2 * k] = cr * xr[k] - ci * xi[k] + dr * yr[k] - di * yi[k];
            h[2 * k + 1] = cr * xi[k] + ci * xr[k] + dr * yi[k] + di * yr[k];
        }
    }
    let (l, h) = (lc.into_remainder(), hc.into_remainder());
    for k in 0..l.len() / 2 {
        let (xr, xi, yr, yi) = (l[2 * k], l[2 * k + 1], h[2 * k], h[2 * k + 1]);
        l[2 * k] = ar * xr - ai * xi + br * yr - bi * yi;
        l[2 * k + 1] = ar * xi + ai * xr + br * yi + bi * yr;
        h[2 * k] = cr * xr - ci * xi + dr * yr - di * yi;
        h[2 * k + 1] = cr * xi + ci * xr + dr * yi + di * yr;
    }
}

pub fn apply_1q(amps: &mut [Complex64], target: usize, m: &Mat2) {
    let stride = 1usize << target;
    let flat = as_f64_mut(amps);
    match stride {
        1 => {
            // pairs are adjacent: gather four pairs per step
            let [[a, b], [c, d]] = *m;
            for q in flat.chunks_exact_mut(16) {
                let mut xr = [0.0; 4];
                let mut xi = [0.0; 4];
                let mut yr = [0.0; 4];
                let mut yi = [0.0; 4];
                for k in 0..4 {
                    xr[k] = q[4 * k];
                    xi[k] = q[4 * k + 1];
                    yr[k] = q[4 * k + 2];
                    yi[k] = q[4 * k + 3];
                }
                for k in 0..4 {
                    q[4 * k] = a.re * xr[k] - a.im * xi[k] + b.re * yr[k] - b.im * yi[k];
                    q[4 * k + 1] = a.re * xi[k] + a.im * xr[k] + b.re * yi[k] + b.im * yr[k];
                    q[4 * k + 2] = c.re * xr[k] - c.im * xi[k] + d.re * yr[k] - d.im * yi[k];
                    q[4 * k + 3] = c.re * xi[k] + c.im * xr[k] + d.re * yi[k] + d.im * yr[k];
                }
            }
            let rem = flat.len() % 16;
            let tail = flat.len() - rem;
            for pair in flat[tail..].chunks_exact_mut(4) {
                let (lo, hi) = pair.split_at_mut(2);
                rotate_runs(lo, hi, m);
            }
        }
        _ => {
            for chunk in flat.chunks_exact_mut(4 * stride) {
                let (lo, hi) = chunk.split_at_mut(2 * stride);
                rotate_runs(lo, hi, m);
            }
        }
    }
}

/// Fixed echoed-cross-resonance gate with `first` as the low bit of the local index.
pub fn apply_ecr(amps: &mut [Complex64], first: usize, second: usize) {
    let (lo, hi) = if first < second {
        (first, second)
    } else {
        (second, first)
    };
    let ma = 1usize << first;
    let mb = 1usize << second;
    let run = 1usize << lo;
    let h = FRAC_1_SQRT_2;
    let n = amps.len();
    let mut outer = 0;
    while outer < n {
        let mut mid = outer;
        while mid < outer + (1usize << hi) {
            for i0 in mid..mid + run {
                let (i1, i2, i3) = (i0 | ma, i0 | mb, i0 | ma | mb);
                let (a0, a1, a2, a3) = (amps[i0], amps[i1], amps[i2], amps[i3]);
                amps[i0] = (a1 + mul_i(a3)) * h;
                amps[i1] = (a0 - mul_i(a2)) * h;
                amps[i2] = (mul_i(a1) + a3) * h;
                amps[i3] = (a2 - mul_i(a0)) * h;
            }
            mid += 2 * run;
        }
        outer += 2usize << hi;
    }
}

/// ⟨Z_q⟩ for every qubit in one pass.
pub fn expect_z_all(amps: &[Complex64], n_qubits: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_qubits];
    for (q, slot) in out.iter_mut().enumerate() {
        let stride = 1usize << q;
        let mut acc = 0.0;
        for chunk in amps.chunks_exact(2 * stride) {
            let (lo, hi) = chunk.split_at(stride);
            let p0: f64 = lo.iter().map(|a| a.norm_sqr()).sum();
            let p1: f64 = hi.iter().map(|a| a.norm_sqr()).sum();
            acc += p0 - p1;
        }
        *slot = acc;
    }
    out
}

/// ⟨⊗_{q ∈ mask} Z_q⟩.
pub fn expect_z_mask(amps: &[Complex64], mask: usize) -> f64 {
    amps.iter()
        .enumerate()
        .map(|(b, a)| {
            let p = a.norm_sqr();
            if (b & mask).count_ones() % 2 == 0 {
                p
            } else {
                -p
            }
        })
        .sum()
}

/// Tensor product `v_{n-1} ⊗ … ⊗ v_0` written in little-endian order.
pub fn product_state(qubits: &[[Complex64; 2]]) -> Vec<Complex64> {
    let mut amps = Vec::with_capacity(1usize << qubits.len());
    amps.push(Complex64::new(1.0, 0.0));
    for v in qubits {
        let len = amps.len();
        amps.extend_from_within(..len);
        let (lo, hi) = amps.split_at_mut(len);
        for a in lo.iter_mut() {
            *a *= v[0];
        }
        for a in hi.iter_mut() {
            *a *= v[1];
        }
    }
    amps
}

/// Multiply each amplitude by `Σ_q w_q (1 - 2 bit_q)`, i.e. apply the diagonal
/// observable `Σ_q w_q Z_q`.
pub fn apply_weighted_z_sum(amps: &mut [Complex64], weights: &[f64]) {
    // diagonal built by doubling, bit q contributes ±w_q
    let mut diag = Vec::with_capacity(amps.len());
    diag.push(0.0);
    for &w in weights {
        let len = diag.len();
        diag.extend_from_within(..len);
        let (lo, hi) = diag.split_at_mut(len);
        for d in lo.iter_mut() {
            *d += w;
        }
        for d in hi.iter_mut() {
            *d -= w;
        }
    }
    for (a, d) in amps.iter_mut().zip(diag) {
        *a *= d;
    }
}

/// Multiply each amplitude by the ±1 eigenvalue of `⊗_{q ∈ mask} Z_q`.
pub fn apply_z_mask(amps: &mut [Complex64], mask: usize) {
    for (b, a) in amps.iter_mut().enumerate() {
        if (b & mask).count_ones() % 2 == 1 {
            *a = -*a;
        }
    }
}
