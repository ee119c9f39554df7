//! Image → angle-vector encoding: adaptive pooling, zigzag window scan and
//! per-image min-max normalization onto `[0, π]`.

use super::config::DaqcConfig;
use crate::error::{DaqcError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One image reduced to its normalized feature angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedSample {
    pub angles: Vec<f64>,
    pub label: usize,
}

/// Adaptive average pooling of a row-major `rows × cols` grid.
///
/// Output cell `(i, j)` averages input rows `⌊iH/N⌋..⌈(i+1)H/N⌉` and the
/// analogous column range, which is how adaptive pooling behaves when the input
/// size is not a multiple of the output size.
pub fn adaptive_avg_pool(
    image: &[f64],
    rows: usize,
    cols: usize,
    out_rows: usize,
    out_cols: usize,
) -> Result<Vec<f64>> {
    if rows == 0 || cols == 0 || out_rows == 0 || out_cols == 0 {
        return Err(DaqcError::Shape(format!(
            "degenerate pooling {rows}x{cols} -> {out_rows}x{out_cols}"
        )));
    }
    if rows < out_rows || cols < out_cols {
        return Err(DaqcError::Shape(format!(
            "cannot pool {rows}x{cols} up to {out_rows}x{out_cols}"
        )));
    }
    if image.len() != rows * cols {
        return Err(DaqcError::Shape(format!(
            "image has {} pixels, expected {rows}x{cols}",
            image.len()
        )));
    }
    if image.iter().any(|p| !p.is_finite()) {
        return Err(DaqcError::Numeric("non-finite pixel".into()));
    }
    let span = |i: usize, inp: usize, out: usize| ((i * inp) / out, ((i + 1) * inp).div_ceil(out));
    let mut pooled = Vec::with_capacity(out_rows * out_cols);
    for i in 0..out_rows {
        let (r0, r1) = span(i, rows, out_rows);
        for j in 0..out_cols {
            let (c0, c1) = span(j, cols, out_cols);
            let mut sum = 0.0;
            for r in r0..r1 {
                sum += image[r * cols + c0..r * cols + c1].iter().sum::<f64>();
            }
            pooled.push(sum / ((r1 - r0) * (c1 - c0)) as f64);
        }
    }
    Ok(pooled)
}

/// JPEG-style zigzag traversal of a `p × q` window as `(row, col)` pairs.
///
/// Anti-diagonal `s = r + c` is walked with the row decreasing when `s` is even
/// and increasing when `s` is odd, starting at `(0,0) → (0,1) → (1,0)`.
pub fn zigzag_order(p: usize, q: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(p * q);
    if p == 0 || q == 0 {
        return out;
    }
    for s in 0..(p + q - 1) {
        let r_min = s.saturating_sub(q - 1);
        let r_max = s.min(p - 1);
        if s % 2 == 0 {
            for r in (r_min..=r_max).rev() {
                out.push((r, s - r));
            }
        } else {
            for r in r_min..=r_max {
                out.push((r, s - r));
            }
        }
    }
    out
}

/// Pooled-grid index feeding each feature slot: windows in raster order, each
/// window scanned in zigzag order.
pub fn feature_layout(config: &DaqcConfig) -> Vec<(usize, usize)> {
    let (u, v) = config.window_grid();
    let zz = zigzag_order(config.window_rows, config.window_cols);
    let mut layout = Vec::with_capacity(config.n_features());
    for wu in 0..u {
        for wv in 0..v {
            for &(r, c) in &zz {
                layout.push((wu * config.window_rows + r, wv * config.window_cols + c));
            }
        }
    }
    layout
}

/// Map a feature vector affinely onto `[0, π]`. A constant vector maps to all zeros.
pub fn normalize_angles(features: &mut [f64]) {
    let (lo, hi) = features
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let range = hi - lo;
    if !(range > 0.0) {
        features.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    for x in features.iter_mut() {
        *x = (PI * (*x - lo) / range).clamp(0.0, PI);
    }
}

/// Pool, window, zigzag, concatenate and normalize one image.
pub fn encode_sample<P: Copy + Into<f64>>(
    pixels: &[P],
    rows: usize,
    cols: usize,
    label: usize,
    config: &DaqcConfig,
) -> Result<EncodedSample> {
    config.validate()?;
    let image: Vec<f64> = pixels.iter().map(|&p| p.into()).collect();
    let pooled = adaptive_avg_pool(&image, rows, cols, config.pooled_rows, config.pooled_cols)?;
    let mut angles: Vec<f64> = feature_layout(config)
        .into_iter()
        .map(|(r, c)| pooled[r * config.pooled_cols + c])
        .collect();
    normalize_angles(&mut angles);
    Ok(EncodedSample { angles, label })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute force: sort cells by anti-diagonal, breaking ties by column on even
    /// diagonals and by row on odd ones.
    fn zigzag_oracle(p: usize, q: usize) -> Vec<(usize, usize)> {
        let mut cells: Vec<(usize, usize)> =
            (0..p).flat_map(|r| (0..q).map(move |c| (r, c))).collect();
        cells.sort_by_key(|&(r, c)| {
            let s = r + c;
            (s, if s % 2 == 0 { c } else { r })
        });
        cells
    }

    #[test]
    fn zigzag_examples() {
        assert_eq!(zigzag_order(1, 1), vec![(0, 0)]);
        assert_eq!(zigzag_order(2, 2), vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        let expect = vec![
            (0, 0),
            (0, 1),
            (1, 0),
            (2, 0),
            (1, 1),
            (0, 2),
            (0, 3),
            (1, 2),
            (2, 1),
            (3, 0),
            (3, 1),
            (2, 2),
            (1, 3),
            (2, 3),
            (3, 2),
            (3, 3),
        ];
        assert_eq!(zigzag_oracle(4, 4), expect);
        assert_eq!(zigzag_order(4, 4), expect);
    }

    #[test]
    fn zigzag_matches_oracle_for_rectangles() {
        for p in 1..7 {
            for q in 1..7 {
                assert_eq!(zigzag_order(p, q), zigzag_oracle(p, q), "{p}x{q}");
            }
        }
    }

    #[test]
    fn zigzag_steps_are_local() {
        for p in 1..7 {
            for q in 1..7 {
                let z = zigzag_order(p, q);
                for w in z.windows(2) {
                    let dr = w[0].0.abs_diff(w[1].0);
                    let dc = w[0].1.abs_diff(w[1].1);
                    // either a diagonal step or a boundary move
                    assert!((dr == 1 && dc == 1) || dr + dc == 1, "{p}x{q} {w:?}");
                }
            }
        }
    }

    #[test]
    fn pool_constant_and_blocks() {
        let img = vec![3.5; 28 * 28];
        let out = adaptive_avg_pool(&img, 28, 28, 16, 16).unwrap();
        assert!(out.iter().all(|&v| (v - 3.5).abs() < 1e-12));

        let img: Vec<f64> = (0..16).map(|x| x as f64).collect();
        let out = adaptive_avg_pool(&img, 4, 4, 2, 2).unwrap();
        assert_eq!(out, vec![2.5, 4.5, 10.5, 12.5]);
    }

    #[test]
    fn pool_28_to_16_first_cell() {
        // window rows [0, ceil(28/16)=2) and cols [0, 2)
        let img: Vec<f64> = (0..28 * 28).map(|x| (x % 97) as f64).collect();
        let out = adaptive_avg_pool(&img, 28, 28, 16, 16).unwrap();
        let expect = (img[0] + img[1] + img[28] + img[29]) / 4.0;
        assert_abs_diff_eq!(out[0], expect, epsilon = 1e-12);
        // cell 1 spans rows [0,2) cols [floor(28/16)=1, ceil(56/16)=4)
        let expect1 = (img[1] + img[2] + img[3] + img[29] + img[30] + img[31]) / 6.0;
        assert_abs_diff_eq!(out[1], expect1, epsilon = 1e-12);
    }

    #[test]
    fn pool_errors() {
        assert!(matches!(
            adaptive_avg_pool(&[1.0; 4], 2, 2, 4, 4),
            Err(DaqcError::Shape(_))
        ));
        assert!(matches!(
            adaptive_avg_pool(&[], 0, 0, 1, 1),
            Err(DaqcError::Shape(_))
        ));
    }

    #[test]
    fn normalization_endpoints() {
        let cfg = DaqcConfig::default();
        let mut img = vec![100u8; 16 * 16];
        img[0] = 0;
        img[255] = 255;
        let s = encode_sample(&img, 16, 16, 1, &cfg).unwrap();
        assert_eq!(s.angles.len(), 256);
        assert_eq!(s.angles[0], 0.0);
        assert_abs_diff_eq!(s.angles[255], PI);
        assert!(s.angles.iter().all(|&a| (0.0..=PI).contains(&a)));
        assert_eq!(s.label, 1);
    }

    #[test]
    fn constant_image_gives_zero_angles() {
        let cfg = DaqcConfig::default();
        let s = encode_sample(&vec![42u8; 28 * 28], 28, 28, 0, &cfg).unwrap();
        assert!(s.angles.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn feature_order_follows_zigzag_then_raster() {
        let cfg = DaqcConfig::default();
        // distinct pixel values let us read back which pooled cell landed where
        let img: Vec<f64> = (0..256).map(|x| x as f64).collect();
        let s = encode_sample(&img, 16, 16, 0, &cfg).unwrap();
        let back: Vec<usize> = s
            .angles
            .iter()
            .map(|a| (a / PI * 255.0).round() as usize)
            .collect();
        assert_eq!(back[0], 0); // (0,0)
        assert_eq!(back[1], 1); // (0,1)
        assert_eq!(back[2], 16); // (1,0)
        assert_eq!(back[3], 32); // (2,0)
        // second window starts at pooled column 4
        assert_eq!(back[16], 4);
        // fifth window is the first of the second window row
        assert_eq!(back[64], 64);
    }

    #[test]
    fn ring_neighbours_are_grid_neighbours() {
        let cfg = DaqcConfig::default();
        let layout = feature_layout(&cfg);
        let n = cfg.n_qubits;
        for t in 0..cfg.n_cycles() {
            for q in 0..n - 1 {
                let a = layout[t * n + q];
                let b = layout[t * n + q + 1];
                assert!(a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1, "{a:?} {b:?}");
            }
        }
    }
}
