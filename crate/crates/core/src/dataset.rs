//! IDX image datasets, class subsets and seeded stratified splits.
//!
//! IDX files are big-endian: a 4-byte magic (`0x00000803` for a `u8` image
//! tensor, `0x00000801` for a `u8` label vector), one `u32` per dimension, then
//! the raw bytes.

use crate::circuit::{encode_sample, DaqcConfig, EncodedSample};
use crate::error::{DaqcError, Result};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::path::Path;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Grayscale images with class labels. Pixels stay `u8` until encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    name: String,
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    /// `pixels` holds `labels.len()` row-major `rows × cols` images back to back.
    pub fn new(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        pixels: Vec<u8>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(DaqcError::Shape(format!("image size {rows}x{cols}")));
        }
        if pixels.len() != labels.len() * rows * cols {
            return Err(DaqcError::Shape(format!(
                "{} pixels for {} images of {rows}x{cols}",
                pixels.len(),
                labels.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(DaqcError::Label(format!("label {y} outside {n_classes} classes")));
        }
        Ok(Self {
            name: name.into(),
            rows,
            cols,
            pixels,
            labels,
            n_classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// The listed samples, in the listed order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut pixels = Vec::with_capacity(indices.len() * self.rows * self.cols);
        for &i in indices {
            pixels.extend_from_slice(self.image(i));
        }
        Dataset {
            name: self.name.clone(),
            rows: self.rows,
            cols: self.cols,
            pixels,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// `count` samples drawn without replacement, kept in their original
    /// order. Returns the dataset unchanged when `count >= len`.
    pub fn subsample(&self, count: usize, seed: u64) -> Dataset {
        if count >= self.len() {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, self.len(), count).into_vec();
        picked.sort_unstable();
        self.select(&picked)
    }

    /// Encode every image for `config`.
    pub fn encode(&self, config: &DaqcConfig) -> Result<Vec<EncodedSample>> {
        config.validate()?;
        (0..self.len())
            .into_par_iter()
            .map(|i| encode_sample(self.image(i), self.rows, self.cols, self.labels[i], config))
            .collect()
    }
}

fn read_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| DaqcError::Format(format!("{what}: truncated header")))
}

/// Parse an IDX image tensor: `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let magic = read_u32(bytes, 0, "images")?;
    if magic != IMAGE_MAGIC {
        return Err(DaqcError::Format(format!(
            "images: magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"
        )));
    }
    let count = read_u32(bytes, 4, "images")? as usize;
    let rows = read_u32(bytes, 8, "images")? as usize;
    let cols = read_u32(bytes, 12, "images")? as usize;
    let body = &bytes[16..];
    let want = count * rows * cols;
    if body.len() != want {
        return Err(DaqcError::Format(format!(
            "images: {} data bytes for {count}x{rows}x{cols}",
            body.len()
        )));
    }
    Ok((count, rows, cols, body.to_vec()))
}

/// Parse an IDX label vector.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0, "labels")?;
    if magic != LABEL_MAGIC {
        return Err(DaqcError::Format(format!(
            "labels: magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"
        )));
    }
    let count = read_u32(bytes, 4, "labels")? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(DaqcError::Format(format!(
            "labels: {} data bytes for {count} labels",
            body.len()
        )));
    }
    Ok(body.to_vec())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| DaqcError::io(path, e))
}

/// Load an image/label IDX pair. The dataset is named after the image file and
/// declares `max label + 1` classes.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let (count, rows, cols, pixels) = parse_idx_images(&read_file(images_path)?)?;
    let labels = parse_idx_labels(&read_file(labels_path)?)?;
    if labels.len() != count {
        return Err(DaqcError::Format(format!(
            "{count} images but {} labels",
            labels.len()
        )));
    }
    let labels: Vec<usize> = labels.into_iter().map(usize::from).collect();
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let name = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, rows, cols, pixels, labels, n_classes)
}

/// IDX bytes for the images and labels of `dataset`.
pub fn encode_idx(dataset: &Dataset) -> Result<(Vec<u8>, Vec<u8>)> {
    let as_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| DaqcError::Format(format!("{what} {v} does not fit IDX")))
    };
    let mut images = Vec::with_capacity(16 + dataset.pixels.len());
    images.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for (v, what) in [(dataset.len(), "count"), (dataset.rows, "rows"), (dataset.cols, "cols")] {
        images.extend_from_slice(&as_u32(v, what)?.to_be_bytes());
    }
    images.extend_from_slice(&dataset.pixels);
    let mut labels = Vec::with_capacity(8 + dataset.len());
    labels.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    labels.extend_from_slice(&as_u32(dataset.len(), "count")?.to_be_bytes());
    for &y in &dataset.labels {
        labels.push(u8::try_from(y).map_err(|_| DaqcError::Format(format!("label {y} exceeds u8")))?);
    }
    Ok((images, labels))
}

pub fn write_idx(dataset: &Dataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    let (images, labels) = encode_idx(dataset)?;
    std::fs::write(images_path, images).map_err(|e| DaqcError::io(images_path, e))?;
    std::fs::write(labels_path, labels).map_err(|e| DaqcError::io(labels_path, e))
}

/// Keep some classes and relabel them `0..C` by list position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetRule {
    keep_classes: Vec<usize>,
}

impl SubsetRule {
    pub fn new(keep_classes: Vec<usize>) -> Result<Self> {
        if keep_classes.is_empty() {
            return Err(DaqcError::Config("subset keeps no classes".into()));
        }
        for (i, c) in keep_classes.iter().enumerate() {
            if keep_classes[..i].contains(c) {
                return Err(DaqcError::Config(format!("class {c} listed twice in subset")));
            }
        }
        Ok(Self { keep_classes })
    }

    /// `mnist-2/4/10`, `fashion-2/4/10`, `pneumonia-2`.
    pub fn named(name: &str) -> Result<Self> {
        let keep = match name {
            "mnist-2" | "fashion-2" | "pneumonia-2" => vec![0, 1],
            "mnist-4" => vec![0, 1, 4, 8],
            "fashion-4" => vec![0, 1, 8, 9],
            "mnist-10" | "fashion-10" => (0..10).collect(),
            _ => return Err(DaqcError::Config(format!("unknown subset `{name}`"))),
        };
        Self::new(keep)
    }

    pub fn keep_classes(&self) -> &[usize] {
        &self.keep_classes
    }

    pub fn n_classes(&self) -> usize {
        self.keep_classes.len()
    }

    /// New label of original class `c`, if kept.
    pub fn relabel(&self, c: usize) -> Option<usize> {
        self.keep_classes.iter().position(|&k| k == c)
    }
}

/// Samples of the kept classes in their original order, relabeled.
pub fn subset(dataset: &Dataset, rule: &SubsetRule) -> Dataset {
    let kept: Vec<(usize, usize)> = dataset
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, &y)| rule.relabel(y).map(|new| (i, new)))
        .collect();
    let indices: Vec<usize> = kept.iter().map(|&(i, _)| i).collect();
    let mut out = dataset.select(&indices);
    out.labels = kept.into_iter().map(|(_, y)| y).collect();
    out.n_classes = rule.n_classes();
    out
}

/// Validation count for a class of `n` samples: `round_half_up(fraction · n)`,
/// kept inside `1..n` so both sides see every class.
pub fn validation_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64 + 0.5).floor() as usize).clamp(1, n - 1)
}

/// Per-class seeded split into `(train, val)`. Both halves keep the original
/// sample order.
pub fn stratified_split(dataset: &Dataset, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(DaqcError::Config(format!(
            "val_fraction {val_fraction} outside (0, 1)"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes];
    for (i, &y) in dataset.labels.iter().enumerate() {
        by_class[y].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(dataset.len());
    let mut val = Vec::new();
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(DaqcError::Data(format!(
                "class {c} has {} sample(s), a split needs at least 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n_val = validation_count(members.len(), val_fraction);
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((dataset.select(&train), dataset.select(&val)))
}
