//! Cache blocking for runs of gates.
//!
//! A run of gates whose wires all fall in a small set `B` only mixes amplitudes
//! that agree on the wires outside `B`. So the state splits into independent
//! blocks of `2^|B|` amplitudes, and the whole run can be applied to one block
//! while it sits in cache instead of streaming the full state once per gate.
//!
//! A block keeps wires `0..low` in place (contiguous runs of `2^low`
//! amplitudes) and appends the `high` wires above them.

use std::ops::Range;

/// log2 of the block size in amplitudes.
pub const BLOCK_BITS: usize = 12;
/// Shortest contiguous run worth gathering.
const MIN_LOW: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub low: usize,
    pub high: Vec<usize>,
}

impl Layout {
    /// Position of global wire `q` inside a block.
    pub fn local(&self, q: usize) -> usize {
        if q < self.low {
            q
        } else {
            self.low
                + self
                    .high
                    .iter()
                    .position(|&h| h == q)
                    .expect("wire outside block layout")
        }
    }

    fn bits(&self) -> usize {
        self.low + self.high.len()
    }
}

/// Largest `low` such that `low` plus the number of wires in `wires` at or
/// above `low` fits in a block.
fn best_low(n_qubits: usize, wires: &[bool]) -> usize {
    let cap = BLOCK_BITS.min(n_qubits);
    (0..=cap)
        .rev()
        .find(|&low| low + wires[low..].iter().filter(|&&w| w).count() <= BLOCK_BITS)
        .unwrap_or(0)
}

fn layout_for(n_qubits: usize, wires: &[bool]) -> Layout {
    if n_qubits <= BLOCK_BITS {
        return Layout {
            low: n_qubits,
            high: Vec::new(),
        };
    }
    let low = best_low(n_qubits, wires);
    let high = (low..n_qubits).filter(|&q| wires[q]).collect();
    Layout { low, high }
}

/// Split a sequence of gates (given by the wires each one touches) into
/// consecutive segments that each fit one block layout.
pub fn plan(n_qubits: usize, gate_wires: &[Vec<usize>]) -> Vec<(Range<usize>, Layout)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut wires = vec![false; n_qubits];
    let floor = MIN_LOW.min(n_qubits);
    for (i, g) in gate_wires.iter().enumerate() {
        let mut trial = wires.clone();
        for &q in g {
            trial[q] = true;
        }
        if i > start && n_qubits > BLOCK_BITS && best_low(n_qubits, &trial) < floor {
            out.push((start..i, layout_for(n_qubits, &wires)));
            start = i;
            trial = vec![false; n_qubits];
            for &q in g {
                trial[q] = true;
            }
        }
        wires = trial;
    }
    if start < gate_wires.len() {
        out.push((start..gate_wires.len(), layout_for(n_qubits, &wires)));
    }
    out
}

/// Global offsets of the `2^|high|` runs of one block, relative to its base.
fn run_offsets(layout: &Layout) -> Vec<usize> {
    let mut offs = vec![0usize];
    for &h in &layout.high {
        let len = offs.len();
        for i in 0..len {
            let o = offs[i] | (1usize << h);
            offs.push(o);
        }
    }
    offs
}

/// Base index of every block: all assignments of the wires outside the block.
fn block_bases(n_qubits: usize, layout: &Layout) -> Vec<usize> {
    let mut bases = vec![0usize];
    for q in layout.low..n_qubits {
        if layout.high.contains(&q) {
            continue;
        }
        let len = bases.len();
        for i in 0..len {
            let b = bases[i] | (1usize << q);
            bases.push(b);
        }
    }
    bases
}

/// Run `f` on every block of `K` parallel arrays sharing one index space.
pub fn for_each_block<const K: usize>(
    mut arrs: [&mut [f64]; K],
    n_qubits: usize,
    layout: &Layout,
    mut f: impl FnMut([&mut [f64]; K]),
) {
    if layout.high.is_empty() {
        let size = 1usize << layout.low;
        for b in 0..(1usize << n_qubits) / size {
            let range = b * size..(b + 1) * size;
            f(arrs.each_mut().map(|a| &mut a[range.clone()]));
        }
        return;
    }
    let run = 1usize << layout.low;
    let offs = run_offsets(layout);
    let mut bufs: [Vec<f64>; K] = std::array::from_fn(|_| vec![0.0; 1usize << layout.bits()]);
    for base in block_bases(n_qubits, layout) {
        for (buf, arr) in bufs.iter_mut().zip(arrs.iter()) {
            for (dst, &o) in buf.chunks_exact_mut(run).zip(&offs) {
                dst.copy_from_slice(&arr[base + o..base + o + run]);
            }
        }
        f(bufs.each_mut().map(|b| b.as_mut_slice()));
        for (buf, arr) in bufs.iter().zip(arrs.iter_mut()) {
            for (src, &o) in buf.chunks_exact(run).zip(&offs) {
                arr[base + o..base + o + run].copy_from_slice(src);
            }
        }
    }
}
