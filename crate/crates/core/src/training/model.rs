//! Hybrid model: circuit expectations followed by a linear readout.

use crate::circuit::{run_circuit, CircuitSpec, EncodedSample, Observable};
use crate::error::{DaqcError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Circuit angles plus readout `logits = W·m + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub theta: Vec<f64>,
    /// Row-major `n_classes × n_qubits`.
    pub readout_w: Vec<f64>,
    pub readout_b: Vec<f64>,
    pub n_qubits: usize,
    pub n_classes: usize,
}

/// Gradients with the same layout as [`ModelParams`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelGrads {
    pub theta: Vec<f64>,
    pub readout_w: Vec<f64>,
    pub readout_b: Vec<f64>,
}

impl ModelGrads {
    pub fn zeros_like(p: &ModelParams) -> Self {
        Self {
            theta: vec![0.0; p.theta.len()],
            readout_w: vec![0.0; p.readout_w.len()],
            readout_b: vec![0.0; p.readout_b.len()],
        }
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &ModelGrads, scale: f64) {
        for (a, b) in self
            .theta
            .iter_mut()
            .chain(self.readout_w.iter_mut())
            .chain(self.readout_b.iter_mut())
            .zip(other.theta.iter().chain(&other.readout_w).chain(&other.readout_b))
        {
            *a += scale * b;
        }
    }

    /// L2 norm over the circuit-parameter block only.
    pub fn theta_norm(&self) -> f64 {
        self.theta.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

impl ModelParams {
    /// `θ ~ U(0, 2π)`, `W, b ~ U(−1/√n, 1/√n)`, all from one seeded stream.
    pub fn init(spec: &CircuitSpec, n_classes: usize, seed: u64) -> Result<Self> {
        if n_classes < 2 {
            return Err(DaqcError::Config(format!(
                "need at least two classes, got {n_classes}"
            )));
        }
        let n = spec.n_qubits();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = (0..spec.n_params())
            .map(|_| rng.gen_range(0.0..2.0 * PI))
            .collect();
        let bound = 1.0 / (n as f64).sqrt();
        let readout_w = (0..n_classes * n)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        let readout_b = (0..n_classes).map(|_| rng.gen_range(-bound..bound)).collect();
        Ok(Self {
            theta,
            readout_w,
            readout_b,
            n_qubits: n,
            n_classes,
        })
    }

    pub fn n_trainable(&self) -> usize {
        self.theta.len() + self.readout_w.len() + self.readout_b.len()
    }

    /// Shape and finiteness checks against a circuit.
    pub fn check(&self, spec: &CircuitSpec) -> Result<()> {
        if self.n_qubits != spec.n_qubits() || self.theta.len() != spec.n_params() {
            return Err(DaqcError::Shape(format!(
                "parameters for {} qubits / {} angles, circuit has {} / {}",
                self.n_qubits,
                self.theta.len(),
                spec.n_qubits(),
                spec.n_params()
            )));
        }
        if self.readout_w.len() != self.n_classes * self.n_qubits
            || self.readout_b.len() != self.n_classes
        {
            return Err(DaqcError::Shape("readout shape does not match class count".into()));
        }
        if self
            .theta
            .iter()
            .chain(&self.readout_w)
            .chain(&self.readout_b)
            .any(|x| !x.is_finite())
        {
            return Err(DaqcError::Numeric("non-finite model parameter".into()));
        }
        Ok(())
    }

    /// `W·m + b`.
    pub fn readout(&self, m: &[f64]) -> Vec<f64> {
        self.readout_w
            .chunks_exact(self.n_qubits)
            .zip(&self.readout_b)
            .map(|(row, b)| row.iter().zip(m).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

/// Logits and the Z expectations they were computed from.
pub fn forward(
    spec: &CircuitSpec,
    sample: &EncodedSample,
    params: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    params.check(spec)?;
    let m = run_circuit(spec, sample, &params.theta)?;
    Ok((params.readout(&m), m))
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `−log softmax(logits)[label]`.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(DaqcError::Label(format!(
            "label {label} outside {} classes",
            logits.len()
        )));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok(lse - logits[label])
}

/// Mean cross-entropy over a batch.
pub fn loss(logits: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if logits.len() != labels.len() {
        return Err(DaqcError::Shape(format!(
            "{} logit rows for {} labels",
            logits.len(),
            labels.len()
        )));
    }
    if logits.is_empty() {
        return Err(DaqcError::Shape("empty batch".into()));
    }
    let mut total = 0.0;
    for (l, &y) in logits.iter().zip(labels) {
        total += cross_entropy(l, y)?;
    }
    Ok(total / logits.len() as f64)
}

/// Parameter-shift gradient of one Pauli-Z cost with respect to the circuit angles.
pub fn grad_parameter_shift(
    spec: &CircuitSpec,
    sample: &EncodedSample,
    cost: &Observable,
    theta: &[f64],
) -> Result<Vec<f64>> {
    let mut g = spec
        .program()
        .parameter_shift(&sample.angles, theta, std::slice::from_ref(cost))?;
    Ok(g.pop().expect("one observable"))
}

/// Loss and exact gradient for one sample, via one forward and one adjoint sweep.
pub fn grad_adjoint(
    spec: &CircuitSpec,
    sample: &EncodedSample,
    params: &ModelParams,
) -> Result<(f64, ModelGrads)> {
    params.check(spec)?;
    let n = params.n_qubits;
    let c = params.n_classes;
    if sample.label >= c {
        return Err(DaqcError::Label(format!(
            "label {} outside {c} classes",
            sample.label
        )));
    }
    let mut out = None;
    let (_, theta) = spec
        .program()
        .adjoint_gradient(&sample.angles, &params.theta, |state| {
            let m = state.expect_z_all();
            let logits = params.readout(&m);
            let mut dl = softmax(&logits);
            dl[sample.label] -= 1.0;
            // ∂L/∂m = Wᵀ ∂L/∂ℓ
            let mut dm = vec![0.0; n];
            for (row, d) in params.readout_w.chunks_exact(n).zip(&dl) {
                for (acc, w) in dm.iter_mut().zip(row) {
                    *acc += w * d;
                }
            }
            let mut dw = Vec::with_capacity(c * n);
            for d in &dl {
                dw.extend(m.iter().map(|x| d * x));
            }
            out = Some((cross_entropy(&logits, sample.label)?, dw, dl));
            state.weighted_z_action(&dm)
        })?;
    let (loss, readout_w, readout_b) = out.expect("seed closure ran");
    Ok((
        loss,
        ModelGrads {
            theta,
            readout_w,
            readout_b,
        },
    ))
}
