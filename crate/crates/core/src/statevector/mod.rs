//! Dense statevector simulation.
//!
//! A [`StateVector`] stores all `2^n` amplitudes of an `n`-qubit pure state in
//! double precision. Qubit 0 is the least-significant bit of the amplitude
//! index; every kernel, expectation and partial trace in this crate uses that
//! single convention.

mod gates;
pub(crate) mod kernels;
pub(crate) mod blocks;
pub(crate) mod split;

pub use gates::{
    ecr_matrix, identity2, mat2_dagger, mat2_mul, mat2_trace, rotation_derivative,
    rotation_matrix, Axis, Mat2, Mat4,
};

use crate::error::{DaqcError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest register the simulator will allocate (256 MiB of amplitudes).
pub const MAX_QUBITS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` wires.
    pub fn new_zero_state(n_qubits: usize) -> Result<Self> {
        check_capacity(n_qubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wrap explicit amplitudes. The length must be a power of two and the
    /// vector must be normalized to within 1e-8.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(DaqcError::Shape(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_capacity(n_qubits)?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(DaqcError::Numeric("non-finite amplitude".into()));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(DaqcError::Numeric(format!(
                "state is not normalized (squared norm {norm})"
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Product state `⊗_q v_q`, with `qubits[q]` the (normalized) state of wire `q`.
    pub fn product(qubits: &[[Complex64; 2]]) -> Result<Self> {
        check_capacity(qubits.len())?;
        Self::from_amplitudes(kernels::product_state(qubits))
    }

    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1usize << n_qubits);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.n_qubits {
            return Err(DaqcError::Index(format!(
                "qubit {target} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Apply `exp(-i angle P_axis / 2)` to `target`.
    pub fn apply_rotation(&mut self, axis: Axis, target: usize, angle: f64) -> Result<()> {
        if !angle.is_finite() {
            return Err(DaqcError::Numeric(format!("rotation angle {angle} is not finite")));
        }
        self.check_target(target)?;
        kernels::apply_1q(&mut self.amps, target, &rotation_matrix(axis, angle));
        Ok(())
    }

    /// Apply an arbitrary 2×2 matrix to `target`. Unitarity is the caller's business.
    pub fn apply_single(&mut self, target: usize, matrix: &Mat2) -> Result<()> {
        self.check_target(target)?;
        kernels::apply_1q(&mut self.amps, target, matrix);
        Ok(())
    }

    /// Apply the fixed ECR gate with `first` as its first wire.
    pub fn apply_ecr(&mut self, first: usize, second: usize) -> Result<()> {
        self.check_target(first)?;
        self.check_target(second)?;
        if first == second {
            return Err(DaqcError::Index(format!(
                "ECR needs two distinct qubits, got {first} twice"
            )));
        }
        kernels::apply_ecr(&mut self.amps, first, second);
        Ok(())
    }

    /// Exact ⟨Z_target⟩.
    pub fn expect_z(&self, target: usize) -> Result<f64> {
        self.check_target(target)?;
        Ok(kernels::expect_z_mask(&self.amps, 1usize << target))
    }

    /// ⟨Z_q⟩ for all wires, in qubit order.
    pub fn expect_z_all(&self) -> Vec<f64> {
        kernels::expect_z_all(&self.amps, self.n_qubits)
    }

    /// Amplitudes of `(Σ_q w_q Z_q)|ψ⟩`. Not normalized; this is the adjoint
    /// seed for a cost linear in the single-wire Z expectations.
    pub fn weighted_z_action(&self, weights: &[f64]) -> Result<Vec<Complex64>> {
        if weights.len() != self.n_qubits {
            return Err(DaqcError::Shape(format!(
                "{} weights for {} qubits",
                weights.len(),
                self.n_qubits
            )));
        }
        let mut out = self.amps.clone();
        kernels::apply_weighted_z_sum(&mut out, weights);
        Ok(out)
    }

    /// Amplitudes of `(⊗_{q ∈ targets} Z_q)|ψ⟩`.
    pub fn z_product_action(&self, targets: &[usize]) -> Result<Vec<Complex64>> {
        let mut mask = 0usize;
        for &t in targets {
            self.check_target(t)?;
            mask |= 1usize << t;
        }
        let mut out = self.amps.clone();
        kernels::apply_z_mask(&mut out, mask);
        Ok(out)
    }

    /// Expectation of the tensor product of Z on every listed wire. An empty
    /// list is the identity observable.
    pub fn expect_z_product(&self, targets: &[usize]) -> Result<f64> {
        let mut mask = 0usize;
        for &t in targets {
            self.check_target(t)?;
            mask |= 1usize << t;
        }
        if mask == 0 {
            return Ok(self.norm_sqr());
        }
        Ok(kernels::expect_z_mask(&self.amps, mask))
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(DaqcError::Shape(format!(
                "inner product of {}-qubit and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Reduced density matrix of one wire (partial trace over all others).
    pub fn reduced_density_1q(&self, target: usize) -> Result<Mat2> {
        self.check_target(target)?;
        let stride = 1usize << target;
        let zero = Complex64::new(0.0, 0.0);
        let (mut r00, mut r01, mut r11) = (0.0, zero, 0.0);
        for chunk in self.amps.chunks_exact(2 * stride) {
            let (lo, hi) = chunk.split_at(stride);
            for (a, b) in lo.iter().zip(hi) {
                r00 += a.norm_sqr();
                r11 += b.norm_sqr();
                r01 += a * b.conj();
            }
        }
        Ok([
            [Complex64::new(r00, 0.0), r01],
            [r01.conj(), Complex64::new(r11, 0.0)],
        ])
    }
}

pub(crate) fn check_capacity(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(DaqcError::Capacity(format!(
            "{n_qubits} qubits requested, supported range is 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}
