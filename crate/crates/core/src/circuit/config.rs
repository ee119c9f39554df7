use crate::error::{DaqcError, Result};
use crate::statevector::MAX_QUBITS;
use serde::{Deserialize, Serialize};

/// Trainable rotation columns per interleaved cycle.
pub const TRAINABLE_LAYERS_PER_CYCLE: usize = 2;

/// Shape of a domain-aware circuit.
///
/// `pooled_rows × pooled_cols` features are encoded `n_qubits` at a time, so the
/// circuit has `⌈rows·cols / n_qubits⌉` interleaved cycles. An ECR ring is
/// inserted in every cycle `t` (0-based) with `t % entangle_period == 0`, unless
/// `entangle` is false, in which case the circuit has no two-qubit gates at all.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaqcConfig {
    pub n_qubits: usize,
    pub pooled_rows: usize,
    pub pooled_cols: usize,
    pub window_rows: usize,
    pub window_cols: usize,
    pub entangle_period: usize,
    #[serde(default = "default_true")]
    pub entangle: bool,
    pub axis_seed: u64,
}

fn default_true() -> bool {
    true
}

impl Default for DaqcConfig {
    fn default() -> Self {
        Self {
            n_qubits: 16,
            pooled_rows: 16,
            pooled_cols: 16,
            window_rows: 4,
            window_cols: 4,
            entangle_period: 4,
            entangle: true,
            axis_seed: 0,
        }
    }
}

impl DaqcConfig {
    /// Template used by the qubit-count sweeps: 16 cycles at any width, i.e.
    /// `16n` embedding gates, `32n` trainable gates and 4 ECR rings.
    pub fn scaled_template(n_qubits: usize, axis_seed: u64) -> Self {
        let window_cols = if n_qubits % 2 == 0 { 2 } else { 1 };
        Self {
            n_qubits,
            pooled_rows: 16,
            pooled_cols: n_qubits,
            window_rows: 4,
            window_cols,
            entangle_period: 4,
            entangle: true,
            axis_seed,
        }
    }

    /// Template with `cycles` cycles on 16 wires, the four depth settings of the
    /// expressibility study use `cycles ∈ {4, 8, 12, 16}`.
    pub fn depth_template(cycles: usize, axis_seed: u64) -> Self {
        Self {
            pooled_rows: cycles,
            window_rows: if cycles % 4 == 0 { 4 } else { 1 },
            axis_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 || self.n_qubits > MAX_QUBITS {
            return Err(DaqcError::Config(format!(
                "n_qubits = {} outside 2..={MAX_QUBITS}",
                self.n_qubits
            )));
        }
        for (name, v) in [
            ("pooled_rows", self.pooled_rows),
            ("pooled_cols", self.pooled_cols),
            ("window_rows", self.window_rows),
            ("window_cols", self.window_cols),
            ("entangle_period", self.entangle_period),
        ] {
            if v == 0 {
                return Err(DaqcError::Config(format!("{name} must be >= 1")));
            }
        }
        if self.pooled_rows % self.window_rows != 0 {
            return Err(DaqcError::Config(format!(
                "pooled_rows {} not divisible by window_rows {}",
                self.pooled_rows, self.window_rows
            )));
        }
        if self.pooled_cols % self.window_cols != 0 {
            return Err(DaqcError::Config(format!(
                "pooled_cols {} not divisible by window_cols {}",
                self.pooled_cols, self.window_cols
            )));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.pooled_rows * self.pooled_cols
    }

    pub fn n_cycles(&self) -> usize {
        self.n_features().div_ceil(self.n_qubits)
    }

    pub fn n_params(&self) -> usize {
        TRAINABLE_LAYERS_PER_CYCLE * self.n_qubits * self.n_cycles()
    }

    /// Windows per column and per row of the pooled grid, `(u, v)`.
    pub fn window_grid(&self) -> (usize, usize) {
        (
            self.pooled_rows / self.window_rows,
            self.pooled_cols / self.window_cols,
        )
    }

    /// 0-based cycles that carry an ECR ring.
    pub fn entangling_cycles(&self) -> Vec<usize> {
        if !self.entangle {
            return Vec::new();
        }
        (0..self.n_cycles())
            .filter(|t| t % self.entangle_period == 0)
            .collect()
    }

    pub fn n_ecr_gates(&self) -> usize {
        self.n_qubits * self.entangling_cycles().len()
    }

    /// Circuit angles plus a `C`-class linear readout.
    pub fn total_trainables(&self, n_classes: usize) -> usize {
        self.n_params() + self.n_qubits * n_classes + n_classes
    }

    /// Entangling period that yields `layers` ECR rings, if one exists.
    pub fn period_for_layers(&self, layers: usize) -> Option<usize> {
        let t = self.n_cycles();
        (1..=t).find(|f| t.div_ceil(*f) == layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_derived_counts() {
        let c = DaqcConfig::default();
        c.validate().unwrap();
        assert_eq!(c.n_cycles(), 16);
        assert_eq!(c.n_params(), 512);
        assert_eq!(c.entangling_cycles(), vec![0, 4, 8, 12]);
        assert_eq!(c.n_ecr_gates(), 64);
        assert_eq!(c.window_grid(), (4, 4));
    }

    #[test]
    fn parameter_count_identity() {
        let c = DaqcConfig::default();
        assert_eq!(c.total_trainables(2), 546);
        assert_eq!(c.total_trainables(4), 580);
        assert_eq!(c.total_trainables(10), 682);
    }

    #[test]
    fn period_one_entangles_every_cycle() {
        let c = DaqcConfig {
            entangle_period: 1,
            ..DaqcConfig::default()
        };
        assert_eq!(c.n_ecr_gates(), 256);
        let none = DaqcConfig {
            entangle: false,
            ..DaqcConfig::default()
        };
        assert_eq!(none.n_ecr_gates(), 0);
    }

    #[test]
    fn period_for_layer_counts() {
        let c = DaqcConfig::default();
        assert_eq!(c.period_for_layers(2), Some(8));
        assert_eq!(c.period_for_layers(4), Some(4));
        assert_eq!(c.period_for_layers(16), Some(1));
        assert_eq!(c.period_for_layers(5), None);
    }

    #[test]
    fn templates() {
        for n in [4, 6, 8, 10, 12, 14, 16, 22] {
            let c = DaqcConfig::scaled_template(n, 1);
            c.validate().unwrap();
            assert_eq!(c.n_features(), 16 * n);
            assert_eq!(c.n_params(), 32 * n);
            assert_eq!(c.entangling_cycles().len(), 4);
        }
        for (cycles, ecr) in [(4, 16), (8, 32), (12, 48), (16, 64)] {
            let c = DaqcConfig::depth_template(cycles, 0);
            c.validate().unwrap();
            assert_eq!(c.n_features(), 16 * cycles);
            assert_eq!(c.n_params(), 32 * cycles);
            assert_eq!(c.n_ecr_gates(), ecr);
        }
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            DaqcConfig {
                pooled_rows: 15,
                ..DaqcConfig::default()
            },
            DaqcConfig {
                window_cols: 0,
                ..DaqcConfig::default()
            },
            DaqcConfig {
                n_qubits: 1,
                ..DaqcConfig::default()
            },
            DaqcConfig {
                entangle_period: 0,
                ..DaqcConfig::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(DaqcError::Config(_))));
        }
    }
}
