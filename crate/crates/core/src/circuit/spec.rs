use super::config::{DaqcConfig, TRAINABLE_LAYERS_PER_CYCLE};
use super::encode::EncodedSample;
use super::program::{AngleSource, GateOp, GateProgram};
use crate::error::{DaqcError, Result};
use crate::statevector::{Axis, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Gate counts of a materialized circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub feature_rotations: usize,
    pub parameter_rotations: usize,
    pub ecr: usize,
    pub cycles: usize,
}

/// The fully materialized DAQC gate program.
///
/// JSON layout:
/// `{ "config": DaqcConfig, "embed_axes": [[axis; n]; T],
///    "train_axes": [[[axis; n]; 2]; T], "entangling_cycles": [t, ...],
///    "gate_counts": {...} }` with axes written as `"x" | "y" | "z"` and cycles
/// 0-based. The gate list itself is rebuilt from these tables on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitSpecDoc", into = "CircuitSpecDoc")]
pub struct CircuitSpec {
    config: DaqcConfig,
    embed_axes: Vec<Vec<Axis>>,
    train_axes: Vec<[Vec<Axis>; TRAINABLE_LAYERS_PER_CYCLE]>,
    entangling_cycles: Vec<usize>,
    program: GateProgram,
}

#[derive(Serialize, Deserialize)]
struct CircuitSpecDoc {
    config: DaqcConfig,
    embed_axes: Vec<Vec<Axis>>,
    train_axes: Vec<[Vec<Axis>; TRAINABLE_LAYERS_PER_CYCLE]>,
    entangling_cycles: Vec<usize>,
    gate_counts: GateCounts,
}

impl From<CircuitSpec> for CircuitSpecDoc {
    fn from(spec: CircuitSpec) -> Self {
        let gate_counts = spec.gate_counts();
        Self {
            config: spec.config,
            embed_axes: spec.embed_axes,
            train_axes: spec.train_axes,
            entangling_cycles: spec.entangling_cycles,
            gate_counts,
        }
    }
}

impl TryFrom<CircuitSpecDoc> for CircuitSpec {
    type Error = DaqcError;

    fn try_from(doc: CircuitSpecDoc) -> Result<Self> {
        doc.config.validate()?;
        let t = doc.config.n_cycles();
        let n = doc.config.n_qubits;
        let shape_ok = doc.embed_axes.len() == t
            && doc.train_axes.len() == t
            && doc.embed_axes.iter().all(|r| r.len() == n)
            && doc.train_axes.iter().all(|c| c.iter().all(|r| r.len() == n));
        if !shape_ok {
            return Err(DaqcError::Config("axis tables do not match config".into()));
        }
        if doc.entangling_cycles != doc.config.entangling_cycles() {
            return Err(DaqcError::Config(
                "entangling schedule does not match config".into(),
            ));
        }
        let spec = assemble(doc.config, doc.embed_axes, doc.train_axes)?;
        if spec.gate_counts() != doc.gate_counts {
            return Err(DaqcError::Config("gate counts do not match config".into()));
        }
        Ok(spec)
    }
}

/// Parameter slot of trainable column `k` on qubit `q` in 0-based cycle `t`.
pub fn param_slot(n_qubits: usize, t: usize, k: usize, q: usize) -> usize {
    (t * TRAINABLE_LAYERS_PER_CYCLE + k) * n_qubits + q
}

/// Sample the axis tables and emit the interleaved encode → entangle → train
/// program.
///
/// Axes are drawn from ChaCha8 seeded with `axis_seed`, one uniform draw over
/// `{x, y, z}` per slot, in the order: for each cycle, the `n` embedding axes,
/// then the `n` axes of trainable column 0, then those of column 1. Slots whose
/// embedding gate is dropped (a partial final cycle) still consume their draw.
pub fn build_circuit(config: &DaqcConfig) -> Result<CircuitSpec> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.axis_seed);
    let n = config.n_qubits;
    let draw_row = |rng: &mut ChaCha8Rng| -> Vec<Axis> {
        (0..n).map(|_| Axis::from_index(rng.gen_range(0..3))).collect()
    };
    let mut embed_axes = Vec::with_capacity(config.n_cycles());
    let mut train_axes = Vec::with_capacity(config.n_cycles());
    for _ in 0..config.n_cycles() {
        embed_axes.push(draw_row(&mut rng));
        train_axes.push([draw_row(&mut rng), draw_row(&mut rng)]);
    }
    assemble(config.clone(), embed_axes, train_axes)
}

fn assemble(
    config: DaqcConfig,
    embed_axes: Vec<Vec<Axis>>,
    train_axes: Vec<[Vec<Axis>; TRAINABLE_LAYERS_PER_CYCLE]>,
) -> Result<CircuitSpec> {
    let n = config.n_qubits;
    let n_features = config.n_features();
    let entangling_cycles = config.entangling_cycles();
    let mut ops = Vec::with_capacity(n_features + config.n_params() + config.n_ecr_gates());
    for t in 0..config.n_cycles() {
        for q in 0..n {
            let k = t * n + q;
            if k < n_features {
                ops.push(GateOp::Rotation {
                    axis: embed_axes[t][q],
                    target: q,
                    source: AngleSource::Feature(k),
                });
            }
        }
        if entangling_cycles.binary_search(&t).is_ok() {
            for q in 0..n {
                ops.push(GateOp::Ecr {
                    first: q,
                    second: (q + 1) % n,
                });
            }
        }
        for (k, column) in train_axes[t].iter().enumerate() {
            for q in 0..n {
                ops.push(GateOp::Rotation {
                    axis: column[q],
                    target: q,
                    source: AngleSource::Parameter(param_slot(n, t, k, q)),
                });
            }
        }
    }
    let program = GateProgram::new(n, n_features, config.n_params(), ops)?;
    Ok(CircuitSpec {
        config,
        embed_axes,
        train_axes,
        entangling_cycles,
        program,
    })
}

impl CircuitSpec {
    pub fn config(&self) -> &DaqcConfig {
        &self.config
    }

    pub fn n_qubits(&self) -> usize {
        self.config.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.config.n_params()
    }

    pub fn n_features(&self) -> usize {
        self.config.n_features()
    }

    /// Embedding axis `σ[t][q]`.
    pub fn embed_axes(&self) -> &[Vec<Axis>] {
        &self.embed_axes
    }

    /// Trainable axis `τ[t][k][q]`.
    pub fn train_axes(&self) -> &[[Vec<Axis>; TRAINABLE_LAYERS_PER_CYCLE]] {
        &self.train_axes
    }

    pub fn entangling_cycles(&self) -> &[usize] {
        &self.entangling_cycles
    }

    pub fn ops(&self) -> &[GateOp] {
        self.program.ops()
    }

    pub fn program(&self) -> &GateProgram {
        &self.program
    }

    /// Trainable column (0-based, `2t + k`) that parameter slot `j` belongs to.
    pub fn layer_of_param(&self, j: usize) -> usize {
        j / self.config.n_qubits
    }

    pub fn gate_counts(&self) -> GateCounts {
        let mut counts = GateCounts {
            feature_rotations: 0,
            parameter_rotations: 0,
            ecr: 0,
            cycles: self.config.n_cycles(),
        };
        for op in self.program.ops() {
            match op {
                GateOp::Rotation {
                    source: AngleSource::Feature(_),
                    ..
                } => counts.feature_rotations += 1,
                GateOp::Rotation {
                    source: AngleSource::Parameter(_),
                    ..
                } => counts.parameter_rotations += 1,
                GateOp::Rotation { .. } => {}
                GateOp::Ecr { .. } => counts.ecr += 1,
            }
        }
        counts
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| DaqcError::Format(format!("circuit spec JSON: {e}")))
    }

    /// `U(f̃, Θ)|0⟩`.
    pub fn simulate(&self, sample: &EncodedSample, params: &[f64]) -> Result<StateVector> {
        self.program.run(&sample.angles, params)
    }
}

/// `(⟨Z_0⟩, …, ⟨Z_{n-1}⟩)` after running the circuit on `sample`.
pub fn run_circuit(spec: &CircuitSpec, sample: &EncodedSample, params: &[f64]) -> Result<Vec<f64>> {
    Ok(spec.simulate(sample, params)?.expect_z_all())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_gate_counts() {
        let spec = build_circuit(&DaqcConfig::default()).unwrap();
        assert_eq!(
            spec.gate_counts(),
            GateCounts {
                feature_rotations: 256,
                parameter_rotations: 512,
                ecr: 64,
                cycles: 16
            }
        );
        assert_eq!(spec.entangling_cycles(), &[0, 4, 8, 12]);
    }

    #[test]
    fn period_one_gives_sixteen_rings() {
        let cfg = DaqcConfig {
            entangle_period: 1,
            ..DaqcConfig::default()
        };
        assert_eq!(build_circuit(&cfg).unwrap().gate_counts().ecr, 256);
    }

    #[test]
    fn seeded_build_is_deterministic() {
        let cfg = DaqcConfig {
            axis_seed: 99,
            ..DaqcConfig::default()
        };
        let a = build_circuit(&cfg).unwrap();
        let b = build_circuit(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        let c = build_circuit(&DaqcConfig {
            axis_seed: 100,
            ..cfg
        })
        .unwrap();
        assert_ne!(a.embed_axes(), c.embed_axes());
    }

    #[test]
    fn cycle_layout() {
        let cfg = DaqcConfig {
            n_qubits: 4,
            pooled_rows: 4,
            pooled_cols: 4,
            window_rows: 2,
            window_cols: 2,
            entangle_period: 2,
            entangle: true,
            axis_seed: 5,
        };
        let spec = build_circuit(&cfg).unwrap();
        let ops = spec.ops();
        // cycle 0: 4 embeds, 4 ECR, 8 trainable
        assert!(ops[..4]
            .iter()
            .all(|o| matches!(o, GateOp::Rotation { source: AngleSource::Feature(_), .. })));
        let ring: Vec<(usize, usize)> = ops[4..8]
            .iter()
            .map(|o| match o {
                GateOp::Ecr { first, second } => (*first, *second),
                _ => panic!("expected ECR"),
            })
            .collect();
        assert_eq!(ring, vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(ops[8..16]
            .iter()
            .all(|o| matches!(o, GateOp::Rotation { source: AngleSource::Parameter(_), .. })));
        // cycle 1 has no ring
        assert!(ops[16..28].iter().all(|o| matches!(o, GateOp::Rotation { .. })));
        assert!(matches!(
            ops[4 + 4 + 8],
            GateOp::Rotation {
                source: AngleSource::Feature(4),
                target: 0,
                ..
            }
        ));
    }

    #[test]
    fn partial_final_cycle_drops_embeddings() {
        let cfg = DaqcConfig {
            n_qubits: 6,
            pooled_rows: 4,
            pooled_cols: 4,
            window_rows: 2,
            window_cols: 2,
            entangle_period: 2,
            entangle: true,
            axis_seed: 1,
        };
        let spec = build_circuit(&cfg).unwrap();
        let counts = spec.gate_counts();
        assert_eq!(counts.cycles, 3);
        assert_eq!(counts.feature_rotations, 16);
        assert_eq!(counts.parameter_rotations, 36);
        assert_eq!(counts.ecr, 12);
    }

    #[test]
    fn json_roundtrip_and_tamper_detection() {
        let spec = build_circuit(&DaqcConfig {
            axis_seed: 3,
            ..DaqcConfig::default()
        })
        .unwrap();
        let json = spec.to_json();
        let back = CircuitSpec::from_json(&json).unwrap();
        assert_eq!(back, spec);
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["entangling_cycles"] = serde_json::json!([0, 1]);
        assert!(CircuitSpec::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn run_circuit_identity_case() {
        let cfg = DaqcConfig {
            n_qubits: 4,
            pooled_rows: 4,
            pooled_cols: 4,
            window_rows: 2,
            window_cols: 2,
            entangle_period: 1,
            entangle: false,
            axis_seed: 2,
        };
        let spec = build_circuit(&cfg).unwrap();
        let sample = EncodedSample {
            angles: vec![0.0; 16],
            label: 0,
        };
        let out = run_circuit(&spec, &sample, &vec![0.0; cfg.n_params()]).unwrap();
        assert!(out.iter().all(|&z| (z - 1.0).abs() < 1e-12));
    }

    #[test]
    fn run_circuit_shape_errors() {
        let spec = build_circuit(&DaqcConfig::default()).unwrap();
        let sample = EncodedSample {
            angles: vec![0.0; 10],
            label: 0,
        };
        assert!(matches!(
            run_circuit(&spec, &sample, &vec![0.0; 512]),
            Err(DaqcError::Shape(_))
        ));
        let sample = EncodedSample {
            angles: vec![0.0; 256],
            label: 0,
        };
        assert!(matches!(
            run_circuit(&spec, &sample, &vec![0.0; 5]),
            Err(DaqcError::Shape(_))
        ));
    }
}
