//! Construction and execution of the domain-aware quantum circuit.

mod config;
mod encode;
mod program;
mod spec;

pub use config::{DaqcConfig, TRAINABLE_LAYERS_PER_CYCLE};
pub use encode::{
    adaptive_avg_pool, encode_sample, feature_layout, normalize_angles, zigzag_order,
    EncodedSample,
};
pub use program::{AngleSource, GateOp, GateProgram, Observable};
pub use spec::{build_circuit, param_slot, run_circuit, CircuitSpec, GateCounts};
