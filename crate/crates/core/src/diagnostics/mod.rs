//! Expressibility, entangling capability and gradient-variance diagnostics.

mod entanglement;
mod expressibility;
mod gradients;
mod haar;

pub use entanglement::meyer_wallach_q;
pub use expressibility::{
    ensemble_fidelities, expressibility, fidelity_histogram, mean_q_ensemble,
    ExpressibilityConfig, ExpressibilityReport, Histogram,
};
pub use gradients::{
    bp_sweep, bp_sweep_with, column_variance, gradient_samples, gradient_variance, BpPoint,
    BpReport, BpSweepConfig, Cost, GradientMethod, DESK_MAX_QUBITS, LARGE_MAX_QUBITS,
};
pub use haar::{
    haar_fidelity_density, haar_log_mass, haar_mean_q, haar_random_state, sample_haar_fidelities,
};
