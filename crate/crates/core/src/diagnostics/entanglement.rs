//! Meyer–Wallach entangling capability.

use crate::statevector::StateVector;

/// `Q = 2(1 − (1/n) Σᵢ Tr ρᵢ²)`, clamped to `[0, 1]` against rounding.
pub fn meyer_wallach_q(state: &StateVector) -> f64 {
    let n = state.n_qubits();
    let mut purity = 0.0;
    for q in 0..n {
        let rho = state.reduced_density_1q(q).expect("wire in range");
        purity += rho[0][0].re * rho[0][0].re
            + rho[1][1].re * rho[1][1].re
            + 2.0 * rho[0][1].norm_sqr();
    }
    (2.0 * (1.0 - purity / n as f64)).clamp(0.0, 1.0)
}
