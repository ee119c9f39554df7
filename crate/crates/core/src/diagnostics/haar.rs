//! Reference quantities for Haar-random pure states.

use crate::error::{DaqcError, Result};
use crate::statevector::StateVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

fn dimension(n_qubits: usize) -> Result<f64> {
    if n_qubits == 0 || n_qubits > 60 {
        return Err(DaqcError::Domain(format!(
            "Haar reference needs 1..=60 qubits, got {n_qubits}"
        )));
    }
    Ok((1u64 << n_qubits) as f64)
}

/// Density of the fidelity between two independent Haar-random states,
/// `(N − 1)(1 − F)^(N − 2)` with `N = 2^n`.
pub fn haar_fidelity_density(f: f64, n_qubits: usize) -> Result<f64> {
    let dim = dimension(n_qubits)?;
    if !(0.0..=1.0).contains(&f) {
        return Err(DaqcError::Domain(format!("fidelity {f} outside [0, 1]")));
    }
    if n_qubits == 1 {
        return Ok(1.0);
    }
    Ok((dim - 1.0) * (1.0 - f).powf(dim - 2.0))
}

/// Natural log of the Haar probability mass in `[lo, hi]`, integrated exactly:
/// the CDF is `1 − (1 − F)^(N − 1)`, so the mass is
/// `(1 − lo)^(N−1) · (1 − ((1 − hi)/(1 − lo))^(N−1))`. Working in logs keeps
/// the tail bins finite at large `N`, where the masses underflow.
pub fn haar_log_mass(lo: f64, hi: f64, n_qubits: usize) -> Result<f64> {
    let dim = dimension(n_qubits)?;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(DaqcError::Domain(format!("bin [{lo}, {hi}] not inside [0, 1]")));
    }
    let k = dim - 1.0;
    let log_lo = (-lo).ln_1p();
    let log_hi = (-hi).ln_1p();
    Ok(k * log_lo + (-(k * (log_hi - log_lo)).exp_m1()).ln())
}

/// Mean Meyer–Wallach Q over Haar-random states, `(N − 2)/(N + 1)`.
pub fn haar_mean_q(n_qubits: usize) -> Result<f64> {
    let dim = dimension(n_qubits)?;
    Ok((dim - 2.0) / (dim + 1.0))
}

/// Haar-random state from a normalized vector of complex Gaussians.
pub fn haar_random_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<StateVector> {
    crate::statevector::check_capacity(n_qubits)?;
    let mut amps: Vec<Complex64> = (0..1usize << n_qubits)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amplitudes(amps)
}

/// Fidelities drawn directly from the Haar distribution by inverting its CDF.
pub fn sample_haar_fidelities<R: Rng + ?Sized>(
    n_qubits: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let k = dimension(n_qubits)? - 1.0;
    Ok((0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            // 1 − (1 − u)^(1/k), written to keep precision for tiny F
            -((-u).ln_1p() / k).exp_m1()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_qubit_is_uniform() {
        for f in [0.0, 0.3, 1.0] {
            assert_eq!(haar_fidelity_density(f, 1).unwrap(), 1.0);
        }
    }

    #[test]
    fn vanishes_at_unit_fidelity() {
        for n in [2, 3, 8] {
            assert_eq!(haar_fidelity_density(1.0, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn out_of_range_is_domain_error() {
        for f in [-0.1, 1.5, f64::NAN] {
            assert!(matches!(haar_fidelity_density(f, 3), Err(DaqcError::Domain(_))));
        }
    }

    #[test]
    fn masses_sum_to_one() {
        for n in [1, 2, 4, 16] {
            let bins = 75;
            let total: f64 = (0..bins)
                .map(|b| {
                    haar_log_mass(b as f64 / bins as f64, (b + 1) as f64 / bins as f64, n)
                        .unwrap()
                        .exp()
                })
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_mass_survives_underflow() {
        // at 16 qubits the mass above F = 0.5 is ~2^-65535
        let lm = haar_log_mass(0.5, 0.6, 16).unwrap();
        assert!(lm.is_finite());
        assert_abs_diff_eq!(lm, 65535.0 * 0.5f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn inverse_cdf_samples_match_mean() {
        // E[F] = 1/N for Haar pairs
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = sample_haar_fidelities(3, 200_000, &mut rng).unwrap();
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        assert_abs_diff_eq!(mean, 1.0 / 8.0, epsilon = 2e-3);
        assert!(f.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn haar_states_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = haar_random_state(5, &mut rng).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
    }
}
