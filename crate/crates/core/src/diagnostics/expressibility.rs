//! Fidelity histograms against the Haar reference, and the ensemble they are
//! drawn from.

use super::entanglement::meyer_wallach_q;
use super::haar::haar_log_mass;
use crate::circuit::{build_circuit, DaqcConfig, GateProgram};
use crate::error::{DaqcError, Result};
use crate::statevector::StateVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpressibilityConfig {
    pub n_states: usize,
    pub n_pairs: usize,
    pub n_bins: usize,
    /// Embedding angles are drawn from `U[0, embed_max]`.
    pub embed_max: f64,
    /// Trainable angles are drawn from `U[0, param_max]`.
    pub param_max: f64,
    pub seed: u64,
    /// Upper bound on the memory spent holding sampled states at once. States
    /// that do not fit are re-simulated when their pair partner comes up.
    pub memory_budget_bytes: usize,
}

impl Default for ExpressibilityConfig {
    fn default() -> Self {
        Self {
            n_states: 2000,
            n_pairs: 5000,
            n_bins: 75,
            embed_max: PI,
            param_max: 2.0 * PI,
            seed: 0,
            memory_budget_bytes: 1 << 30,
        }
    }
}

impl ExpressibilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_states < 2 {
            return Err(DaqcError::Config("n_states must be >= 2".into()));
        }
        if self.n_pairs < 1 {
            return Err(DaqcError::Config("n_pairs must be >= 1".into()));
        }
        if self.n_bins < 2 {
            return Err(DaqcError::Config("n_bins must be >= 2".into()));
        }
        for (name, v) in [("embed_max", self.embed_max), ("param_max", self.param_max)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(DaqcError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Equal-width histogram on `[0, 1]` with the Haar mass of every bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `n_bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Exact Haar probability of each bin (may underflow to 0 in the tail).
    pub haar_mass: Vec<f64>,
    /// Natural log of `haar_mass`, finite even where the mass underflows.
    pub haar_log_mass: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `Σ_b p_b ln(p_b / q_b)`, skipping empty bins.
    pub fn kl_divergence(&self) -> f64 {
        let total = self.total() as f64;
        let kl: f64 = self
            .counts
            .iter()
            .zip(&self.haar_log_mass)
            .filter(|(&c, _)| c > 0)
            .map(|(&c, &lq)| {
                let p = c as f64 / total;
                p * (p.ln() - lq)
            })
            .sum();
        // rounding can leave a tiny negative value when p ≈ q
        kl.max(0.0)
    }
}

/// Bin `fidelities` into `n_bins` equal-width bins on `[0, 1]` (`F = 1` falls in
/// the last bin) and attach the `n_qubits` Haar reference.
pub fn fidelity_histogram(fidelities: &[f64], n_qubits: usize, n_bins: usize) -> Result<Histogram> {
    if n_bins < 2 {
        return Err(DaqcError::Config("n_bins must be >= 2".into()));
    }
    let edges: Vec<f64> = (0..=n_bins).map(|b| b as f64 / n_bins as f64).collect();
    let mut counts = vec![0u64; n_bins];
    for &f in fidelities {
        if !(-1e-9..=1.0 + 1e-9).contains(&f) {
            return Err(DaqcError::Domain(format!("fidelity {f} outside [0, 1]")));
        }
        let b = ((f.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let haar_log_mass = edges
        .windows(2)
        .map(|w| haar_log_mass(w[0], w[1], n_qubits))
        .collect::<Result<Vec<_>>>()?;
    Ok(Histogram {
        haar_mass: haar_log_mass.iter().map(|l| l.exp()).collect(),
        haar_log_mass,
        edges,
        counts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressibilityReport {
    pub circuit: DaqcConfig,
    pub config: ExpressibilityConfig,
    pub histogram: Histogram,
    pub d_kl: f64,
    pub mean_q: f64,
}

impl ExpressibilityReport {
    /// CSV with header `bin_lo,bin_hi,count,haar_mass`.
    pub fn histogram_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["bin_lo", "bin_hi", "count", "haar_mass"])
            .expect("in-memory write");
        let h = &self.histogram;
        for b in 0..h.counts.len() {
            w.serialize((h.edges[b], h.edges[b + 1], h.counts[b], h.haar_mass[b]))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }

    /// JSON summary: `d_kl`, `mean_q`, the configs and the seed.
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "d_kl": self.d_kl,
            "mean_q": self.mean_q,
            "seed": self.config.seed,
            "n_qubits": self.circuit.n_qubits,
            "circuit": self.circuit,
            "config": self.config,
        }))
        .expect("summary serializes")
    }
}

/// The `i`-th member of the random-angle ensemble. Every member has its own
/// ChaCha stream, so it can be regenerated independently of the others.
fn ensemble_state(
    program: &GateProgram,
    config: &ExpressibilityConfig,
    index: usize,
) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64 + 1);
    let features: Vec<f64> = (0..program.n_features())
        .map(|_| rng.gen_range(0.0..config.embed_max))
        .collect();
    let params: Vec<f64> = (0..program.n_params())
        .map(|_| rng.gen_range(0.0..config.param_max))
        .collect();
    program.run(&features, &params)
}

/// Unordered pairs of distinct indices, drawn with replacement across pairs.
fn draw_pairs(config: &ExpressibilityConfig) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0);
    (0..config.n_pairs)
        .map(|_| {
            let i = rng.gen_range(0..config.n_states);
            let mut j = rng.gen_range(0..config.n_states - 1);
            if j >= i {
                j += 1;
            }
            (i.min(j), i.max(j))
        })
        .collect()
}

/// Pair fidelities and the mean Q of the ensemble, in one pass over the states.
///
/// States are simulated in blocks that fit the memory budget. Pairs inside a
/// block read both states from memory; a pair reaching into a later block
/// re-simulates its second member.
pub fn ensemble_fidelities(
    circuit: &DaqcConfig,
    config: &ExpressibilityConfig,
) -> Result<(Vec<f64>, f64)> {
    config.validate()?;
    let spec = build_circuit(circuit)?;
    let program = spec.program();
    let pairs = draw_pairs(config);
    let state_bytes = 16usize << circuit.n_qubits;
    let block = (config.memory_budget_bytes / state_bytes).clamp(1, config.n_states);

    let mut fidelities = vec![0.0; pairs.len()];
    let mut q_sum = 0.0;
    for start in (0..config.n_states).step_by(block) {
        let end = (start + block).min(config.n_states);
        let states = (start..end)
            .into_par_iter()
            .map(|i| ensemble_state(program, config, i))
            .collect::<Result<Vec<_>>>()?;
        q_sum += states.par_iter().map(meyer_wallach_q).collect::<Vec<_>>().iter().sum::<f64>();

        // later partners, grouped so each is simulated once per block
        let mut outside: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (p, &(lo, hi)) in pairs.iter().enumerate() {
            if !(start..end).contains(&lo) {
                continue;
            }
            if hi < end {
                fidelities[p] = states[lo - start].fidelity(&states[hi - start])?;
            } else {
                outside.entry(hi).or_default().push(p);
            }
        }
        let outside: Vec<(usize, Vec<usize>)> = outside.into_iter().collect();
        let computed = outside
            .par_iter()
            .map(|(hi, ps)| {
                let partner = ensemble_state(program, config, *hi)?;
                ps.iter()
                    .map(|&p| Ok((p, states[pairs[p].0 - start].fidelity(&partner)?)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (p, f) in computed.into_iter().flatten() {
            fidelities[p] = f;
        }
    }
    Ok((fidelities, q_sum / config.n_states as f64))
}

/// Fidelity histogram, `D_KL(P_PQC ‖ P_Haar)` and mean Q of the ensemble.
pub fn expressibility(
    circuit: &DaqcConfig,
    config: &ExpressibilityConfig,
) -> Result<ExpressibilityReport> {
    let (fidelities, mean_q) = ensemble_fidelities(circuit, config)?;
    let histogram = fidelity_histogram(&fidelities, circuit.n_qubits, config.n_bins)?;
    Ok(ExpressibilityReport {
        circuit: circuit.clone(),
        config: config.clone(),
        d_kl: histogram.kl_divergence(),
        histogram,
        mean_q,
    })
}

/// Mean Meyer–Wallach Q over the same ensemble [`expressibility`] samples.
pub fn mean_q_ensemble(circuit: &DaqcConfig, config: &ExpressibilityConfig) -> Result<f64> {
    config.validate()?;
    let spec = build_circuit(circuit)?;
    let qs = (0..config.n_states)
        .into_par_iter()
        .map(|i| ensemble_state(spec.program(), config, i).map(|s| meyer_wallach_q(&s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(qs.iter().sum::<f64>() / config.n_states as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::haar::sample_haar_fidelities;
    use approx::assert_abs_diff_eq;

    fn small_circuit(entangle: bool) -> DaqcConfig {
        DaqcConfig {
            n_qubits: 4,
            pooled_rows: 4,
            pooled_cols: 4,
            window_rows: 2,
            window_cols: 2,
            entangle_period: 1,
            entangle,
            axis_seed: 3,
        }
    }

    fn small_config() -> ExpressibilityConfig {
        ExpressibilityConfig {
            n_states: 60,
            n_pairs: 300,
            ..Default::default()
        }
    }

    #[test]
    fn counts_sum_to_pairs() {
        let r = expressibility(&small_circuit(true), &small_config()).unwrap();
        assert_eq!(r.histogram.total(), 300);
        assert_eq!(r.histogram.edges.len(), 76);
        assert!(r.d_kl >= 0.0);
        assert!((0.0..=1.0).contains(&r.mean_q));
    }

    #[test]
    fn blocking_does_not_change_the_result() {
        let whole = expressibility(&small_circuit(true), &small_config()).unwrap();
        let tight = ExpressibilityConfig {
            memory_budget_bytes: 7 * (16 << 4),
            ..small_config()
        };
        let blocked = expressibility(&small_circuit(true), &tight).unwrap();
        assert_eq!(whole.histogram, blocked.histogram);
        assert_eq!(whole.d_kl, blocked.d_kl);
        assert_abs_diff_eq!(whole.mean_q, blocked.mean_q, epsilon = 1e-14);
    }

    #[test]
    fn mean_q_matches_between_entry_points() {
        let c = small_circuit(true);
        let r = expressibility(&c, &small_config()).unwrap();
        assert_abs_diff_eq!(mean_q_ensemble(&c, &small_config()).unwrap(), r.mean_q, epsilon = 1e-12);
    }

    #[test]
    fn no_entanglers_no_q() {
        let q = mean_q_ensemble(&small_circuit(false), &small_config()).unwrap();
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fixed_state_is_far_from_haar() {
        let h = fidelity_histogram(&vec![1.0; 5000], 4, 75).unwrap();
        assert_eq!(h.counts[74], 5000);
        // all mass in the top bin: D_KL = −ln q_top = −15 ln(1 − 74/75)
        assert_abs_diff_eq!(h.kl_divergence(), 15.0 * 75f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn haar_samples_are_close_to_haar() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = sample_haar_fidelities(4, 5000, &mut rng).unwrap();
        let h = fidelity_histogram(&f, 4, 75).unwrap();
        assert!(h.kl_divergence() < 5e-3, "{}", h.kl_divergence());
    }

    #[test]
    fn degenerate_configs_are_rejected() {
        for bad in [
            ExpressibilityConfig { n_states: 1, ..Default::default() },
            ExpressibilityConfig { n_pairs: 0, ..Default::default() },
            ExpressibilityConfig { n_bins: 1, ..Default::default() },
        ] {
            assert!(matches!(
                expressibility(&small_circuit(true), &bad),
                Err(DaqcError::Config(_))
            ));
        }
    }

    #[test]
    fn csv_has_one_row_per_bin() {
        let r = expressibility(&small_circuit(true), &small_config()).unwrap();
        let csv = r.histogram_csv();
        assert!(csv.starts_with("bin_lo,bin_hi,count,haar_mass\n"));
        assert_eq!(csv.lines().count(), 76);
    }
}
