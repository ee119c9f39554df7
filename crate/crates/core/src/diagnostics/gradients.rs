//! Gradient-variance ensembles over random circuit instances.

use crate::circuit::{build_circuit, DaqcConfig, GateProgram, Observable};
use crate::error::{DaqcError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Widest register a sweep runs without `allow_large`.
pub const DESK_MAX_QUBITS: usize = 16;
/// Widest register a sweep runs at all.
pub const LARGE_MAX_QUBITS: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cost {
    /// `⟨Z⊗n⟩`
    Global,
    /// `⟨Z₀⟩`
    Local,
}

impl Cost {
    pub fn observable(self, n_qubits: usize) -> Observable {
        match self {
            Cost::Global => Observable::global(n_qubits),
            Cost::Local => Observable::Z(0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Cost::Global => "global",
            Cost::Local => "local",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    ParameterShift,
    /// Same derivatives from one reverse sweep per cost; much cheaper.
    Adjoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpSweepConfig {
    pub qubit_list: Vec<usize>,
    pub instances_per_config: usize,
    pub weight_samples: usize,
    /// Every listed cost is evaluated on the same circuits and angle draws.
    pub costs: Vec<Cost>,
    /// Embedding angles are drawn from `U[0, x_max]`.
    pub x_max: f64,
    /// Trainable angles are drawn from `U[0, theta_max]`.
    pub theta_max: f64,
    pub method: GradientMethod,
    /// Lift the qubit cap from 16 to 22.
    pub allow_large: bool,
    pub seed: u64,
}

impl Default for BpSweepConfig {
    fn default() -> Self {
        Self {
            qubit_list: (4..=DESK_MAX_QUBITS).step_by(2).collect(),
            instances_per_config: 5,
            weight_samples: 50,
            costs: vec![Cost::Global, Cost::Local],
            x_max: PI,
            theta_max: 2.0 * PI,
            method: GradientMethod::ParameterShift,
            allow_large: false,
            seed: 0,
        }
    }
}

impl BpSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.qubit_list.is_empty() || self.costs.is_empty() {
            return Err(DaqcError::Config("qubit_list and costs must be non-empty".into()));
        }
        if self.instances_per_config == 0 {
            return Err(DaqcError::Config("instances_per_config must be >= 1".into()));
        }
        if self.weight_samples < 2 {
            return Err(DaqcError::Config("weight_samples must be >= 2 for a variance".into()));
        }
        for (name, v) in [("x_max", self.x_max), ("theta_max", self.theta_max)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(DaqcError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let cap = if self.allow_large { LARGE_MAX_QUBITS } else { DESK_MAX_QUBITS };
        if let Some(&n) = self.qubit_list.iter().find(|&&n| n > cap) {
            return Err(DaqcError::Capacity(format!(
                "{n} qubits exceeds the sweep cap of {cap}{}",
                if self.allow_large { "" } else { " (allow_large raises it to 22)" }
            )));
        }
        Ok(())
    }
}

/// Gradients of every observable at every angle vector, `[sample][observable][param]`.
pub fn gradient_samples(
    program: &GateProgram,
    features: &[f64],
    thetas: &[Vec<f64>],
    observables: &[Observable],
    method: GradientMethod,
) -> Result<Vec<Vec<Vec<f64>>>> {
    thetas
        .par_iter()
        .map(|theta| match method {
            GradientMethod::ParameterShift => program.parameter_shift(features, theta, observables),
            GradientMethod::Adjoint => observables
                .iter()
                .map(|obs| {
                    let (_, g) = program.adjoint_gradient(features, theta, |s| match obs {
                        Observable::Z(q) => s.z_product_action(std::slice::from_ref(q)),
                        Observable::ZProduct(qs) => s.z_product_action(qs),
                    })?;
                    Ok(g)
                })
                .collect(),
        })
        .collect()
}

/// Sample variance (`n − 1` denominator) of every column of `rows`.
pub fn column_variance(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.len() as f64;
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / m;
            rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (m - 1.0)
        })
        .collect()
}

/// Per-parameter `Var_θ[∂_j C]` for each observable, `[observable][param]`.
pub fn gradient_variance(
    program: &GateProgram,
    features: &[f64],
    thetas: &[Vec<f64>],
    observables: &[Observable],
    method: GradientMethod,
) -> Result<Vec<Vec<f64>>> {
    let samples = gradient_samples(program, features, thetas, observables, method)?;
    Ok((0..observables.len())
        .map(|o| {
            let rows: Vec<Vec<f64>> = samples.iter().map(|s| s[o].clone()).collect();
            column_variance(&rows)
        })
        .collect())
}

/// One `(n, cost)` cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpPoint {
    pub n_qubits: usize,
    pub cost: Cost,
    pub n_params: usize,
    /// Mean over instances and parameters.
    pub mean_variance: f64,
    /// Mean over parameters, one entry per circuit instance.
    pub instance_means: Vec<f64>,
    /// Mean over instances and the parameters of each trainable column.
    pub layer_variance: Vec<f64>,
    /// Mean over instances, per parameter slot.
    pub parameter_variance: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpReport {
    pub config: BpSweepConfig,
    pub points: Vec<BpPoint>,
}

impl BpReport {
    pub fn point(&self, n_qubits: usize, cost: Cost) -> Option<&BpPoint> {
        self.points
            .iter()
            .find(|p| p.n_qubits == n_qubits && p.cost == cost)
    }

    /// CSV with header `n,cost,layer,variance`; `layer = all` rows carry the
    /// global mean.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "cost", "layer", "variance"])
            .expect("in-memory write");
        for p in &self.points {
            w.serialize((p.n_qubits, p.cost.name(), "all", p.mean_variance))
                .expect("in-memory write");
            for (layer, v) in p.layer_variance.iter().enumerate() {
                w.serialize((p.n_qubits, p.cost.name(), layer.to_string(), v))
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }

    pub fn summary_json(&self) -> String {
        let means: Vec<_> = self
            .points
            .iter()
            .map(|p| {
                serde_json::json!({
                    "n_qubits": p.n_qubits,
                    "cost": p.cost,
                    "n_params": p.n_params,
                    "mean_variance": p.mean_variance,
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "seed": self.config.seed,
            "config": self.config,
            "points": means,
        }))
        .expect("summary serializes")
    }
}

/// Circuit, input and angle draws of one sweep instance. Each `(n, instance)`
/// has its own ChaCha stream.
fn instance(
    config: &BpSweepConfig,
    n_qubits: usize,
    index: usize,
) -> Result<(crate::circuit::CircuitSpec, Vec<f64>, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(((n_qubits as u64) << 32) | index as u64);
    let spec = build_circuit(&DaqcConfig::scaled_template(n_qubits, rng.gen()))?;
    let x = (0..spec.n_features())
        .map(|_| rng.gen_range(0.0..config.x_max))
        .collect();
    let thetas = (0..config.weight_samples)
        .map(|_| {
            (0..spec.n_params())
                .map(|_| rng.gen_range(0.0..config.theta_max))
                .collect()
        })
        .collect();
    Ok((spec, x, thetas))
}

/// Gradient-variance sweep over qubit counts at fixed per-qubit depth.
pub fn bp_sweep(config: &BpSweepConfig) -> Result<BpReport> {
    bp_sweep_with(config, |_| {})
}

/// [`bp_sweep`] with a callback after each `(n, cost)` point, in sweep order.
pub fn bp_sweep_with(config: &BpSweepConfig, mut on_point: impl FnMut(&BpPoint)) -> Result<BpReport> {
    config.validate()?;
    let mut points = Vec::new();
    for &n in &config.qubit_list {
        let observables: Vec<Observable> = config.costs.iter().map(|c| c.observable(n)).collect();
        // [instance][observable][param]
        let mut per_instance = Vec::with_capacity(config.instances_per_config);
        let mut layer_of = Vec::new();
        for i in 0..config.instances_per_config {
            let (spec, x, thetas) = instance(config, n, i)?;
            layer_of = (0..spec.n_params()).map(|j| spec.layer_of_param(j)).collect();
            per_instance.push(gradient_variance(spec.program(), &x, &thetas, &observables, config.method)?);
        }
        let n_params = layer_of.len();
        let n_layers = layer_of.iter().max().map_or(0, |l| l + 1);
        for (o, &cost) in config.costs.iter().enumerate() {
            let instance_means: Vec<f64> = per_instance
                .iter()
                .map(|v| v[o].iter().sum::<f64>() / n_params as f64)
                .collect();
            let parameter_variance: Vec<f64> = (0..n_params)
                .map(|j| per_instance.iter().map(|v| v[o][j]).sum::<f64>() / per_instance.len() as f64)
                .collect();
            let mut layer_sum = vec![0.0; n_layers];
            let mut layer_count = vec![0usize; n_layers];
            for (j, &v) in parameter_variance.iter().enumerate() {
                layer_sum[layer_of[j]] += v;
                layer_count[layer_of[j]] += 1;
            }
            let point = BpPoint {
                n_qubits: n,
                cost,
                n_params,
                mean_variance: parameter_variance.iter().sum::<f64>() / n_params as f64,
                instance_means,
                layer_variance: layer_sum.iter().zip(&layer_count).map(|(s, &c)| s / c as f64).collect(),
                parameter_variance,
            };
            on_point(&point);
            points.push(point);
        }
    }
    Ok(BpReport {
        config: config.clone(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{AngleSource, GateOp};
    use crate::statevector::Axis;
    use approx::assert_abs_diff_eq;

    fn tiny_sweep() -> BpSweepConfig {
        BpSweepConfig {
            qubit_list: vec![2, 3],
            instances_per_config: 2,
            weight_samples: 6,
            ..Default::default()
        }
    }

    #[test]
    fn column_variance_by_hand() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
        assert_eq!(column_variance(&rows), vec![4.0, 0.0]);
    }

    #[test]
    fn final_rz_before_z_has_no_gradient() {
        let ops = vec![
            GateOp::Rotation { axis: Axis::X, target: 0, source: AngleSource::Parameter(0) },
            GateOp::Rotation { axis: Axis::Y, target: 1, source: AngleSource::Parameter(1) },
            GateOp::Ecr { first: 0, second: 1 },
            GateOp::Rotation { axis: Axis::Y, target: 0, source: AngleSource::Parameter(2) },
            GateOp::Rotation { axis: Axis::Z, target: 0, source: AngleSource::Parameter(3) },
        ];
        let program = GateProgram::new(2, 0, 4, ops).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let thetas: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..4).map(|_| rng.gen_range(0.0..2.0 * PI)).collect())
            .collect();
        for method in [GradientMethod::ParameterShift, GradientMethod::Adjoint] {
            let v = gradient_variance(&program, &[], &thetas, &[Observable::Z(0)], method).unwrap();
            assert!(v[0][3].abs() < 1e-20, "{:?}", v[0]);
            assert!(v[0][2] > 1e-3);
        }
    }

    #[test]
    fn methods_agree() {
        let shift = bp_sweep(&tiny_sweep()).unwrap();
        let adj = bp_sweep(&BpSweepConfig { method: GradientMethod::Adjoint, ..tiny_sweep() }).unwrap();
        for (a, b) in shift.points.iter().zip(&adj.points) {
            for (x, y) in a.parameter_variance.iter().zip(&b.parameter_variance) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn report_shape() {
        let r = bp_sweep(&tiny_sweep()).unwrap();
        assert_eq!(r.points.len(), 4);
        let p = r.point(3, Cost::Local).unwrap();
        assert_eq!(p.n_params, 32 * 3);
        assert_eq!(p.layer_variance.len(), 32);
        assert_eq!(p.instance_means.len(), 2);
        let mean_of_layers = p.layer_variance.iter().sum::<f64>() / 32.0;
        assert_abs_diff_eq!(mean_of_layers, p.mean_variance, epsilon = 1e-15);
        assert_eq!(r.to_csv().lines().count(), 1 + 4 * (1 + 32));
        assert_eq!(bp_sweep(&tiny_sweep()).unwrap(), r);
    }

    #[test]
    fn resource_guard() {
        let big = BpSweepConfig { qubit_list: vec![18], ..Default::default() };
        assert!(matches!(bp_sweep(&big), Err(DaqcError::Capacity(_))));
        let huge = BpSweepConfig { qubit_list: vec![24], allow_large: true, ..Default::default() };
        assert!(matches!(big.validate().and(huge.validate()), Err(DaqcError::Capacity(_))));
        let ok = BpSweepConfig { qubit_list: vec![18], allow_large: true, ..Default::default() };
        assert!(ok.validate().is_ok());
    }
}
