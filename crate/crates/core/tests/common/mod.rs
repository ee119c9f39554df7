//! Helpers shared by the integration tests: a dense-matrix reference simulator
//! built only from Pauli matrices and Kronecker products, and random programs.

#![allow(dead_code)]

use daqc::circuit::{AngleSource, GateOp, GateProgram};
use daqc::statevector::Axis;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::PathBuf;

pub type Dense = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli(axis: Option<Axis>) -> [[Complex64; 2]; 2] {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match axis {
        None => [[o, z], [z, o]],
        Some(Axis::X) => [[z, o], [o, z]],
        Some(Axis::Y) => [[z, -i], [i, z]],
        Some(Axis::Z) => [[o, z], [z, -o]],
    }
}

/// `⊗` of per-wire 2×2 factors; `factors[q]` acts on qubit `q`, qubit 0 being
/// the least significant index bit (so it is the rightmost Kronecker factor).
pub fn kron_wires(factors: &[[[Complex64; 2]; 2]]) -> Dense {
    let mut m: Dense = vec![vec![c(1.0, 0.0)]];
    for f in factors {
        let d = m.len();
        let mut next = vec![vec![c(0.0, 0.0); 2 * d]; 2 * d];
        for (a, row) in f.iter().enumerate() {
            for (b, &fab) in row.iter().enumerate() {
                for i in 0..d {
                    for j in 0..d {
                        next[a * d + i][b * d + j] = fab * m[i][j];
                    }
                }
            }
        }
        m = next;
    }
    m
}

/// Pauli string with `axes[q]` on qubit `q`.
pub fn pauli_string(n: usize, axes: &[(usize, Axis)]) -> Dense {
    let mut f = vec![pauli(None); n];
    for &(q, a) in axes {
        f[q] = pauli(Some(a));
    }
    kron_wires(&f)
}

pub fn identity(d: usize) -> Dense {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect()
}

pub fn add_scaled(a: &Dense, b: &Dense, s: Complex64) -> Dense {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + s * y).collect())
        .collect()
}

/// `exp(−iθP/2) = cos(θ/2)·I − i sin(θ/2)·P`.
pub fn dense_rotation(n: usize, axis: Axis, q: usize, theta: f64) -> Dense {
    let p = pauli_string(n, &[(q, axis)]);
    let scaled_i: Dense = identity(1 << n)
        .into_iter()
        .map(|r| r.into_iter().map(|x| x * (theta / 2.0).cos()).collect())
        .collect();
    add_scaled(&scaled_i, &p, c(0.0, -(theta / 2.0).sin()))
}

/// `ECR = (X_a − X_b Y_a)/√2` with `a` the first and `b` the second wire.
pub fn dense_ecr(n: usize, a: usize, b: usize) -> Dense {
    let xa = pauli_string(n, &[(a, Axis::X)]);
    let xbya = pauli_string(n, &[(a, Axis::Y), (b, Axis::X)]);
    let m = add_scaled(&xa, &xbya, c(-1.0, 0.0));
    m.into_iter()
        .map(|r| r.into_iter().map(|x| x * FRAC_1_SQRT_2).collect())
        .collect()
}

pub fn mat_vec(m: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Reference simulation of `program` from `|0…0⟩`.
pub fn dense_run(program: &GateProgram, features: &[f64], params: &[f64]) -> Vec<Complex64> {
    let n = program.n_qubits();
    let mut psi = vec![c(0.0, 0.0); 1 << n];
    psi[0] = c(1.0, 0.0);
    for op in program.ops() {
        let m = match *op {
            GateOp::Rotation { axis, target, source } => {
                let theta = match source {
                    AngleSource::Feature(k) => features[k],
                    AngleSource::Parameter(j) => params[j],
                    AngleSource::Fixed(v) => v,
                };
                dense_rotation(n, axis, target, theta)
            }
            GateOp::Ecr { first, second } => dense_ecr(n, first, second),
        };
        psi = mat_vec(&m, &psi);
    }
    psi
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn random_axis<R: Rng>(rng: &mut R) -> Axis {
    [Axis::X, Axis::Y, Axis::Z][rng.gen_range(0..3)]
}

/// Random program mixing feature, parameter and fixed rotations with ECRs.
/// Returns the program with matching random features and parameters.
pub fn random_program<R: Rng>(
    rng: &mut R,
    n: usize,
    n_gates: usize,
) -> (GateProgram, Vec<f64>, Vec<f64>) {
    let n_features = rng.gen_range(0..4);
    let n_params = rng.gen_range(1..6);
    let mut ops = Vec::with_capacity(n_gates);
    for _ in 0..n_gates {
        if n > 1 && rng.gen_bool(0.3) {
            let first = rng.gen_range(0..n);
            let mut second = rng.gen_range(0..n - 1);
            if second >= first {
                second += 1;
            }
            ops.push(GateOp::Ecr { first, second });
        } else {
            let source = match rng.gen_range(0..3) {
                0 if n_features > 0 => AngleSource::Feature(rng.gen_range(0..n_features)),
                1 => AngleSource::Fixed(rng.gen_range(-4.0..4.0)),
                _ => AngleSource::Parameter(rng.gen_range(0..n_params)),
            };
            ops.push(GateOp::Rotation {
                axis: random_axis(rng),
                target: rng.gen_range(0..n),
                source,
            });
        }
    }
    let program = GateProgram::new(n, n_features, n_params, ops).expect("valid program");
    let features = (0..n_features).map(|_| rng.gen_range(0.0..3.2)).collect();
    let params = (0..n_params).map(|_| rng.gen_range(-3.2..3.2)).collect();
    (program, features, params)
}

/// Directory holding the four MNIST IDX files: `DAQC_MNIST_DIR`, else
/// `data/mnist` at the workspace root.
pub fn mnist_dir() -> PathBuf {
    std::env::var_os("DAQC_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}
