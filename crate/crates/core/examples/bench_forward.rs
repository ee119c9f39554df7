//! Timing for the 16-qubit default circuit: forward pass and adjoint gradient.

use daqc::circuit::{build_circuit, DaqcConfig};
use std::time::Instant;

fn main() {
    let spec = build_circuit(&DaqcConfig::default()).unwrap();
    let p = spec.program();
    let f: Vec<f64> = (0..256).map(|i| (i as f64 * 0.37) % 3.1).collect();
    let th: Vec<f64> = (0..512).map(|i| (i as f64 * 0.71) % 6.2).collect();
    println!("passes {}", p.kernel_passes());
    let reps = 20;
    let t = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(p.run(&f, &th).unwrap());
    }
    println!("forward {:?}", t.elapsed() / reps);
    let w: Vec<f64> = (0..16).map(|i| 0.1 * i as f64).collect();
    let t = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(p.adjoint_gradient(&f, &th, |s| s.weighted_z_action(&w)).unwrap());
    }
    println!("forward+adjoint {:?}", t.elapsed() / reps);
}
