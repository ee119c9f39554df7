//! Per-amplitude cost of the single-qubit and ECR kernels by target wire.

use daqc::statevector::{rotation_matrix, Axis, StateVector};
use std::time::Instant;

fn main() {
    for n in [10usize, 16] {
        let mut s = StateVector::new_zero_state(n).unwrap();
        let m = rotation_matrix(Axis::Y, 0.3);
        let reps = 200_000 >> (n - 10);
        for q in [0usize, 1, 5, n - 1] {
            let t = Instant::now();
            for _ in 0..reps {
                s.apply_single(q, &m).unwrap();
            }
            let per = t.elapsed().as_secs_f64() / reps as f64;
            println!("n={n} 1q target {q}: {:.3} ns/amp", per * 1e9 / (1u64 << n) as f64);
        }
        for (a, b) in [(0usize, 1usize), (3, 8), (n - 1, 0)] {
            let t = Instant::now();
            for _ in 0..reps {
                s.apply_ecr(a, b).unwrap();
            }
            let per = t.elapsed().as_secs_f64() / reps as f64;
            println!("n={n} ecr {a},{b}: {:.3} ns/amp", per * 1e9 / (1u64 << n) as f64);
        }
    }
}
