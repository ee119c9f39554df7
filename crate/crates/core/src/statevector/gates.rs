use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// Row-major 2×2 complex matrix.
pub type Mat2 = [[Complex64; 2]; 2];
/// Row-major 4×4 complex matrix.
pub type Mat4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli axis of a single-qubit rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn from_index(i: u32) -> Axis {
        Axis::ALL[i as usize % 3]
    }

    pub fn pauli(self) -> Mat2 {
        match self {
            Axis::X => [[ZERO, ONE], [ONE, ZERO]],
            Axis::Y => [[ZERO, -I], [I, ZERO]],
            Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

/// `exp(-i angle P / 2)` for the Pauli matrix `P` of `axis`.
pub fn rotation_matrix(axis: Axis, angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    let c = Complex64::new(c, 0.0);
    match axis {
        Axis::X => {
            let m = Complex64::new(0.0, -s);
            [[c, m], [m, c]]
        }
        Axis::Y => {
            let s = Complex64::new(s, 0.0);
            [[c, -s], [s, c]]
        }
        Axis::Z => [
            [Complex64::new(c.re, -s), ZERO],
            [ZERO, Complex64::new(c.re, s)],
        ],
    }
}

/// d/dθ of [`rotation_matrix`], i.e. `-(i/2) P R(θ)`.
pub fn rotation_derivative(axis: Axis, angle: f64) -> Mat2 {
    let half = Complex64::new(0.0, -0.5);
    let p = axis.pauli();
    let r = rotation_matrix(axis, angle);
    let pr = mat2_mul(&p, &r);
    [
        [half * pr[0][0], half * pr[0][1]],
        [half * pr[1][0], half * pr[1][1]],
    ]
}

/// Echoed cross-resonance gate in the basis `|b_second b_first⟩`, i.e. local index
/// `bit(first) + 2 * bit(second)`.
pub fn ecr_matrix() -> Mat4 {
    let h = FRAC_1_SQRT_2;
    let r = Complex64::new(h, 0.0);
    let i = Complex64::new(0.0, h);
    [
        [ZERO, r, ZERO, i],
        [r, ZERO, -i, ZERO],
        [ZERO, i, ZERO, r],
        [-i, ZERO, r, ZERO],
    ]
}

pub fn identity2() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn mat2_dagger(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn mat2_trace(a: &Mat2) -> Complex64 {
    a[0][0] + a[1][1]
}
