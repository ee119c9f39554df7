//! Gate programs and their execution engine.
//!
//! A [`GateProgram`] is an ordered list of [`GateOp`]s over a fixed register.
//! For execution it is compiled into stages: maximal runs of single-qubit
//! rotations are grouped per wire and fused into one 2×2 matrix per wire, and
//! runs of ECR gates are kept in order. Rotations on different wires commute,
//! so this regrouping is exact. Each stage then costs one kernel pass per wire
//! (or per ECR), independent of how many rotations were fused. Within a stage,
//! gates are further grouped into cache-sized blocks.

use crate::error::{DaqcError, Result};
use crate::statevector::blocks::{self, Layout};
use crate::statevector::split::{self, Split};
use crate::statevector::{check_capacity, kernels};
use crate::statevector::{
    identity2, mat2_dagger, mat2_mul, mat2_trace, rotation_derivative, rotation_matrix, Axis, Mat2,
    StateVector,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Where a rotation takes its angle from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleSource {
    Feature(usize),
    Parameter(usize),
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateOp {
    Rotation {
        axis: Axis,
        target: usize,
        source: AngleSource,
    },
    Ecr {
        first: usize,
        second: usize,
    },
}

/// Observable for expectation-valued costs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// ⟨Z_i⟩
    Z(usize),
    /// ⟨⊗_{i ∈ set} Z_i⟩
    ZProduct(Vec<usize>),
}

impl Observable {
    /// Z on every wire of an `n`-qubit register.
    pub fn global(n_qubits: usize) -> Self {
        Observable::ZProduct((0..n_qubits).collect())
    }

    fn mask(&self, n_qubits: usize) -> Result<usize> {
        let wires: &[usize] = match self {
            Observable::Z(q) => std::slice::from_ref(q),
            Observable::ZProduct(qs) => qs,
        };
        let mut mask = 0;
        for &q in wires {
            if q >= n_qubits {
                return Err(DaqcError::Index(format!(
                    "observable acts on qubit {q} of a {n_qubits}-qubit register"
                )));
            }
            mask |= 1usize << q;
        }
        Ok(mask)
    }

    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let mask = self.mask(state.n_qubits())?;
        Ok(kernels::expect_z_mask(state.amplitudes(), mask))
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Chain {
    qubit: usize,
    rotations: Vec<(Axis, AngleSource)>,
}

#[derive(Clone, Debug, PartialEq)]
enum Stage {
    Local(Vec<Chain>),
    Entangle(Vec<(usize, usize)>),
}

#[derive(Clone)]
enum Prepared {
    Local(Vec<(usize, Mat2)>),
    Entangle(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateProgram {
    n_qubits: usize,
    n_features: usize,
    n_params: usize,
    ops: Vec<GateOp>,
    stages: Vec<Stage>,
    plans: Vec<Vec<(Range<usize>, Layout)>>,
}

impl GateProgram {
    pub fn new(
        n_qubits: usize,
        n_features: usize,
        n_params: usize,
        ops: Vec<GateOp>,
    ) -> Result<Self> {
        check_capacity(n_qubits)?;
        for op in &ops {
            match *op {
                GateOp::Rotation { target, source, .. } => {
                    if target >= n_qubits {
                        return Err(DaqcError::Index(format!(
                            "rotation target {target} outside {n_qubits} qubits"
                        )));
                    }
                    match source {
                        AngleSource::Feature(k) if k >= n_features => {
                            return Err(DaqcError::Index(format!(
                                "feature index {k} outside {n_features} features"
                            )))
                        }
                        AngleSource::Parameter(j) if j >= n_params => {
                            return Err(DaqcError::Index(format!(
                                "parameter index {j} outside {n_params} parameters"
                            )))
                        }
                        AngleSource::Fixed(v) if !v.is_finite() => {
                            return Err(DaqcError::Numeric(format!("fixed angle {v}")))
                        }
                        _ => {}
                    }
                }
                GateOp::Ecr { first, second } => {
                    if first >= n_qubits || second >= n_qubits || first == second {
                        return Err(DaqcError::Index(format!(
                            "invalid ECR wires ({first}, {second}) on {n_qubits} qubits"
                        )));
                    }
                }
            }
        }
        let stages = compile(n_qubits, &ops);
        let plans = stages
            .iter()
            .map(|stage| {
                let wires: Vec<Vec<usize>> = match stage {
                    Stage::Local(chains) => chains.iter().map(|c| vec![c.qubit]).collect(),
                    Stage::Entangle(edges) => edges.iter().map(|&(a, b)| vec![a, b]).collect(),
                };
                blocks::plan(n_qubits, &wires)
            })
            .collect();
        Ok(Self {
            n_qubits,
            n_features,
            n_params,
            ops,
            stages,
            plans,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    /// Number of kernel passes one forward execution performs.
    pub fn kernel_passes(&self) -> usize {
        self.stages
            .iter()
            .map(|s| match s {
                Stage::Local(c) => c.len(),
                Stage::Entangle(e) => e.len(),
            })
            .sum()
    }

    fn check_inputs(&self, features: &[f64], params: &[f64]) -> Result<()> {
        if features.len() != self.n_features {
            return Err(DaqcError::Shape(format!(
                "expected {} features, got {}",
                self.n_features,
                features.len()
            )));
        }
        if params.len() != self.n_params {
            return Err(DaqcError::Shape(format!(
                "expected {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        if features.iter().chain(params).any(|x| !x.is_finite()) {
            return Err(DaqcError::Numeric("non-finite angle".into()));
        }
        Ok(())
    }

    fn prepare(&self, features: &[f64], params: &[f64]) -> Vec<Prepared> {
        self.stages
            .iter()
            .map(|stage| match stage {
                Stage::Local(chains) => Prepared::Local(
                    chains
                        .iter()
                        .map(|c| (c.qubit, chain_matrix(c, features, params)))
                        .collect(),
                ),
                Stage::Entangle(edges) => Prepared::Entangle(edges.clone()),
            })
            .collect()
    }

    /// Initial state and index of the first stage still to apply.
    fn initial_state(&self, prepared: &[Prepared]) -> (Split, usize) {
        match prepared.first() {
            Some(Prepared::Local(mats)) => (self.product_after_first(mats), 1),
            _ => (Split::basis_zero(self.n_qubits), 0),
        }
    }

    /// A leading rotation stage acting on `|0…0⟩` yields a product state.
    fn product_after_first(&self, mats: &[(usize, Mat2)]) -> Split {
        let zero = Complex64::new(0.0, 0.0);
        let mut qubits = vec![[Complex64::new(1.0, 0.0), zero]; self.n_qubits];
        for (q, m) in mats {
            qubits[*q] = [m[0][0], m[1][0]];
        }
        Split::product(&qubits)
    }

    /// Simulate the program from `|0…0⟩`.
    pub fn run(&self, features: &[f64], params: &[f64]) -> Result<StateVector> {
        self.check_inputs(features, params)?;
        let prepared = self.prepare(features, params);
        let (mut state, start) = self.initial_state(&prepared);
        for (stage, plan) in prepared.iter().zip(&self.plans).skip(start) {
            apply_prepared(&mut state, self.n_qubits, stage, plan);
        }
        Ok(StateVector::from_raw(self.n_qubits, state.to_complex()))
    }

    /// Gate-by-gate simulation through the checked [`StateVector`] API, without
    /// any fusion. Slow; used to cross-check [`GateProgram::run`].
    pub fn run_unfused(&self, features: &[f64], params: &[f64]) -> Result<StateVector> {
        self.check_inputs(features, params)?;
        let mut state = StateVector::new_zero_state(self.n_qubits)?;
        for op in &self.ops {
            match *op {
                GateOp::Rotation {
                    axis,
                    target,
                    source,
                } => state.apply_rotation(axis, target, angle_of(source, features, params))?,
                GateOp::Ecr { first, second } => state.apply_ecr(first, second)?,
            }
        }
        Ok(state)
    }

    /// Forward simulation followed by a reverse-mode gradient of a real cost
    /// `L` of the final state.
    ///
    /// `seed` sees the final state and must return the amplitudes of `A|ψ⟩`,
    /// where `dL = 2 Re⟨Aψ|dψ⟩`; for `L = Σ_i g_i ⟨Z_i⟩` that is
    /// [`StateVector::weighted_z_action`] with weights `g`. Returns the final
    /// state and `∂L/∂θ_j` for every parameter slot.
    ///
    /// The forward pass keeps the state after every rotation stage, so the
    /// sweep only moves the adjoint state backwards.
    pub fn adjoint_gradient<F>(
        &self,
        features: &[f64],
        params: &[f64],
        seed: F,
    ) -> Result<(StateVector, Vec<f64>)>
    where
        F: FnOnce(&StateVector) -> Result<Vec<Complex64>>,
    {
        self.check_inputs(features, params)?;
        let n = self.n_qubits;
        let prepared = self.prepare(features, params);
        let (mut state, start) = self.initial_state(&prepared);
        let mut after: Vec<Option<Split>> = vec![None; prepared.len()];
        if start == 1 {
            after[0] = Some(state.clone());
        }
        for s in start..prepared.len() {
            apply_prepared(&mut state, n, &prepared[s], &self.plans[s]);
            if matches!(prepared[s], Prepared::Local(_)) {
                after[s] = Some(state.clone());
            }
        }
        let final_state = StateVector::from_raw(n, state.to_complex());
        drop(state);
        let seed = seed(&final_state)?;
        if seed.len() != 1usize << n {
            return Err(DaqcError::Shape(format!(
                "adjoint seed has {} amplitudes, expected {}",
                seed.len(),
                1usize << n
            )));
        }
        let mut lam = Split::from_complex(&seed);
        let mut grad = vec![0.0; self.n_params];
        for s in (0..prepared.len()).rev() {
            let plan = &self.plans[s];
            match (&prepared[s], &self.stages[s]) {
                (Prepared::Local(mats), Stage::Local(chains)) => {
                    let mut psi = after[s].take().expect("stage checkpoint");
                    let zero = [[Complex64::new(0.0, 0.0); 2]; 2];
                    let mut cross = vec![zero; mats.len()];
                    for (range, layout) in plan {
                        blocks::for_each_block(
                            [&mut psi.re, &mut psi.im, &mut lam.re, &mut lam.im],
                            n,
                            layout,
                            |[pr, pi, lr, li]| {
                                for k in range.clone() {
                                    let c = split::cross_reduced(pr, pi, lr, li, layout.local(mats[k].0));
                                    for (row, crow) in cross[k].iter_mut().zip(&c) {
                                        for (x, y) in row.iter_mut().zip(crow) {
                                            *x += y;
                                        }
                                    }
                                }
                            },
                        );
                    }
                    // gates on distinct wires commute, so each one can be taken
                    // as the last of its stage: ψ before it is g†ψ_after
                    for ((chain, (_, g)), c) in chains.iter().zip(mats).zip(&cross) {
                        let m = mat2_mul(&mat2_dagger(g), c);
                        accumulate_chain_gradient(chain, features, params, &m, &mut grad);
                    }
                    if s > 0 {
                        let daggers: Vec<(usize, Mat2)> =
                            mats.iter().map(|(q, g)| (*q, mat2_dagger(g))).collect();
                        apply_prepared(&mut lam, n, &Prepared::Local(daggers), plan);
                    }
                }
                (Prepared::Entangle(edges), _) => {
                    // ECR is Hermitian and self-inverse; undo the ring in reverse
                    for (range, layout) in plan.iter().rev() {
                        blocks::for_each_block([&mut lam.re, &mut lam.im], n, layout, |[r, i]| {
                            for &(a, b) in edges[range.clone()].iter().rev() {
                                split::apply_ecr(r, i, layout.local(a), layout.local(b));
                            }
                        });
                    }
                }
                _ => unreachable!("prepared stages mirror compiled stages"),
            }
        }
        Ok((final_state, grad))
    }

    /// `∂⟨O⟩/∂θ_j = ½[⟨O⟩(θ_j + π/2) − ⟨O⟩(θ_j − π/2)]` for every parameter and
    /// every listed observable, from exact shifted-circuit evaluations.
    ///
    /// A parameter that feeds several rotations is shifted one occurrence at a
    /// time and the contributions summed. States at stage boundaries are cached
    /// so a shifted evaluation only re-simulates from the stage holding the
    /// shifted rotation onwards. Result is indexed `[observable][parameter]`.
    pub fn parameter_shift(
        &self,
        features: &[f64],
        params: &[f64],
        observables: &[Observable],
    ) -> Result<Vec<Vec<f64>>> {
        self.check_inputs(features, params)?;
        let n = self.n_qubits;
        let masks = observables
            .iter()
            .map(|o| o.mask(n))
            .collect::<Result<Vec<_>>>()?;
        let prepared = self.prepare(features, params);
        let (init, start) = self.initial_state(&prepared);
        // before[s] = state entering stage s (for s >= start)
        let mut before: Vec<Option<Split>> = vec![None; prepared.len()];
        let mut state = init;
        for s in start..prepared.len() {
            before[s] = Some(state.clone());
            apply_prepared(&mut state, n, &prepared[s], &self.plans[s]);
        }
        drop(state);

        let shift = std::f64::consts::FRAC_PI_2;
        let mut grads = vec![vec![0.0; self.n_params]; observables.len()];
        for (s, stage) in self.stages.iter().enumerate() {
            let Stage::Local(chains) = stage else { continue };
            let Prepared::Local(mats) = &prepared[s] else { unreachable!() };
            for (ci, chain) in chains.iter().enumerate() {
                for (pos, &(_, source)) in chain.rotations.iter().enumerate() {
                    let AngleSource::Parameter(j) = source else { continue };
                    let mut values = [vec![0.0; masks.len()], vec![0.0; masks.len()]];
                    for (slot, sign) in [(0, 1.0), (1, -1.0)] {
                        let mut local = mats.clone();
                        local[ci].1 = chain_matrix_with_shift(chain, features, params, pos, sign * shift);
                        let mut state = if s < start {
                            self.product_after_first(&local)
                        } else {
                            let mut st = before[s].clone().expect("checkpoint");
                            apply_prepared(&mut st, n, &Prepared::Local(local), &self.plans[s]);
                            st
                        };
                        for (later, plan) in prepared.iter().zip(&self.plans).skip(s + 1) {
                            apply_prepared(&mut state, n, later, plan);
                        }
                        for (v, &mask) in values[slot].iter_mut().zip(&masks) {
                            *v = state.expect_z_mask(mask);
                        }
                    }
                    for (o, g) in grads.iter_mut().enumerate() {
                        g[j] += 0.5 * (values[0][o] - values[1][o]);
                    }
                }
            }
        }
        Ok(grads)
    }
}

fn angle_of(source: AngleSource, features: &[f64], params: &[f64]) -> f64 {
    match source {
        AngleSource::Feature(k) => features[k],
        AngleSource::Parameter(j) => params[j],
        AngleSource::Fixed(v) => v,
    }
}

fn chain_matrix(chain: &Chain, features: &[f64], params: &[f64]) -> Mat2 {
    chain.rotations.iter().fold(identity2(), |acc, &(axis, src)| {
        mat2_mul(&rotation_matrix(axis, angle_of(src, features, params)), &acc)
    })
}

fn chain_matrix_with_shift(
    chain: &Chain,
    features: &[f64],
    params: &[f64],
    shifted: usize,
    delta: f64,
) -> Mat2 {
    chain
        .rotations
        .iter()
        .enumerate()
        .fold(identity2(), |acc, (i, &(axis, src))| {
            let mut angle = angle_of(src, features, params);
            if i == shifted {
                angle += delta;
            }
            mat2_mul(&rotation_matrix(axis, angle), &acc)
        })
}

/// Adds `2 Re Tr(∂G/∂θ · M)` for each parameterized rotation of a fused chain
/// `G = R_m ⋯ R_1`.
fn accumulate_chain_gradient(
    chain: &Chain,
    features: &[f64],
    params: &[f64],
    m: &Mat2,
    grad: &mut [f64],
) {
    let rots: Vec<Mat2> = chain
        .rotations
        .iter()
        .map(|&(axis, src)| rotation_matrix(axis, angle_of(src, features, params)))
        .collect();
    let len = rots.len();
    // prefix[k] = R_k ⋯ R_1 (prefix[0] = I); suffix[k] = R_m ⋯ R_{k+1}
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(identity2());
    for r in &rots {
        let next = mat2_mul(r, prefix.last().unwrap());
        prefix.push(next);
    }
    let mut suffix = vec![identity2(); len + 1];
    for k in (0..len).rev() {
        suffix[k] = mat2_mul(&suffix[k + 1], &rots[k]);
    }
    for (k, &(axis, src)) in chain.rotations.iter().enumerate() {
        let AngleSource::Parameter(j) = src else { continue };
        let d = rotation_derivative(axis, params[j]);
        // Tr(S D P M) = Tr(D · (P M S))
        let pms = mat2_mul(&mat2_mul(&prefix[k], m), &suffix[k + 1]);
        grad[j] += 2.0 * mat2_trace(&mat2_mul(&d, &pms)).re;
    }
}

fn apply_prepared(state: &mut Split, n_qubits: usize, stage: &Prepared, plan: &[(Range<usize>, Layout)]) {
    for (range, layout) in plan {
        blocks::for_each_block([&mut state.re, &mut state.im], n_qubits, layout, |[r, i]| {
            match stage {
                Prepared::Local(mats) => {
                    for (q, m) in &mats[range.clone()] {
                        split::apply_1q(r, i, layout.local(*q), m);
                    }
                }
                Prepared::Entangle(edges) => {
                    for &(a, b) in &edges[range.clone()] {
                        split::apply_ecr(r, i, layout.local(a), layout.local(b));
                    }
                }
            }
        });
    }
}

fn compile(n_qubits: usize, ops: &[GateOp]) -> Vec<Stage> {
    let mut stages = Vec::new();
    let mut chains: Vec<Option<Chain>> = vec![None; n_qubits];
    let mut order: Vec<usize> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();

    let flush_local = |chains: &mut Vec<Option<Chain>>, order: &mut Vec<usize>, stages: &mut Vec<Stage>| {
        if !order.is_empty() {
            // rotations on distinct wires commute; wire order keeps blocks compact
            order.sort_unstable();
            let local = order.drain(..).map(|q| chains[q].take().unwrap()).collect();
            stages.push(Stage::Local(local));
        }
    };

    for op in ops {
        match *op {
            GateOp::Rotation {
                axis,
                target,
                source,
            } => {
                if !edges.is_empty() {
                    stages.push(Stage::Entangle(std::mem::take(&mut edges)));
                }
                let chain = chains[target].get_or_insert_with(|| {
                    order.push(target);
                    Chain {
                        qubit: target,
                        rotations: Vec::new(),
                    }
                });
                chain.rotations.push((axis, source));
            }
            GateOp::Ecr { first, second } => {
                flush_local(&mut chains, &mut order, &mut stages);
                edges.push((first, second));
            }
        }
    }
    flush_local(&mut chains, &mut order, &mut stages);
    if !edges.is_empty() {
        stages.push(Stage::Entangle(edges));
    }
    stages
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn rot(axis: Axis, target: usize, source: AngleSource) -> GateOp {
        GateOp::Rotation {
            axis,
            target,
            source,
        }
    }

    #[test]
    fn compile_groups_rotations_between_entanglers() {
        let ops = vec![
            rot(Axis::X, 0, AngleSource::Fixed(0.1)),
            rot(Axis::Y, 1, AngleSource::Fixed(0.2)),
            rot(Axis::Z, 0, AngleSource::Parameter(0)),
            GateOp::Ecr { first: 0, second: 1 },
            GateOp::Ecr { first: 1, second: 0 },
            rot(Axis::X, 1, AngleSource::Feature(0)),
        ];
        let p = GateProgram::new(2, 1, 1, ops).unwrap();
        assert_eq!(p.stages.len(), 3);
        assert_eq!(p.kernel_passes(), 2 + 2 + 1);
    }

    #[test]
    fn ry_gradient_is_minus_sine() {
        let p = GateProgram::new(1, 0, 1, vec![rot(Axis::Y, 0, AngleSource::Parameter(0))]).unwrap();
        for &theta in &[0.3, PI / 2.0, 2.0] {
            let g = p.parameter_shift(&[], &[theta], &[Observable::Z(0)]).unwrap();
            assert_abs_diff_eq!(g[0][0], -theta.sin(), epsilon = 1e-12);
        }
        let g = p
            .parameter_shift(&[], &[PI / 2.0], &[Observable::Z(0)])
            .unwrap();
        assert_abs_diff_eq!(g[0][0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn rz_on_ground_state_has_zero_gradient() {
        let p = GateProgram::new(
            2,
            0,
            1,
            vec![
                rot(Axis::Z, 0, AngleSource::Parameter(0)),
                GateOp::Ecr { first: 0, second: 1 },
            ],
        )
        .unwrap();
        let g = p.parameter_shift(&[], &[0.7], &[Observable::Z(0), Observable::Z(1)]).unwrap();
        assert_abs_diff_eq!(g[0][0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g[1][0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn invalid_programs_are_rejected() {
        assert!(matches!(
            GateProgram::new(2, 0, 0, vec![GateOp::Ecr { first: 1, second: 1 }]),
            Err(DaqcError::Index(_))
        ));
        assert!(matches!(
            GateProgram::new(2, 1, 0, vec![rot(Axis::X, 0, AngleSource::Feature(1))]),
            Err(DaqcError::Index(_))
        ));
        assert!(matches!(
            GateProgram::new(2, 0, 1, vec![rot(Axis::X, 2, AngleSource::Parameter(0))]),
            Err(DaqcError::Index(_))
        ));
        assert!(matches!(
            GateProgram::new(30, 0, 0, vec![]),
            Err(DaqcError::Capacity(_))
        ));
    }

    #[test]
    fn run_checks_lengths() {
        let p = GateProgram::new(2, 1, 1, vec![rot(Axis::X, 0, AngleSource::Parameter(0))]).unwrap();
        assert!(matches!(p.run(&[], &[0.1]), Err(DaqcError::Shape(_))));
        assert!(matches!(p.run(&[0.0], &[]), Err(DaqcError::Shape(_))));
    }

    fn random_program(n: usize, layers: usize, seed: u64) -> (GateProgram, Vec<f64>, Vec<f64>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut ops = Vec::new();
        let mut n_params = 0;
        for l in 0..layers {
            for q in 0..n {
                let axis = Axis::from_index(rng.gen_range(0..3));
                let source = if (q + l) % 3 == 0 {
                    AngleSource::Feature(q)
                } else {
                    n_params += 1;
                    AngleSource::Parameter(n_params - 1)
                };
                ops.push(rot(axis, q, source));
            }
            for q in 0..n {
                if rng.gen_bool(0.6) {
                    ops.push(GateOp::Ecr { first: q, second: (q + 1 + l) % n });
                }
            }
        }
        // one parameter reused on two wires
        ops.push(rot(Axis::Y, n - 1, AngleSource::Parameter(0)));
        let features: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..PI)).collect();
        let params: Vec<f64> = (0..n_params).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        (GateProgram::new(n, n, n_params, ops).unwrap(), features, params)
    }

    #[test]
    fn blocked_engine_matches_unfused_beyond_block_size() {
        let n = blocks::BLOCK_BITS + 2;
        let (p, f, th) = random_program(n, 3, 7);
        assert!(p.plans.iter().any(|plan| plan.iter().any(|(_, l)| !l.high.is_empty())));
        let fused = p.run(&f, &th).unwrap();
        let plain = p.run_unfused(&f, &th).unwrap();
        for (a, b) in fused.amplitudes().iter().zip(plain.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_matches_parameter_shift_beyond_block_size() {
        let n = blocks::BLOCK_BITS + 2;
        let (p, f, th) = random_program(n, 2, 11);
        let w: Vec<f64> = (0..n).map(|q| 0.3 - 0.05 * q as f64).collect();
        let (state, adj) = p.adjoint_gradient(&f, &th, |s| s.weighted_z_action(&w)).unwrap();
        assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        let obs: Vec<Observable> = (0..n).map(Observable::Z).collect();
        let ps = p.parameter_shift(&f, &th, &obs).unwrap();
        for j in 0..th.len() {
            let want: f64 = (0..n).map(|q| w[q] * ps[q][j]).sum();
            assert_abs_diff_eq!(adj[j], want, epsilon = 1e-10);
        }
    }

    #[test]
    fn adjoint_with_product_observable() {
        let (p, f, th) = random_program(5, 3, 3);
        let all: Vec<usize> = (0..5).collect();
        let (_, adj) = p.adjoint_gradient(&f, &th, |s| s.z_product_action(&all)).unwrap();
        let ps = p.parameter_shift(&f, &th, &[Observable::global(5)]).unwrap();
        for j in 0..th.len() {
            assert_abs_diff_eq!(adj[j], ps[0][j], epsilon = 1e-12);
        }
    }

    #[test]
    fn adjoint_seed_width_is_checked() {
        let (p, f, th) = random_program(3, 1, 0);
        let r = p.adjoint_gradient(&f, &th, |_| Ok(vec![Complex64::new(0.0, 0.0); 4]));
        assert!(matches!(r, Err(DaqcError::Shape(_))));
    }
}
