//! Exact statevector simulation of the Max-Cut QAOA ansatz.
//!
//! The ansatz starts from the uniform superposition and alternates a diagonal
//! cost phase exp(-i γ_j H_z) with the transverse-field mixer exp(-i β_j H_x),
//! H_x = Σ_q X_q. Because H_z is diagonal with integer entries (the cut
//! values), one layer is a table-driven phase multiply followed by n in-place
//! qubit butterflies: O(p · n · 2^n) time, O(2^n) memory, no gate engine.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::Graph;

/// Qubit-count guard; 2^24 amplitudes is the largest state this crate
/// agrees to allocate.
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("{n} qubits exceeds the simulator limit of {limit}")]
    TooManyQubits { n: usize, limit: usize },
    #[error("gamma and beta lengths differ: {gammas} vs {betas}")]
    DepthMismatch { gammas: usize, betas: usize },
    #[error("parameter vector must have depth >= 1")]
    EmptyParameters,
    #[error("flat parameter slice has odd length {0}")]
    OddFlatLength(usize),
}

/// Upper edge of the canonical γ box.
pub const GAMMA_BOX: f64 = std::f64::consts::PI;
/// Upper edge of the canonical β box.
pub const BETA_BOX: f64 = std::f64::consts::FRAC_PI_2;

/// QAOA angles (γ_1..γ_p, β_1..β_p) for a depth-p circuit.
///
/// The flat layout used by optimizers places all gammas first, then all
/// betas, matching the parameter buffer of the layerwise strategies. The
/// simulator accepts any real angles; the strategy layer wraps values into
/// the canonical box γ ∈ [0, π), β ∈ [0, π/2) before handing them out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

impl ParameterVector {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self, SimulatorError> {
        if gammas.len() != betas.len() {
            return Err(SimulatorError::DepthMismatch {
                gammas: gammas.len(),
                betas: betas.len(),
            });
        }
        if gammas.is_empty() {
            return Err(SimulatorError::EmptyParameters);
        }
        Ok(ParameterVector { gammas, betas })
    }

    /// Parse the flat layout (γ_1..γ_p, β_1..β_p).
    pub fn from_flat(flat: &[f64]) -> Result<Self, SimulatorError> {
        if flat.len() % 2 != 0 {
            return Err(SimulatorError::OddFlatLength(flat.len()));
        }
        let p = flat.len() / 2;
        Self::new(flat[..p].to_vec(), flat[p..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = self.gammas.clone();
        flat.extend_from_slice(&self.betas);
        flat
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// The pair (γ_l, β_l) for 0-based layer `l`.
    pub fn layer(&self, l: usize) -> (f64, f64) {
        (self.gammas[l], self.betas[l])
    }

    pub fn set_layer(&mut self, l: usize, gamma: f64, beta: f64) {
        self.gammas[l] = gamma;
        self.betas[l] = beta;
    }

    /// Wrap every angle into the canonical box by its periodicity:
    /// γ mod π, β mod π/2. Values already inside are unchanged.
    pub fn wrapped(&self) -> ParameterVector {
        ParameterVector {
            gammas: self.gammas.iter().map(|g| g.rem_euclid(GAMMA_BOX)).collect(),
            betas: self.betas.iter().map(|b| b.rem_euclid(BETA_BOX)).collect(),
        }
    }
}

/// Diagonal of H_z in the computational basis: entry `z` is the cut value of
/// the assignment packed into `z`. Stored as u8 or u16 depending on |E|.
#[derive(Debug, Clone)]
pub struct CutTable {
    values: CutValues,
    n_edges: u32,
}

#[derive(Debug, Clone)]
enum CutValues {
    U8(Vec<u8>),
    U16(Vec<u16>),
}

impl CutTable {
    pub fn build(graph: &Graph) -> Result<Self, SimulatorError> {
        let n = graph.n_vertices();
        if n > MAX_QUBITS {
            return Err(SimulatorError::TooManyQubits {
                n,
                limit: MAX_QUBITS,
            });
        }
        let dim = 1usize << n;
        let n_edges = graph.n_edges() as u32;
        let values = if n_edges <= u8::MAX as u32 {
            CutValues::U8((0..dim).map(|z| graph.cut_value_index(z) as u8).collect())
        } else {
            CutValues::U16((0..dim).map(|z| graph.cut_value_index(z) as u16).collect())
        };
        Ok(CutTable { values, n_edges })
    }

    pub fn len(&self) -> usize {
        match &self.values {
            CutValues::U8(v) => v.len(),
            CutValues::U16(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, z: usize) -> u32 {
        match &self.values {
            CutValues::U8(v) => v[z] as u32,
            CutValues::U16(v) => v[z] as u32,
        }
    }

    pub fn max(&self) -> u32 {
        match &self.values {
            CutValues::U8(v) => v.iter().copied().max().unwrap_or(0) as u32,
            CutValues::U16(v) => v.iter().copied().max().unwrap_or(0) as u32,
        }
    }

    pub fn n_edges(&self) -> u32 {
        self.n_edges
    }
}

/// Build the cut table for a graph (entry `z` equals the classical cut value
/// of bitstring `z`).
pub fn build_cut_table(graph: &Graph) -> Result<CutTable, SimulatorError> {
    CutTable::build(graph)
}

/// 2^n complex amplitudes of an n-qubit state.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Reusable evaluation buffer for one graph: the cut table plus scratch
/// amplitude and phase-lookup storage.
///
/// One context serves one optimization run at a time; concurrent runs each
/// take their own context (construction is cheap next to an optimization).
pub struct EvalContext {
    n: usize,
    table: CutTable,
    amps: Vec<Complex64>,
    phases: Vec<Complex64>,
}

impl EvalContext {
    pub fn new(graph: &Graph) -> Result<Self, SimulatorError> {
        let table = CutTable::build(graph)?;
        let n = graph.n_vertices();
        Ok(EvalContext {
            n,
            amps: vec![Complex64::ZERO; table.len()],
            phases: vec![Complex64::ZERO; graph.n_edges() + 1],
            table,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> u32 {
        self.table.n_edges()
    }

    pub fn cut_table(&self) -> &CutTable {
        &self.table
    }

    fn reset_uniform(&mut self) {
        let amp = Complex64::new(1.0 / (self.amps.len() as f64).sqrt(), 0.0);
        self.amps.fill(amp);
    }

    fn apply_cost_phase(&mut self, gamma: f64) {
        for (c, slot) in self.phases.iter_mut().enumerate() {
            *slot = Complex64::from_polar(1.0, -gamma * c as f64);
        }
        match &self.table.values {
            CutValues::U8(v) => {
                for (a, &c) in self.amps.iter_mut().zip(v) {
                    *a *= self.phases[c as usize];
                }
            }
            CutValues::U16(v) => {
                for (a, &c) in self.amps.iter_mut().zip(v) {
                    *a *= self.phases[c as usize];
                }
            }
        }
    }

    fn apply_mixer(&mut self, beta: f64) {
        let (sin, cos) = beta.sin_cos();
        let neg_i_sin = Complex64::new(0.0, -sin);
        let dim = self.amps.len();
        for q in 0..self.n {
            let step = 1usize << q;
            let mut base = 0;
            while base < dim {
                for i in base..base + step {
                    let a = self.amps[i];
                    let b = self.amps[i + step];
                    self.amps[i] = cos * a + neg_i_sin * b;
                    self.amps[i + step] = neg_i_sin * a + cos * b;
                }
                base += 2 * step;
            }
        }
    }

    fn prepare(&mut self, gammas: &[f64], betas: &[f64]) {
        self.reset_uniform();
        for (&g, &b) in gammas.iter().zip(betas) {
            self.apply_cost_phase(g);
            self.apply_mixer(b);
        }
    }

    /// Expectation of the cut value in the ansatz state, Σ_z |a_z|² cut(z).
    pub fn expectation(&mut self, params: &ParameterVector) -> f64 {
        self.prepare(params.gammas(), params.betas());
        self.accumulate()
    }

    /// Expectation from the flat (γ.., β..) layout used by optimizers.
    pub fn expectation_flat(&mut self, flat: &[f64]) -> Result<f64, SimulatorError> {
        if flat.len() % 2 != 0 {
            return Err(SimulatorError::OddFlatLength(flat.len()));
        }
        let p = flat.len() / 2;
        if p == 0 {
            return Err(SimulatorError::EmptyParameters);
        }
        let (gammas, betas) = flat.split_at(p);
        let gammas = gammas.to_vec();
        let betas = betas.to_vec();
        self.prepare(&gammas, &betas);
        Ok(self.accumulate())
    }

    /// Prepare the ansatz and copy the amplitudes out.
    pub fn statevector(&mut self, params: &ParameterVector) -> Statevector {
        self.prepare(params.gammas(), params.betas());
        Statevector {
            amps: self.amps.clone(),
        }
    }

    fn accumulate(&self) -> f64 {
        match &self.table.values {
            CutValues::U8(v) => self
                .amps
                .iter()
                .zip(v)
                .map(|(a, &c)| a.norm_sqr() * c as f64)
                .sum(),
            CutValues::U16(v) => self
                .amps
                .iter()
                .zip(v)
                .map(|(a, &c)| a.norm_sqr() * c as f64)
                .sum(),
        }
    }
}

/// One-shot ansatz preparation. For repeated evaluations on the same graph,
/// build an [`EvalContext`] and reuse it.
pub fn prepare_ansatz(
    graph: &Graph,
    params: &ParameterVector,
) -> Result<Statevector, SimulatorError> {
    let mut ctx = EvalContext::new(graph)?;
    Ok(ctx.statevector(params))
}

/// One-shot expectation F(γ, β) = Σ_z |a_z|² cut(z) ∈ [0, |E|].
pub fn expectation(graph: &Graph, params: &ParameterVector) -> Result<f64, SimulatorError> {
    let mut ctx = EvalContext::new(graph)?;
    Ok(ctx.expectation(params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{self, generate_erdos_renyi, generate_regular, Graph, GraphClass};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

    /// Hand-derived p=1 expectation for the isolated single edge.
    fn edge_formula(gamma: f64, beta: f64) -> f64 {
        0.5 + 0.5 * (4.0 * beta).sin() * gamma.sin()
    }

    /// Hand-derived p=1 expectation for the triangle (degree 2, one common
    /// neighbor per edge).
    fn triangle_formula(gamma: f64, beta: f64) -> f64 {
        let per_edge = 0.5 + 0.5 * (4.0 * beta).sin() * gamma.sin() * gamma.cos()
            - 0.25 * (2.0 * beta).sin().powi(2) * (1.0 - (2.0 * gamma).cos());
        3.0 * per_edge
    }

    fn params(gammas: &[f64], betas: &[f64]) -> ParameterVector {
        ParameterVector::new(gammas.to_vec(), betas.to_vec()).unwrap()
    }

    #[test]
    fn cut_table_single_edge() {
        let table = build_cut_table(&graphs::single_edge()).unwrap();
        let values: Vec<u32> = (0..4).map(|z| table.get(z)).collect();
        assert_eq!(values, vec![0, 1, 1, 0]);
    }

    #[test]
    fn cut_table_triangle_max_matches_brute_force() {
        let g = graphs::triangle();
        let table = build_cut_table(&g).unwrap();
        assert_eq!(table.max(), g.max_cut_brute_force().unwrap().c_max);
    }

    #[test]
    fn cut_table_empty_graph() {
        let g = Graph::new(3, vec![], GraphClass::Custom, 0).unwrap();
        let table = build_cut_table(&g).unwrap();
        assert!((0..8).all(|z| table.get(z) == 0));
    }

    #[test]
    fn cut_table_balanced_split_of_k10() {
        let g = graphs::complete(10);
        let table = build_cut_table(&g).unwrap();
        assert_eq!(table.n_edges(), 45);
        // Splitting K10 five/five cuts 5*5 edges.
        assert_eq!(table.get((1 << 5) - 1), 25);
    }

    #[test]
    fn qubit_guard() {
        let g = Graph::new(25, vec![(0, 1)], GraphClass::Custom, 0).unwrap();
        assert!(matches!(
            build_cut_table(&g),
            Err(SimulatorError::TooManyQubits { n: 25, .. })
        ));
    }

    #[test]
    fn zero_parameters_leave_uniform_state() {
        let g = graphs::triangle();
        let sv = prepare_ansatz(&g, &params(&[0.0], &[0.0])).unwrap();
        let expected = 1.0 / (8f64).sqrt();
        for a in sv.amplitudes() {
            assert_relative_eq!(a.re, expected, max_relative = 1e-15);
            assert!(a.im.abs() < 1e-15);
        }
    }

    #[test]
    fn zero_parameters_give_half_edges_exactly() {
        for g in [
            graphs::triangle(),
            graphs::petersen(),
            generate_erdos_renyi(8, 0.5, 11).unwrap(),
        ] {
            let p10 = params(&[0.0; 10], &[0.0; 10]);
            let f = expectation(&g, &p10).unwrap();
            assert!((f - g.n_edges() as f64 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_edge_matches_hand_formula() {
        let g = graphs::single_edge();
        let mut ctx = EvalContext::new(&g).unwrap();
        for (gamma, beta) in [
            (0.7, 0.3),
            (2.1, 1.1),
            (FRAC_PI_2, FRAC_PI_8),
            (FRAC_PI_2, std::f64::consts::FRAC_PI_4),
        ] {
            let f = ctx.expectation(&params(&[gamma], &[beta]));
            assert_relative_eq!(f, edge_formula(gamma, beta), epsilon = 1e-12);
        }
        // Global p=1 maximum of the single edge sits at (π/2, π/8).
        let f_max = ctx.expectation(&params(&[FRAC_PI_2], &[FRAC_PI_8]));
        assert_relative_eq!(f_max, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn triangle_matches_hand_formula() {
        let g = graphs::triangle();
        let mut ctx = EvalContext::new(&g).unwrap();
        for (gamma, beta) in [(0.7, 0.3), (2.1, 1.1), (0.5, 0.25)] {
            let f = ctx.expectation(&params(&[gamma], &[beta]));
            assert_relative_eq!(f, triangle_formula(gamma, beta), epsilon = 1e-12);
        }
    }

    #[test]
    fn triangle_grid_max_matches_formula_grid_max() {
        let g = graphs::triangle();
        let mut ctx = EvalContext::new(&g).unwrap();
        let mut sim_best = f64::NEG_INFINITY;
        let mut formula_best = f64::NEG_INFINITY;
        for i in 0..200 {
            let gamma = GAMMA_BOX * i as f64 / 200.0;
            for j in 0..200 {
                let beta = BETA_BOX * j as f64 / 200.0;
                sim_best = sim_best.max(ctx.expectation(&params(&[gamma], &[beta])));
                formula_best = formula_best.max(triangle_formula(gamma, beta));
            }
        }
        assert_relative_eq!(sim_best, formula_best, epsilon = 1e-9);
        // The triangle is solved exactly at p=1; the fine grid gets close.
        assert!((sim_best - 2.0).abs() < 1e-3);
    }

    #[test]
    fn flat_layout_round_trip() {
        let pv = params(&[0.1, 0.2, 0.3], &[0.4, 0.5, 0.6]);
        let flat = pv.to_flat();
        assert_eq!(flat, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        assert_eq!(ParameterVector::from_flat(&flat).unwrap(), pv);
        assert!(matches!(
            ParameterVector::from_flat(&[1.0, 2.0, 3.0]),
            Err(SimulatorError::OddFlatLength(3))
        ));
    }

    #[test]
    fn wrap_into_box() {
        let pv = params(&[-0.1, GAMMA_BOX + 0.2, 0.5], &[BETA_BOX + 0.1, -0.2, 0.3]);
        let w = pv.wrapped();
        for (&g, &b) in w.gammas().iter().zip(w.betas()) {
            assert!((0.0..GAMMA_BOX).contains(&g));
            assert!((0.0..BETA_BOX).contains(&b));
        }
        assert_relative_eq!(w.gammas()[0], GAMMA_BOX - 0.1, epsilon = 1e-12);
        assert_relative_eq!(w.betas()[1], BETA_BOX - 0.2, epsilon = 1e-12);
        assert_eq!(w.gammas()[2], 0.5);
    }

    #[test]
    fn finite_differences_are_smooth() {
        let g = generate_regular(6, 3, 5).unwrap();
        let mut ctx = EvalContext::new(&g).unwrap();
        let flat = [0.4, 0.7, 0.2, 0.3, 0.9, 0.15];
        for i in 0..flat.len() {
            let mut central = |h: f64| {
                let mut plus = flat;
                plus[i] += h;
                let mut minus = flat;
                minus[i] -= h;
                (ctx.expectation_flat(&plus).unwrap() - ctx.expectation_flat(&minus).unwrap())
                    / (2.0 * h)
            };
            let d5 = central(1e-5);
            let d6 = central(1e-6);
            assert!(
                (d5 - d6).abs() < 1e-3,
                "finite differences disagree at coordinate {i}: {d5} vs {d6}"
            );
        }
    }

    proptest! {
        #[test]
        fn norm_preserved_at_depth_10(seed in 0u64..200, angle_seed in 0u64..1000) {
            use rand::{RngExt, SeedableRng};
            let g = generate_erdos_renyi(6, 0.5, seed).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(angle_seed);
            let gammas: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..GAMMA_BOX)).collect();
            let betas: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..BETA_BOX)).collect();
            let sv = prepare_ansatz(&g, &params(&gammas, &betas)).unwrap();
            prop_assert!((sv.norm_sqr() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn expectation_within_edge_bounds(
            seed in 0u64..200,
            gamma in 0.0..GAMMA_BOX,
            beta in 0.0..BETA_BOX,
        ) {
            let g = generate_erdos_renyi(7, 0.4, seed).unwrap();
            let f = expectation(&g, &params(&[gamma], &[beta])).unwrap();
            prop_assert!(f >= -1e-12);
            prop_assert!(f <= g.n_edges() as f64 + 1e-12);
        }

        #[test]
        fn periodicity_in_gamma_and_beta(
            gamma in 0.0..GAMMA_BOX,
            beta in 0.0..BETA_BOX,
            seed in 0u64..100,
        ) {
            let g = generate_regular(6, 3, seed).unwrap();
            let mut ctx = EvalContext::new(&g).unwrap();
            let base = ctx.expectation(&params(&[gamma, 0.3], &[beta, 0.2]));
            let shifted_gamma = ctx.expectation(&params(&[gamma + 2.0 * PI, 0.3], &[beta, 0.2]));
            let shifted_beta = ctx.expectation(&params(&[gamma, 0.3], &[beta + PI, 0.2]));
            prop_assert!((base - shifted_gamma).abs() < 1e-9);
            prop_assert!((base - shifted_beta).abs() < 1e-9);
        }
    }
}
