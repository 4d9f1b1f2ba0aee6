//! QFIM of pure parametrized states.

use rayon::prelude::*;

use super::{FisherKind, FisherMatrix, FisherMeta, FisherMethod};
use crate::circuit::ParamCircuit;
use crate::divergence::{fidelity_distance, overlap_compute_reverse};
use crate::error::{Error, Result};
use crate::linalg::{RMatrix, C64};
use crate::simulator::{self, inner, run_pure, StateVector};

/// `F_ij = 4 Re[⟨∂_iψ|∂_jψ⟩ - ⟨∂_iψ|ψ⟩⟨ψ|∂_jψ⟩]`.
pub fn qfim_pure(circuit: &ParamCircuit, theta: &[f64]) -> Result<FisherMatrix> {
    let psi = run_pure(circuit, theta)?;
    let dpsi = simulator::derivative_states(circuit, theta)?;
    qfim_from_states(psi.amplitudes(), &dpsi)
}

/// Pure-state QFIM of a normalized `|ψ⟩` with derivative vectors `∂_i|ψ⟩`.
pub fn qfim_from_states(psi: &[C64], dpsi: &[Vec<C64>]) -> Result<FisherMatrix> {
    if let Some(bad) = dpsi.iter().find(|v| v.len() != psi.len()) {
        return Err(Error::DimensionMismatch { expected: psi.len(), found: bad.len() });
    }
    let d = dpsi.len();
    let berry: Vec<C64> = dpsi.iter().map(|dv| inner(dv, psi)).collect();
    let mut out = RMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = 4.0 * (inner(&dpsi[i], &dpsi[j]) - berry[i] * berry[j].conj()).re;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    FisherMatrix::new(out, FisherKind::Quantum, FisherMethod::Exact)
}

/// One layer's block: parameters in gate order and their covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBlock {
    pub params: Vec<usize>,
    pub block: RMatrix,
}

/// Block-diagonal QFIM approximation. Entries coupling different layers are
/// not computed.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBlocks {
    pub d: usize,
    pub blocks: Vec<LayerBlock>,
}

impl LayerBlocks {
    /// `None` when `i` and `j` lie in different layers (or either has no gate).
    pub fn entry(&self, i: usize, j: usize) -> Option<f64> {
        self.blocks.iter().find_map(|b| {
            let a = b.params.iter().position(|&p| p == i)?;
            let c = b.params.iter().position(|&p| p == j)?;
            Some(b.block[(a, c)])
        })
    }

    /// Dense matrix with unset entries as zero.
    pub fn to_block_diagonal(&self) -> RMatrix {
        let mut out = RMatrix::zeros(self.d, self.d);
        for b in &self.blocks {
            for (a, &i) in b.params.iter().enumerate() {
                for (c, &j) in b.params.iter().enumerate() {
                    out[(i, j)] = b.block[(a, c)];
                }
            }
        }
        out
    }
}

/// For each layer, `4(⟨{G_i,G_j}/2⟩ - ⟨G_i⟩⟨G_j⟩)` on the state entering it.
pub fn qfim_layer_blocks(circuit: &ParamCircuit, theta: &[f64]) -> Result<LayerBlocks> {
    circuit.check_params(theta)?;
    let n = circuit.n_qubits();
    simulator::check_size(n, simulator::max_statevector_qubits())?;
    let mut state = StateVector::zero(n);
    let mut blocks = Vec::new();
    for layer in circuit.layers() {
        let rotations: Vec<(usize, Vec<C64>)> = layer
            .iter()
            .filter_map(|&g| {
                let gate = &circuit.gates()[g];
                let p = gate.param()?;
                let gen = gate.generator()?;
                let mut amps = state.amplitudes().to_vec();
                simulator::apply_local(&mut amps, n, gen.matrix(), gen.targets());
                Some((p, amps))
            })
            .collect();
        if !rotations.is_empty() {
            let psi = state.amplitudes();
            let means: Vec<f64> = rotations.iter().map(|(_, g)| inner(psi, g).re).collect();
            let k = rotations.len();
            let block = RMatrix::from_fn(k, k, |a, b| 4.0 * (inner(&rotations[a].1, &rotations[b].1).re - means[a] * means[b]));
            blocks.push(LayerBlock {
                params: rotations.iter().map(|(p, _)| *p).collect(),
                block: crate::linalg::symmetrize(&block),
            });
        }
        for &g in layer {
            let gate = &circuit.gates()[g];
            state.apply(&gate.unitary(theta), gate.targets());
        }
    }
    Ok(LayerBlocks {
        d: circuit.n_params(),
        blocks,
    })
}

/// Four-overlap parameter-shift QFIM with `π/2` shifts.
///
/// Valid only for generators with shift constant 1/2 (Pauli strings over 2).
pub fn qfim_param_shift(circuit: &ParamCircuit, theta: &[f64]) -> Result<FisherMatrix> {
    circuit.check_params(theta)?;
    let d = circuit.n_params();
    for i in 0..d {
        if let Some(g) = circuit.gate_of_param(i) {
            match circuit.gates()[g].shift_constant() {
                Some(r) if (r - 0.5).abs() < 1e-12 => {}
                _ => {
                    return Err(Error::UnsupportedGate(format!(
                        "parameter {i}: four-overlap shift rule needs a Pauli-string/2 generator"
                    )))
                }
            }
        }
    }
    let active: Vec<usize> = (0..d).filter(|&i| circuit.gate_of_param(i).is_some()).collect();
    let pairs: Vec<(usize, usize)> = active
        .iter()
        .flat_map(|&i| active.iter().filter(move |&&j| j >= i).map(move |&j| (i, j)))
        .collect();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<f64> {
            let f = |si: f64, sj: f64| -> Result<f64> {
                let mut shifted = theta.to_vec();
                shifted[i] += si * half_pi;
                shifted[j] += sj * half_pi;
                overlap_compute_reverse(circuit, theta, &shifted)
            };
            let total = f(1.0, 1.0)? - f(1.0, -1.0)? - f(-1.0, 1.0)? + f(-1.0, -1.0)?;
            Ok(-0.5 * total)
        })
        .collect::<Result<_>>()?;
    let mut entries = RMatrix::zeros(d, d);
    for (&(i, j), v) in pairs.iter().zip(values) {
        entries[(i, j)] = v;
        entries[(j, i)] = v;
    }
    Ok(FisherMatrix::symmetrized(entries, FisherKind::Quantum, FisherMethod::ParamShift))
}

/// `vᵀ F v ≈ 4 d_f / ε²`, with `d_f` averaged over the displacements `±εv`.
///
/// The average cancels the cubic term of the infidelity, so the error is
/// `O(ε²)` rather than `O(ε)`.
pub fn qfim_projection_fd(circuit: &ParamCircuit, theta: &[f64], v: &[f64], eps: f64) -> Result<f64> {
    circuit.check_params(theta)?;
    if v.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            found: v.len(),
        });
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("direction must be a unit vector, norm is {norm}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let a = run_pure(circuit, theta)?;
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let moved: Vec<f64> = theta.iter().zip(v).map(|(t, x)| t + sign * eps * x).collect();
        total += fidelity_distance(&a, &run_pure(circuit, &moved)?)?;
    }
    Ok(2.0 * total / (eps * eps))
}

/// Finite-difference projection as a 1×1 information matrix with provenance.
pub fn qfim_projection_fd_matrix(circuit: &ParamCircuit, theta: &[f64], v: &[f64], eps: f64) -> Result<FisherMatrix> {
    let value = qfim_projection_fd(circuit, theta, v, eps)?;
    Ok(FisherMatrix::new(RMatrix::from_element(1, 1, value), FisherKind::Quantum, FisherMethod::FiniteDiff)?.with_meta(FisherMeta {
        epsilon: Some(eps),
        ..FisherMeta::default()
    }))
}
