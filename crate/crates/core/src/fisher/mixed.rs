//! Bures QFIM and symmetric logarithmic derivatives of density matrices.

use rayon::prelude::*;

use super::{FisherKind, FisherMatrix, FisherMeta, FisherMethod};
use crate::circuit::ParamCircuit;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, RMatrix, ZERO};
use crate::simulator::{eigendecompose, run_mixed, DensityMatrix, NoiseModel, Spectrum};

/// Threshold on `|⟨λ_k|∂ρ|λ_k⟩|` for vanishing eigenvalues.
const GRAD_TOL: f64 = 1e-8;

/// Default central-difference step for `∂_i ρ`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// One SLD operator `L_i` per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SldSet {
    pub operators: Vec<CMatrix>,
}

impl SldSet {
    /// `½ Tr{ρ(L_iL_j + L_jL_i)}`.
    pub fn fisher(&self, rho: &DensityMatrix) -> RMatrix {
        let d = self.operators.len();
        let r = rho.matrix();
        RMatrix::from_fn(d, d, |i, j| {
            let (a, b) = (&self.operators[i], &self.operators[j]);
            0.5 * linalg::trace(&(r * (a * b + b * a))).re
        })
    }

    /// `½(L_iρ + ρL_i)`, which equals `∂_iρ` on the support of `ρ`.
    pub fn reconstruct(&self, rho: &DensityMatrix) -> Vec<CMatrix> {
        let r = rho.matrix();
        self.operators.iter().map(|l| (l * r + r * l) * linalg::c(0.5, 0.0)).collect()
    }
}

/// `∂_iρ` by central differences of the noisy circuit output.
pub fn density_derivatives(circuit: &ParamCircuit, theta: &[f64], noise: &NoiseModel, step: f64) -> Result<Vec<CMatrix>> {
    circuit.check_params(theta)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {step}")));
    }
    (0..theta.len())
        .into_par_iter()
        .map(|i| {
            let plus = crate::circuit::shift(theta, i, step)?;
            let minus = crate::circuit::shift(theta, i, -step)?;
            let a = run_mixed(circuit, &plus, noise)?.into_matrix();
            let b = run_mixed(circuit, &minus, noise)?.into_matrix();
            Ok((a - b) * linalg::c(0.5 / step, 0.0))
        })
        .collect()
}

/// Derivatives rotated into the eigenbasis of `ρ`, after the rank-change check.
fn eigen_derivatives(rho: &DensityMatrix, derivs: &[CMatrix], zero_tol: f64) -> Result<(Spectrum, Vec<CMatrix>)> {
    let dim = rho.matrix().nrows();
    for d in derivs {
        if d.nrows() != dim || d.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: d.nrows() });
        }
    }
    let spec = eigendecompose(rho, zero_tol);
    let v = &spec.vectors;
    let rotated: Vec<CMatrix> = derivs.iter().map(|d| v.adjoint() * d * v).collect();
    for (i, dk) in rotated.iter().enumerate() {
        for k in (0..dim).filter(|&k| spec.zero[k]) {
            if dk[(k, k)].norm() > GRAD_TOL {
                return Err(Error::RankChangeDiscontinuity { eigen: k, param: i });
            }
        }
    }
    Ok((spec, rotated))
}

/// `F_ij = Σ_{λ_k+λ_l > tol} 2 Re(⟨k|∂_iρ|l⟩⟨l|∂_jρ|k⟩) / (λ_k + λ_l)`.
pub fn qfim_mixed(rho: &DensityMatrix, derivs: &[CMatrix], zero_tol: f64) -> Result<FisherMatrix> {
    let (spec, rot) = eigen_derivatives(rho, derivs, zero_tol)?;
    let dim = spec.values.len();
    let d = derivs.len();
    let mut out = RMatrix::zeros(d, d);
    for k in 0..dim {
        for l in 0..dim {
            let s = spec.values[k] + spec.values[l];
            if s <= zero_tol {
                continue;
            }
            for i in 0..d {
                for j in i..d {
                    out[(i, j)] += 2.0 * (rot[i][(k, l)] * rot[j][(l, k)]).re / s;
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            out[(i, j)] = out[(j, i)];
        }
    }
    FisherMatrix::new(out, FisherKind::Quantum, FisherMethod::MixedExact)
}

/// QFIM of a noisy circuit with finite-difference derivatives of step `step`.
pub fn qfim_mixed_circuit(circuit: &ParamCircuit, theta: &[f64], noise: &NoiseModel, step: f64) -> Result<FisherMatrix> {
    let rho = run_mixed(circuit, theta, noise)?;
    let derivs = density_derivatives(circuit, theta, noise, step)?;
    let f = qfim_mixed(&rho, &derivs, crate::simulator::DEFAULT_ZERO_TOL)?;
    Ok(f.with_meta(FisherMeta {
        epsilon: Some(step),
        ..FisherMeta::default()
    }))
}

/// `(L_i)_kl = 2⟨k|∂_iρ|l⟩ / (λ_k + λ_l)` in the eigenbasis, zero where the
/// denominator vanishes.
pub fn sld_operators(rho: &DensityMatrix, derivs: &[CMatrix], zero_tol: f64) -> Result<SldSet> {
    let (spec, rot) = eigen_derivatives(rho, derivs, zero_tol)?;
    let dim = spec.values.len();
    let v = &spec.vectors;
    let operators = rot
        .iter()
        .map(|dk| {
            let l = CMatrix::from_fn(dim, dim, |a, b| {
                let s = spec.values[a] + spec.values[b];
                if s > zero_tol {
                    dk[(a, b)] * (2.0 / s)
                } else {
                    ZERO
                }
            });
            let full = v * l * v.adjoint();
            (&full + full.adjoint()) * linalg::c(0.5, 0.0)
        })
        .collect();
    Ok(SldSet { operators })
}
