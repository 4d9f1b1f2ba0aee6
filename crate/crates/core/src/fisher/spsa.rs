//! Rank-2 stochastic QFIM estimates from four fidelity evaluations.
//!
//! With `δF = f(ε(v₁+v₂)) - f(-εv₁) - f(ε(-v₁+v₂)) + f(εv₁)` and
//! `f(δ) = |⟨ψ(θ)|ψ(θ+δ)⟩|²`, expanding to second order gives
//! `δF ≈ -ε² v₁ᵀFv₂`, so `-δF/(2ε²) (v₁v₂ᵀ + v₂v₁ᵀ)` has expectation `F/d²`
//! for directions with i.i.d. components `±1/√d`. Each sample is therefore
//! multiplied by `d²`; for `d = 1` the factor is 1 and a single sample is the
//! second finite difference of the fidelity.

use rand::Rng;
use rayon::prelude::*;

use super::{FisherKind, FisherMatrix, FisherMeta, FisherMethod};
use crate::circuit::ParamCircuit;
use crate::divergence::overlap_compute_reverse;
use crate::error::{Error, Result};
use crate::linalg::{self, RMatrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpsaOptions {
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    pub psd_project: bool,
}

impl SpsaOptions {
    pub fn new(epsilon: f64, samples: usize, seed: u64) -> Self {
        Self {
            epsilon,
            samples,
            seed,
            psd_project: false,
        }
    }
}

/// Calibrated single estimate for the given perturbation directions.
pub fn spsa_estimate(circuit: &ParamCircuit, theta: &[f64], v1: &[f64], v2: &[f64], eps: f64) -> Result<RMatrix> {
    circuit.check_params(theta)?;
    let d = theta.len();
    for v in [v1, v2] {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: v.len() });
        }
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let f = |a: f64, b: f64| -> Result<f64> {
        let shifted: Vec<f64> = (0..d).map(|k| theta[k] + eps * (a * v1[k] + b * v2[k])).collect();
        overlap_compute_reverse(circuit, theta, &shifted)
    };
    let delta = f(1.0, 1.0)? - f(-1.0, 0.0)? - f(-1.0, 1.0)? + f(1.0, 0.0)?;
    let a = nalgebra::DVector::from_column_slice(v1);
    let b = nalgebra::DVector::from_column_slice(v2);
    let outer = &a * b.transpose() + &b * a.transpose();
    let scale = -delta / (2.0 * eps * eps) * (d * d) as f64;
    Ok(outer * scale)
}

fn rademacher<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let s = 1.0 / (d as f64).sqrt();
    (0..d).map(|_| if rng.random::<bool>() { s } else { -s }).collect()
}

/// Mean of `samples` independent calibrated estimates; sample `k` draws its
/// directions from stream `k` of `seed`.
pub fn qfim_spsa(circuit: &ParamCircuit, theta: &[f64], opts: SpsaOptions) -> Result<FisherMatrix> {
    circuit.check_params(theta)?;
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("SPSA needs at least one sample".into()));
    }
    let d = theta.len();
    let estimates: Vec<RMatrix> = (0..opts.samples)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::rng_for(opts.seed, k as u64);
            let v1 = rademacher(&mut r, d);
            let v2 = rademacher(&mut r, d);
            spsa_estimate(circuit, theta, &v1, &v2, opts.epsilon)
        })
        .collect::<Result<_>>()?;
    // Fixed-order reduction keeps the sum independent of scheduling.
    let mut sum = RMatrix::zeros(d, d);
    for e in &estimates {
        sum += e;
    }
    let mut mean = sum / opts.samples as f64;
    let mut meta = FisherMeta {
        seed: Some(opts.seed),
        epsilon: Some(opts.epsilon),
        samples: Some(opts.samples),
        ..FisherMeta::default()
    };
    if opts.samples == 1 {
        meta.warnings.push("single SPSA sample: estimate has rank at most 2".into());
    }
    if opts.psd_project {
        mean = linalg::clip_psd(&mean);
    }
    Ok(FisherMatrix::symmetrized(mean, FisherKind::Quantum, FisherMethod::Spsa).with_meta(meta))
}
