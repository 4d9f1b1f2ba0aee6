//! Classical Fisher information of measured circuit outputs.

use rayon::prelude::*;

use super::{FisherKind, FisherMatrix, FisherMeta, FisherMethod};
use crate::circuit::{shift, ParamCircuit};
use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::rng;
use crate::simulator::{self, probabilities, run_pure, Measurement, ProbDist, Shots};

/// How `∂p_l/∂θ_i` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JacobianMode {
    /// `2 Re⟨ψ|Π_l|∂_iψ⟩` from derivative states.
    Analytic,
    /// `r (p(θ + π/(4r) e_i) - p(θ - π/(4r) e_i))`; needs a two-eigenvalue generator.
    ParamShift,
    /// `(p(θ + ε e_i) - p(θ - ε e_i)) / 2ε`.
    CentralFd(f64),
}

/// Zero-probability thresholds for dropping terms of the CFIM sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroTolerance {
    pub p_tol: f64,
    pub grad_tol: f64,
}

impl Default for ZeroTolerance {
    fn default() -> Self {
        Self {
            p_tol: 1e-12,
            grad_tol: 1e-8,
        }
    }
}

/// `∂p_l/∂θ_i`, outcomes × parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbJacobian(RMatrix);

impl ProbJacobian {
    pub fn new(matrix: RMatrix) -> Self {
        Self(matrix)
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.0
    }

    pub fn n_outcomes(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.0.ncols()
    }
}

/// The two shifted parameter vectors whose distributions give column `i`,
/// with the weight `w` such that `∂_i p = w (p₊ - p₋)`.
fn shift_points(circuit: &ParamCircuit, theta: &[f64], i: usize, mode: JacobianMode) -> Result<Option<(Vec<f64>, Vec<f64>, f64)>> {
    let Some(g) = circuit.gate_of_param(i) else {
        return Ok(None);
    };
    match mode {
        JacobianMode::ParamShift => {
            let gate = &circuit.gates()[g];
            let r = gate
                .shift_constant()
                .ok_or_else(|| Error::UnsupportedGate(format!("parameter {i}: generator has no two-point shift rule")))?;
            let s = std::f64::consts::PI / (4.0 * r);
            Ok(Some((shift(theta, i, s)?, shift(theta, i, -s)?, r)))
        }
        JacobianMode::CentralFd(eps) => {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {eps}")));
            }
            Ok(Some((shift(theta, i, eps)?, shift(theta, i, -eps)?, 0.5 / eps)))
        }
        JacobianMode::Analytic => unreachable!("analytic mode has no shift points"),
    }
}

/// Jacobian of the output distribution.
pub fn prob_jacobian(circuit: &ParamCircuit, theta: &[f64], m: &Measurement, mode: JacobianMode) -> Result<ProbJacobian> {
    circuit.check_params(theta)?;
    m.validate(circuit.n_qubits())?;
    let d = circuit.n_params();
    let n_out = m.n_outcomes(circuit.n_qubits());
    let columns: Vec<Vec<f64>> = match mode {
        JacobianMode::Analytic => {
            let psi = run_pure(circuit, theta)?;
            let dpsi = simulator::derivative_states(circuit, theta)?;
            dpsi.iter().map(|dv| m.prob_derivative(psi.amplitudes(), dv)).collect()
        }
        _ => (0..d)
            .into_par_iter()
            .map(|i| -> Result<Vec<f64>> {
                let Some((plus, minus, w)) = shift_points(circuit, theta, i, mode)? else {
                    return Ok(vec![0.0; n_out]);
                };
                let pp = probabilities(&run_pure(circuit, &plus)?, m)?;
                let pm = probabilities(&run_pure(circuit, &minus)?, m)?;
                Ok(pp.probs().iter().zip(pm.probs()).map(|(a, b)| w * (a - b)).collect())
            })
            .collect::<Result<_>>()?,
    };
    Ok(ProbJacobian(RMatrix::from_fn(n_out, d, |l, i| columns[i][l])))
}

/// `I_ij = Σ_l ∂_i p_l ∂_j p_l / p_l` with the zero-probability rule: an
/// outcome with `p_l ≤ p_tol` is dropped when every `|∂_i p_l| ≤ grad_tol`
/// and is a discontinuity otherwise.
pub fn cfim_from_distribution(p: &ProbDist, jac: &ProbJacobian, tol: ZeroTolerance) -> Result<RMatrix> {
    if p.len() != jac.n_outcomes() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: jac.n_outcomes(),
        });
    }
    let d = jac.n_params();
    let j = jac.matrix();
    let mut out = RMatrix::zeros(d, d);
    for (l, &pl) in p.probs().iter().enumerate() {
        if pl <= tol.p_tol {
            if let Some(i) = (0..d).find(|&i| j[(l, i)].abs() > tol.grad_tol) {
                return Err(Error::FisherDiscontinuity { outcome: l, param: i });
            }
            continue;
        }
        for a in 0..d {
            let ga = j[(l, a)] / pl;
            for b in a..d {
                out[(a, b)] += ga * j[(l, b)];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            out[(a, b)] = out[(b, a)];
        }
    }
    Ok(out)
}

/// Exact CFIM from analytic probability derivatives.
pub fn cfim_exact(circuit: &ParamCircuit, theta: &[f64], m: &Measurement) -> Result<FisherMatrix> {
    let p = probabilities(&run_pure(circuit, theta)?, m)?;
    let jac = prob_jacobian(circuit, theta, m, JacobianMode::Analytic)?;
    let entries = cfim_from_distribution(&p, &jac, ZeroTolerance::default())?;
    FisherMatrix::new(entries, FisherKind::Classical, FisherMethod::Exact)
}

/// CFIM with every distribution estimated from its own shot batch.
///
/// Stream 0 of `seed` samples `p(θ)`; streams `2i+1` and `2i+2` sample the
/// two shifted points of parameter `i`. Outcomes never observed at `θ` are
/// dropped. With `Shots::Analytic` the exact distributions are used and the
/// result agrees with [`cfim_exact`] up to the derivative rule in `mode`.
pub fn cfim_sampled(circuit: &ParamCircuit, theta: &[f64], m: &Measurement, shots: Shots, seed: u64, mode: JacobianMode) -> Result<FisherMatrix> {
    circuit.check_params(theta)?;
    m.validate(circuit.n_qubits())?;
    if mode == JacobianMode::Analytic {
        return Err(Error::InvalidArgument("sampled CFIM needs a shift-based derivative mode".into()));
    }
    if shots == Shots::Finite(0) {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let d = circuit.n_params();
    let n_out = m.n_outcomes(circuit.n_qubits());

    let estimate = |point: &[f64], stream: u64| -> Result<Vec<f64>> {
        let exact = probabilities(&run_pure(circuit, point)?, m)?;
        Ok(match shots {
            Shots::Analytic => exact.probs().to_vec(),
            Shots::Finite(n) => {
                let mut r = rng::rng_for(seed, stream);
                simulator::sample_with(&exact, n, &mut r).frequencies()
            }
        })
    };

    let p_hat = estimate(theta, 0)?;
    let columns: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let Some((plus, minus, w)) = shift_points(circuit, theta, i, mode)? else {
                return Ok(vec![0.0; n_out]);
            };
            let pp = estimate(&plus, 2 * i as u64 + 1)?;
            let pm = estimate(&minus, 2 * i as u64 + 2)?;
            Ok(pp.iter().zip(&pm).map(|(a, b)| w * (a - b)).collect())
        })
        .collect::<Result<_>>()?;
    let jac = RMatrix::from_fn(n_out, d, |l, i| columns[i][l]);

    let mut meta = FisherMeta {
        seed: Some(seed),
        ..FisherMeta::default()
    };
    let entries = match shots {
        Shots::Analytic => {
            let p = ProbDist::new(p_hat)?;
            cfim_from_distribution(&p, &ProbJacobian(jac), ZeroTolerance::default())?
        }
        Shots::Finite(n) => {
            meta.shots = Some(n);
            let mut out = RMatrix::zeros(d, d);
            let mut dropped = 0usize;
            for (l, &pl) in p_hat.iter().enumerate() {
                if pl == 0.0 {
                    dropped += 1;
                    continue;
                }
                let row = jac.row(l);
                out += row.transpose() * row / pl;
            }
            if dropped > 0 {
                meta.warnings.push(format!("{dropped} outcomes with zero counts dropped"));
            }
            out
        }
    };
    Ok(FisherMatrix::symmetrized(entries, FisherKind::Classical, FisherMethod::Sampled).with_meta(meta))
}
