//! Distances between distributions and states, and circuit-level overlap
//! estimation (compute-and-reverse and SWAP test).

use crate::circuit::{Gate, ParamCircuit};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;
use crate::simulator::{self, DensityMatrix, ProbDist, Shots, StateVector};

fn same_len(p: &ProbDist, q: &ProbDist) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(())
}

/// `Σ_l p_l ln(p_l / q_l)`; outcomes with `p_l = 0` contribute nothing.
pub fn kl_divergence(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    same_len(p, q)?;
    let mut total = 0.0;
    for (l, (&a, &b)) in p.probs().iter().zip(q.probs()).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::KlUndefined { outcome: l });
        }
        total += a * (a / b).ln();
    }
    Ok(total.max(0.0))
}

/// `½ Σ_l |p_l - q_l|`.
pub fn total_variation(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    same_len(p, q)?;
    Ok(0.5
        * p.probs()
            .iter()
            .zip(q.probs())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// `|⟨ψ|φ⟩|²`.
pub fn fidelity_pure(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr().min(1.0))
}

/// `1 - |⟨ψ|φ⟩|²`.
pub fn fidelity_distance(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(1.0 - fidelity_pure(psi, phi)?)
}

/// Uhlmann fidelity `Tr{(ρ^½ σ ρ^½)^½}²`.
///
/// The outer trace is evaluated as the nuclear norm of `ρ^½ σ^½`, whose
/// singular values are the square roots of the eigenvalues of `ρ^½ σ ρ^½`.
pub fn bures_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.n_qubits() != sigma.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho.n_qubits(),
            found: sigma.n_qubits(),
        });
    }
    let root_rho = linalg::psd_sqrt(rho.matrix())?;
    let root_sigma = linalg::psd_sqrt(sigma.matrix())?;
    let product = root_rho * root_sigma;
    let tr: f64 = product.singular_values().iter().sum();
    Ok(tr * tr)
}

/// `2 - 2 f_B(ρ, σ)`.
pub fn bures_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(2.0 - 2.0 * bures_fidelity(rho, sigma)?)
}

/// Probability of the all-zeros outcome after `U(θ)` followed by `U^†(θ')`.
pub fn overlap_compute_reverse(circuit: &ParamCircuit, theta: &[f64], theta_prime: &[f64]) -> Result<f64> {
    let mut state = simulator::run_pure(circuit, theta)?;
    simulator::apply_inverse(circuit, theta_prime, &mut state)?;
    Ok(state.amplitudes()[0].norm_sqr())
}

/// Ancilla `⟨Z⟩` of the SWAP test between `|ψ(θ)⟩` and `|ψ(θ')⟩`, whose
/// expectation is `|⟨ψ(θ)|ψ(θ')⟩|²`.
pub fn overlap_swap_test(
    circuit: &ParamCircuit,
    theta: &[f64],
    theta_prime: &[f64],
    shots: Shots,
    seed: u64,
) -> Result<f64> {
    circuit.check_params(theta)?;
    circuit.check_params(theta_prime)?;
    let n = circuit.n_qubits();
    let total = 2 * n + 1;
    let limit = simulator::max_statevector_qubits();
    if total > limit {
        return Err(Error::SizeLimit {
            qubits: total,
            limit,
        });
    }
    let mut builder = ParamCircuit::builder(total)
        .h(0)
        .append(circuit, 1)
        .append(circuit, n + 1);
    for k in 0..n {
        builder = builder.gate(Gate::cswap(0, 1 + k, n + 1 + k));
    }
    let swap = builder.h(0).build()?;
    let params: Vec<f64> = theta.iter().chain(theta_prime).copied().collect();
    let state = simulator::run_pure(&swap, &params)?;
    let half = state.amplitudes().len() / 2;
    let p0: f64 = state.amplitudes()[..half].iter().map(|a| a.norm_sqr()).sum();
    match shots {
        Shots::Analytic => Ok(2.0 * p0 - 1.0),
        Shots::Finite(0) => Err(Error::InvalidArgument("shots must be positive".into())),
        Shots::Finite(k) => {
            let dist = ProbDist::new(vec![p0.clamp(0.0, 1.0), (1.0 - p0).clamp(0.0, 1.0)])?;
            let counts = simulator::sample_with(&dist, k, &mut rng::rng_for(seed, 0));
            Ok(2.0 * counts.counts[0] as f64 / k as f64 - 1.0)
        }
    }
}
