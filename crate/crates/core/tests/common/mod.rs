//! Seeded random instances shared by the integration targets.
#![allow(dead_code)]

use fisherlab::circuit::{Gate, ParamCircuit};
use fisherlab::linalg::{c, CMatrix};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Layers of random Pauli rotations and CNOTs on up to `max_qubits` qubits,
/// at most `max_depth` layers and `max_params` parameters.
pub fn random_pauli_circuit<R: Rng>(rng: &mut R, max_qubits: usize, max_depth: usize, max_params: usize) -> ParamCircuit {
    let n = rng.random_range(1..=max_qubits);
    let depth = rng.random_range(1..=max_depth);
    let mut b = ParamCircuit::builder(n);
    let mut d = 0;
    for _ in 0..depth {
        for q in 0..n {
            if d >= max_params || rng.random_bool(0.3) {
                continue;
            }
            let letter = *['X', 'Y', 'Z'].choose(rng).unwrap();
            let two = n > 1 && q + 1 < n && rng.random_bool(0.25);
            b = if two {
                let other = *['X', 'Y', 'Z'].choose(rng).unwrap();
                b.pauli_rotation(&format!("{letter}{other}"), &[q, q + 1]).unwrap()
            } else {
                match letter {
                    'X' => b.rx(q),
                    'Y' => b.ry(q),
                    _ => b.rz(q),
                }
            };
            d += 1;
        }
        if n > 1 {
            let a = rng.random_range(0..n);
            let t = (a + rng.random_range(1..n)) % n;
            b = b.cnot(a, t);
        }
    }
    if d == 0 {
        b = b.ry(0);
    }
    b.build().unwrap()
}

/// Always starts with a Hadamard layer so `RZ`-only circuits are not trivial.
pub fn random_pauli_circuit_with_prep<R: Rng>(rng: &mut R, max_qubits: usize, max_depth: usize, max_params: usize) -> ParamCircuit {
    let inner = random_pauli_circuit(rng, max_qubits, max_depth, max_params);
    let n = inner.n_qubits();
    let mut b = ParamCircuit::builder(n);
    for q in 0..n {
        b = b.h(q);
    }
    b.append(&inner, 0).build().unwrap()
}

pub fn random_theta<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}

pub fn random_unit<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Haar-like random unitary from the QR factorization of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix column phases so the distribution does not depend on the QR convention.
    let phases = CMatrix::from_fn(dim, dim, |i, j| if i == j { r[(i, i)] / r[(i, i)].norm() } else { c(0.0, 0.0) });
    q * phases
}

pub fn random_fixed_gate<R: Rng>(rng: &mut R, n: usize) -> Gate {
    if n > 1 && rng.random_bool(0.5) {
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        Gate::fixed(random_unitary(rng, 4), vec![a, b], "u2").unwrap()
    } else {
        Gate::fixed(random_unitary(rng, 2), vec![rng.random_range(0..n)], "u1").unwrap()
    }
}

/// Column-stochastic `m × k` matrix.
pub fn random_stochastic<R: Rng>(rng: &mut R, m: usize, k: usize) -> fisherlab::linalg::RMatrix {
    let mut t = fisherlab::linalg::RMatrix::from_fn(m, k, |_, _| rng.random_range(0.0..1.0));
    for mut col in t.column_iter_mut() {
        let s = col.sum();
        col /= s;
    }
    t
}

/// Relative-error-free comparison helper: largest absolute entry difference.
pub fn max_diff(a: &fisherlab::linalg::RMatrix, b: &fisherlab::linalg::RMatrix) -> f64 {
    (a - b).amax()
}
