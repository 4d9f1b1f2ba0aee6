//! Invariants over seeded random instances.

mod common;

use common::*;
use fisherlab::divergence::{
    bures_fidelity, fidelity_distance, fidelity_pure, kl_divergence, overlap_compute_reverse, overlap_swap_test, total_variation,
};
use fisherlab::fisher::{cfim_exact, cfim_sampled, qfim_pure, qfim_spsa, reparametrize, JacobianMode, SpsaOptions};
use fisherlab::linalg::{min_eigenvalue, RMatrix};
use fisherlab::metrology::{crb_bound, effective_quantum_dimension, qcrb_bound, DEFAULT_RANK_TOL};
use fisherlab::simulator::{probabilities, run_pure, Measurement, ProbDist, Shots};
use proptest::prelude::*;
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

fn random_dist(seed: u64, len: usize) -> ProbDist {
    let m = random_stochastic(&mut rng(seed), len, 1);
    ProbDist::new(m.column(0).iter().copied().collect()).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn qfim_is_symmetric_psd_and_bounded(seed in any::<u64>()) {
        let mut r = rng(seed);
        let circ = random_pauli_circuit_with_prep(&mut r, 3, 5, 6);
        let theta = random_theta(&mut r, circ.n_params());
        let f = qfim_pure(&circ, &theta).unwrap();
        let m = f.entries();
        prop_assert!(max_diff(m, &m.transpose()) <= 1e-12);
        prop_assert!(min_eigenvalue(m) >= -1e-10);
        // Pauli generators have eigenvalues ±1, so each variance is at most 1.
        for i in 0..m.nrows() {
            prop_assert!(m[(i, i)] <= 4.0 + 1e-10);
        }
    }

    #[test]
    fn cfim_never_exceeds_qfim(seed in any::<u64>()) {
        let mut r = rng(seed);
        let circ = random_pauli_circuit_with_prep(&mut r, 3, 5, 6);
        let theta = random_theta(&mut r, circ.n_params());
        let m = Measurement::Projective(random_unitary(&mut r, 1 << circ.n_qubits()));
        let i = cfim_exact(&circ, &theta, &m).unwrap();
        let f = qfim_pure(&circ, &theta).unwrap();
        prop_assert!(min_eigenvalue(&(f.entries() - i.entries())) >= -1e-9);
    }

    #[test]
    fn bounds_invert_information(seed in any::<u64>(), n in 1u64..1000) {
        let mut r = rng(seed);
        let d = r.random_range(1..=4usize);
        let a = RMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
        let f = fisherlab::fisher::FisherMatrix::new(
            &a * a.transpose() + RMatrix::identity(d, d),
            fisherlab::fisher::FisherKind::Quantum,
            fisherlab::fisher::FisherMethod::Exact,
        ).unwrap();
        let bound = qcrb_bound(&f, n).unwrap();
        let prod = bound.matrix() * f.entries() * n as f64;
        prop_assert!(max_diff(&prod, &RMatrix::identity(d, d)) <= 1e-9);
        prop_assert!(crb_bound(&f, n).is_err());
    }

    #[test]
    fn reparametrize_by_identity_is_noop(seed in any::<u64>()) {
        let mut r = rng(seed);
        let circ = random_pauli_circuit(&mut r, 3, 4, 6);
        let theta = random_theta(&mut r, circ.n_params());
        let f = qfim_pure(&circ, &theta).unwrap();
        let d = circ.n_params();
        let g = reparametrize(&f, &RMatrix::identity(d, d)).unwrap();
        prop_assert!(max_diff(g.entries(), f.entries()) == 0.0);
    }

    #[test]
    fn effective_dimension_respects_state_manifold(seed in any::<u64>()) {
        let mut r = rng(seed);
        let circ = random_pauli_circuit_with_prep(&mut r, 3, 6, 8);
        let theta = random_theta(&mut r, circ.n_params());
        let f = qfim_pure(&circ, &theta).unwrap();
        let dim = effective_quantum_dimension(&f, DEFAULT_RANK_TOL);
        let manifold = (1usize << (circ.n_qubits() + 1)) - 2;
        prop_assert!(dim <= circ.n_params());
        prop_assert!(dim <= manifold);
    }

    #[test]
    fn pure_fidelity_is_a_symmetric_overlap(seed in any::<u64>()) {
        let mut r = rng(seed);
        let circ = random_pauli_circuit_with_prep(&mut r, 3, 4, 6);
        let a = random_theta(&mut r, circ.n_params());
        let b = random_theta(&mut r, circ.n_params());
        let (psi, phi) = (run_pure(&circ, &a).unwrap(), run_pure(&circ, &b).unwrap());
        let f = fidelity_pure(&psi, &phi).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        prop_assert!((f - fidelity_pure(&phi, &psi).unwrap()).abs() <= 1e-12);
        prop_assert!((fidelity_distance(&psi, &phi).unwrap() - (1.0 - f)).abs() <= 1e-12);
        prop_assert!((overlap_compute_reverse(&circ, &a, &b).unwrap() - f).abs() <= 1e-10);
        prop_assert!((bures_fidelity(&psi.to_density(), &phi.to_density()).unwrap() - f).abs() <= 1e-9);
    }

    #[test]
    fn exact_swap_test_matches_overlap(seed in any::<u64>()) {
        let mut r = rng(seed);
        let circ = random_pauli_circuit_with_prep(&mut r, 2, 3, 4);
        let a = random_theta(&mut r, circ.n_params());
        let b = random_theta(&mut r, circ.n_params());
        let swap = overlap_swap_test(&circ, &a, &b, Shots::Analytic, 0).unwrap();
        prop_assert!((swap - overlap_compute_reverse(&circ, &a, &b).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn classical_divergences_are_nonnegative(seed in any::<u64>(), len in 2usize..9) {
        let p = random_dist(seed, len);
        let q = random_dist(seed ^ 0x5555, len);
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() <= 1e-12);
        let tv = total_variation(&p, &q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&tv));
    }

    #[test]
    fn stochastic_estimates_are_reproducible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let circ = random_pauli_circuit_with_prep(&mut r, 2, 3, 4);
        let theta = random_theta(&mut r, circ.n_params());
        let m = Measurement::Computational;
        let a = cfim_sampled(&circ, &theta, &m, Shots::Finite(500), seed, JacobianMode::ParamShift);
        let b = cfim_sampled(&circ, &theta, &m, Shots::Finite(500), seed, JacobianMode::ParamShift);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!(a.entries() == b.entries()),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            _ => prop_assert!(false, "outcome differs between identical runs"),
        }
        let s1 = qfim_spsa(&circ, &theta, SpsaOptions::new(0.01, 3, seed)).unwrap();
        let s2 = qfim_spsa(&circ, &theta, SpsaOptions::new(0.01, 3, seed)).unwrap();
        prop_assert!(s1.entries() == s2.entries());
        prop_assert!(max_diff(s1.entries(), &s1.entries().transpose()) == 0.0);
    }

    #[test]
    fn probabilities_are_normalized(seed in any::<u64>()) {
        let mut r = rng(seed);
        let circ = random_pauli_circuit_with_prep(&mut r, 3, 4, 6);
        let theta = random_theta(&mut r, circ.n_params());
        let m = Measurement::Projective(random_unitary(&mut r, 1 << circ.n_qubits()));
        let p = probabilities(&run_pure(&circ, &theta).unwrap(), &m).unwrap();
        prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.probs().iter().all(|&x| x >= 0.0));
    }
}
