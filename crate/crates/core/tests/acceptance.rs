//! Acceptance criteria, one line per criterion. Runs with its own harness so
//! the report is always printed; exits non-zero if any criterion fails.

mod common;

use std::error::Error;
use std::f64::consts::PI;
use std::time::Instant;

use common::*;
use fisherlab::circuit::{Gate, Observable, ParamCircuit};
use fisherlab::divergence::overlap_compute_reverse;
use fisherlab::fisher::{
    self, cfim_exact, cfim_from_distribution, cfim_sampled, density_derivatives, prob_jacobian, qfim_from_states, qfim_layer_blocks, qfim_mixed,
    qfim_param_shift, qfim_projection_fd, qfim_pure, qfim_spsa, reparametrize, sld_operators, JacobianMode, ProbJacobian, SpsaOptions, ZeroTolerance,
    DEFAULT_FD_STEP,
};
use fisherlab::linalg::{self, c, CMatrix, RMatrix, C64, ZERO};
use fisherlab::metrology::{self, Grid, MleOptions, SensingModel, Strategy};
use fisherlab::optimize::{self, CostFunction, OptimizerConfig};
use fisherlab::simulator::{self, run_mixed, run_pure, DensityMatrix, Measurement, NoiseChannel, NoiseModel, ProbDist, Shots, DEFAULT_ZERO_TOL};
use rand::Rng;

type Res<T> = Result<T, Box<dyn Error>>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Res<Outcome> {
    Ok(Outcome { pass, detail })
}

fn min_eig(m: &RMatrix) -> f64 {
    linalg::min_eigenvalue(m)
}

fn rank(m: &RMatrix, rel: f64) -> usize {
    let (vals, _) = linalg::symmetric_eigen(m);
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    vals.iter().filter(|v| v.abs() > rel * scale.max(1e-300)).count()
}

fn toy_ansatz() -> ParamCircuit {
    ParamCircuit::builder(2).ry(0).ry(1).cnot(0, 1).ry(0).ry(1).build().unwrap()
}

fn toy_hamiltonian() -> Observable {
    Observable::from_pauli_terms(2, &[(1.0, "ZZ"), (0.5, "XI")]).unwrap()
}

fn ry() -> ParamCircuit {
    ParamCircuit::builder(1).ry(0).build().unwrap()
}

// 1. GHZ probes reach n², separate probes n.
fn heisenberg_scaling() -> Res<Outcome> {
    let (mut eg, mut es) = (0.0f64, 0.0f64);
    for n in 1..=5usize {
        let g = metrology::sensing_qfim(&Strategy::Ghz.model(n)?, &[], &[0.3])?.entries()[(0, 0)];
        let s = metrology::sensing_qfim(&Strategy::Separate.model(n)?, &[], &[0.3])?.entries()[(0, 0)];
        eg = eg.max((g - (n * n) as f64).abs());
        es = es.max((s - n as f64).abs());
    }
    outcome(eg <= 1e-9 && es <= 1e-9, format!("max |F_ghz - n²| = {eg:.1e}, max |F_sep - n| = {es:.1e}"))
}

// 2. Four QFIM routes agree on random Pauli-rotation circuits.
fn qfim_cross_agreement() -> Res<Outcome> {
    let (mut ps, mut fd, mut blk) = (0.0f64, 0.0f64, 0.0f64);
    for s in 0..20 {
        let mut r = rng(2000 + s);
        let circ = random_pauli_circuit_with_prep(&mut r, 4, 6, 8);
        let theta = random_theta(&mut r, circ.n_params());
        let f = qfim_pure(&circ, &theta)?;
        ps = ps.max((qfim_param_shift(&circ, &theta)?.entries() - f.entries()).norm());
        let v = random_unit(&mut r, circ.n_params());
        let vv = nalgebra::DVector::from_column_slice(&v);
        let exact = (vv.transpose() * f.entries() * &vv)[(0, 0)];
        fd = fd.max((qfim_projection_fd(&circ, &theta, &v, 1e-3)? - exact).abs());
        for b in qfim_layer_blocks(&circ, &theta)?.blocks {
            let sub = f.sub_block(&b.params)?;
            blk = blk.max(max_diff(&b.block, sub.entries()));
        }
    }
    outcome(
        ps <= 1e-8 && fd <= 1e-4 && blk <= 1e-10,
        format!("param-shift Frobenius {ps:.1e} (≤1e-8), projection FD {fd:.1e} (≤1e-4), layer blocks {blk:.1e} (≤1e-10)"),
    )
}

// 3. CFIM ≤ QFIM for random projective measurements.
fn cfim_below_qfim() -> Res<Outcome> {
    let mut worst = f64::INFINITY;
    for s in 0..100 {
        let mut r = rng(3000 + s);
        let circ = random_pauli_circuit_with_prep(&mut r, 4, 6, 8);
        let theta = random_theta(&mut r, circ.n_params());
        let m = Measurement::Projective(random_unitary(&mut r, 1 << circ.n_qubits()));
        let i = cfim_exact(&circ, &theta, &m)?;
        let f = qfim_pure(&circ, &theta)?;
        worst = worst.min(min_eig(&(f.entries() - i.entries())));
    }
    outcome(worst >= -1e-8, format!("min eigenvalue of F - I over 100 pairs: {worst:.2e} (≥ -1e-8)"))
}

// 4. Real non-negative amplitudes: CFIM = QFIM; classical mixed family F(0) = 1.
fn classical_embedding() -> Res<Outcome> {
    let mut worst = 0.0f64;
    for s in 0..20 {
        let mut r = rng(4000 + s);
        let k = r.random_range(1..=3usize);
        let dim = 1usize << k;
        let d = r.random_range(1..=4usize);
        let a = RMatrix::from_fn(dim, d, |_, _| r.random_range(-1.0..1.0));
        let b: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
        let theta = random_theta(&mut r, d);
        // p = softmax(Aθ + b)
        let z: Vec<f64> = (0..dim).map(|l| b[l] + (0..d).map(|i| a[(l, i)] * theta[i]).sum::<f64>()).collect();
        let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|x| (x - zmax).exp()).collect();
        let total: f64 = e.iter().sum();
        let p: Vec<f64> = e.iter().map(|x| x / total).collect();
        let jac = RMatrix::from_fn(dim, d, |l, i| p[l] * (a[(l, i)] - (0..dim).map(|m| p[m] * a[(m, i)]).sum::<f64>()));
        let psi: Vec<C64> = p.iter().map(|x| c(x.sqrt(), 0.0)).collect();
        let dpsi: Vec<Vec<C64>> = (0..d).map(|i| (0..dim).map(|l| c(jac[(l, i)] / (2.0 * p[l].sqrt()), 0.0)).collect()).collect();
        let state = simulator::StateVector::from_amplitudes(psi.clone())?;
        let measured = simulator::probabilities(&state, &Measurement::Computational)?;
        let i = cfim_from_distribution(&measured, &ProbJacobian::new(jac), ZeroTolerance::default())?;
        let f = qfim_from_states(&psi, &dpsi)?;
        worst = worst.max(max_diff(&i, f.entries()));
    }
    let rho = DensityMatrix::new(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5, 0.0), c(0.5, 0.0)])))?;
    let drho = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5, 0.0), c(-0.5, 0.0)]));
    let f0 = qfim_mixed(&rho, &[drho], DEFAULT_ZERO_TOL)?.entries()[(0, 0)];
    outcome(
        worst <= 1e-8 && (f0 - 1.0).abs() <= 1e-9,
        format!("max |CFIM - QFIM| over 20 families {worst:.1e} (≤1e-8); mixed family F(0) - 1 = {:.1e} (≤1e-9)", f0 - 1.0),
    )
}

// 5. Appendix property suite.
fn property_suite() -> Res<Outcome> {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut record = |name: &str, ok: bool, text: String| {
        pass &= ok;
        lines.push(format!("{name}: {text}{}", if ok { "" } else { " FAIL" }));
    };

    // symmetry and PSD
    let (mut asym, mut neg) = (0.0f64, f64::INFINITY);
    for s in 0..20 {
        let mut r = rng(5000 + s);
        let circ = random_pauli_circuit_with_prep(&mut r, 4, 6, 8);
        let theta = random_theta(&mut r, circ.n_params());
        let m = Measurement::Projective(random_unitary(&mut r, 1 << circ.n_qubits()));
        for f in [qfim_pure(&circ, &theta)?, qfim_param_shift(&circ, &theta)?, cfim_exact(&circ, &theta, &m)?] {
            asym = asym.max(max_diff(f.entries(), &f.entries().transpose()));
            neg = neg.min(min_eig(f.entries()));
        }
    }
    record("symmetry/PSD", asym <= 1e-9 && neg >= -1e-8, format!("asym {asym:.1e}, min eig {neg:.1e}"));

    // stochastic post-processing
    let mut worst = f64::INFINITY;
    for s in 0..20 {
        let mut r = rng(5100 + s);
        let circ = random_pauli_circuit_with_prep(&mut r, 3, 5, 6);
        let theta = random_theta(&mut r, circ.n_params());
        let m = Measurement::Projective(random_unitary(&mut r, 1 << circ.n_qubits()));
        let p = simulator::probabilities(&run_pure(&circ, &theta)?, &m)?;
        let j = prob_jacobian(&circ, &theta, &m, JacobianMode::Analytic)?;
        let rows = r.random_range(2..=p.len() + 1);
        let t = random_stochastic(&mut r, rows, p.len());
        let tp = ProbDist::new((&t * nalgebra::DVector::from_column_slice(p.probs())).as_slice().to_vec())?;
        let i_p = cfim_from_distribution(&p, &j, ZeroTolerance::default())?;
        let i_tp = cfim_from_distribution(&tp, &ProbJacobian::new(&t * j.matrix()), ZeroTolerance::default())?;
        worst = worst.min(min_eig(&(i_p - i_tp)));
    }
    record("stochastic maps", worst >= -1e-8, format!("min eig {worst:.1e}"));

    // channel monotonicity
    let mut worst = f64::INFINITY;
    for s in 0..20 {
        let mut r = rng(5200 + s);
        let circ = random_pauli_circuit_with_prep(&mut r, 2, 4, 4);
        let theta = random_theta(&mut r, circ.n_params());
        let before = NoiseModel::after_each_gate(&circ, |q| NoiseChannel::depolarizing(0.05, q))?;
        let q = r.random_range(0..circ.n_qubits());
        let ch = if r.random_bool(0.5) { NoiseChannel::depolarizing(0.2, q)? } else { NoiseChannel::dephasing(0.3, q)? };
        let after = before.clone().with_terminal(ch);
        let fb = fisher::qfim_mixed_circuit(&circ, &theta, &before, DEFAULT_FD_STEP)?;
        let fa = fisher::qfim_mixed_circuit(&circ, &theta, &after, DEFAULT_FD_STEP)?;
        worst = worst.min(min_eig(&(fb.entries() - fa.entries())));
    }
    record("channels", worst >= -1e-8, format!("min eig {worst:.1e}"));

    // unitary invariance
    let mut worst = 0.0f64;
    for s in 0..20 {
        let mut r = rng(5300 + s);
        let circ = random_pauli_circuit_with_prep(&mut r, 4, 6, 8);
        let theta = random_theta(&mut r, circ.n_params());
        let mut b = ParamCircuit::builder(circ.n_qubits()).append(&circ, 0);
        for _ in 0..3 {
            b = b.gate(random_fixed_gate(&mut r, circ.n_qubits()));
        }
        let extended = b.build()?;
        worst = worst.max(max_diff(qfim_pure(&circ, &theta)?.entries(), qfim_pure(&extended, &theta)?.entries()));
    }
    record("unitary invariance", worst <= 1e-10, format!("max diff {worst:.1e}"));

    // direct sums
    let mut worst = 0.0f64;
    for s in 0..20 {
        let mut r = rng(5400 + s);
        let c1 = random_pauli_circuit_with_prep(&mut r, 2, 3, 3);
        let c2 = random_pauli_circuit_with_prep(&mut r, 2, 3, 3);
        let d = c1.n_params().min(c2.n_params());
        let theta = random_theta(&mut r, d);
        let lam: f64 = r.random_range(0.1..0.9);
        // Use the first d parameters of each block, the rest frozen at zero.
        let pad = |c: &ParamCircuit| -> Vec<f64> {
            let mut t = theta.clone();
            t.resize(c.n_params(), 0.0);
            t
        };
        let m = Measurement::Computational;
        let (t1, t2) = (pad(&c1), pad(&c2));
        let p1 = simulator::probabilities(&run_pure(&c1, &t1)?, &m)?;
        let p2 = simulator::probabilities(&run_pure(&c2, &t2)?, &m)?;
        let j1 = prob_jacobian(&c1, &t1, &m, JacobianMode::Analytic)?.matrix().columns(0, d).into_owned();
        let j2 = prob_jacobian(&c2, &t2, &m, JacobianMode::Analytic)?.matrix().columns(0, d).into_owned();
        let joint_p: Vec<f64> = p1.probs().iter().map(|x| lam * x).chain(p2.probs().iter().map(|x| (1.0 - lam) * x)).collect();
        let mut joint_j = RMatrix::zeros(p1.len() + p2.len(), d);
        joint_j.rows_mut(0, p1.len()).copy_from(&(&j1 * lam));
        joint_j.rows_mut(p1.len(), p2.len()).copy_from(&(&j2 * (1.0 - lam)));
        let tol = ZeroTolerance::default();
        let joint = cfim_from_distribution(&ProbDist::new(joint_p)?, &ProbJacobian::new(joint_j), tol)?;
        let sum = cfim_from_distribution(&p1, &ProbJacobian::new(j1), tol)? * lam + cfim_from_distribution(&p2, &ProbJacobian::new(j2), tol)? * (1.0 - lam);
        worst = worst.max(max_diff(&joint, &sum));
    }
    record("direct sums", worst <= 1e-10, format!("max diff {worst:.1e}"));

    // tensor products
    let mut worst = 0.0f64;
    for s in 0..20 {
        let mut r = rng(5500 + s);
        let c1 = random_pauli_circuit_with_prep(&mut r, 2, 4, 4);
        let c2 = random_pauli_circuit_with_prep(&mut r, 2, 4, 4);
        let (d1, d2) = (c1.n_params(), c2.n_params());
        let joint = ParamCircuit::builder(c1.n_qubits() + c2.n_qubits()).append(&c1, 0).append(&c2, c1.n_qubits()).build()?;
        let theta = random_theta(&mut r, d1 + d2);
        let f = qfim_pure(&joint, &theta)?;
        let mut expect = RMatrix::zeros(d1 + d2, d1 + d2);
        expect.view_mut((0, 0), (d1, d1)).copy_from(qfim_pure(&c1, &theta[..d1])?.entries());
        expect.view_mut((d1, d1), (d2, d2)).copy_from(qfim_pure(&c2, &theta[d1..])?.entries());
        worst = worst.max(max_diff(f.entries(), &expect));
    }
    record("tensor products", worst <= 1e-10, format!("max diff {worst:.1e}"));

    // convexity, classical and quantum
    let (mut wc, mut wq) = (f64::INFINITY, f64::INFINITY);
    for s in 0..20 {
        let mut r = rng(5600 + s);
        let circ = random_pauli_circuit_with_prep(&mut r, 2, 4, 4);
        let other = {
            let mut b = ParamCircuit::builder(circ.n_qubits()).gate(random_fixed_gate(&mut r, circ.n_qubits()));
            b = b.append(&circ, 0);
            b.build()?
        };
        let theta = random_theta(&mut r, circ.n_params());
        let lam: f64 = r.random_range(0.1..0.9);
        let m = Measurement::Computational;
        let tol = ZeroTolerance::default();
        let (p, q) = (simulator::probabilities(&run_pure(&circ, &theta)?, &m)?, simulator::probabilities(&run_pure(&other, &theta)?, &m)?);
        let (jp, jq) = (prob_jacobian(&circ, &theta, &m, JacobianMode::Analytic)?, prob_jacobian(&other, &theta, &m, JacobianMode::Analytic)?);
        let mix = ProbDist::new(p.probs().iter().zip(q.probs()).map(|(a, b)| lam * a + (1.0 - lam) * b).collect())?;
        let jmix = ProbJacobian::new(jp.matrix() * lam + jq.matrix() * (1.0 - lam));
        let lhs = cfim_from_distribution(&p, &jp, tol)? * lam + cfim_from_distribution(&q, &jq, tol)? * (1.0 - lam);
        wc = wc.min(min_eig(&(lhs - cfim_from_distribution(&mix, &jmix, tol)?)));

        let n1 = NoiseModel::after_each_gate(&circ, |q| NoiseChannel::depolarizing(0.1, q))?;
        let n2 = NoiseModel::after_each_gate(&other, |q| NoiseChannel::dephasing(0.2, q))?;
        let rho = run_mixed(&circ, &theta, &n1)?;
        let sigma = run_mixed(&other, &theta, &n2)?;
        let drho = density_derivatives(&circ, &theta, &n1, DEFAULT_FD_STEP)?;
        let dsigma = density_derivatives(&other, &theta, &n2, DEFAULT_FD_STEP)?;
        let l = c(lam, 0.0);
        let l1 = c(1.0 - lam, 0.0);
        let mixed = DensityMatrix::new(rho.matrix() * l + sigma.matrix() * l1)?;
        let dmixed: Vec<CMatrix> = drho.iter().zip(&dsigma).map(|(a, b)| a * l + b * l1).collect();
        let lhs = qfim_mixed(&rho, &drho, DEFAULT_ZERO_TOL)?.into_entries() * lam + qfim_mixed(&sigma, &dsigma, DEFAULT_ZERO_TOL)?.into_entries() * (1.0 - lam);
        wq = wq.min(min_eig(&(lhs - qfim_mixed(&mixed, &dmixed, DEFAULT_ZERO_TOL)?.into_entries())));
    }
    record("convexity", wc >= -1e-8 && wq >= -1e-8, format!("classical min eig {wc:.1e}, quantum {wq:.1e}"));

    // Jacobian transformation rule
    let (mut wc, mut wq) = (0.0f64, 0.0f64);
    for s in 0..20 {
        let mut r = rng(5700 + s);
        let circ = random_pauli_circuit_with_prep(&mut r, 3, 5, 6);
        let d = circ.n_params();
        let theta = random_theta(&mut r, d);
        // θ = A f
        let a = RMatrix::identity(d, d) + RMatrix::from_fn(d, d, |_, _| r.random_range(-0.4..0.4));
        let m = Measurement::Projective(random_unitary(&mut r, 1 << circ.n_qubits()));
        let p = simulator::probabilities(&run_pure(&circ, &theta)?, &m)?;
        let j = prob_jacobian(&circ, &theta, &m, JacobianMode::Analytic)?;
        let tol = ZeroTolerance::default();
        let i_theta = cfim_exact(&circ, &theta, &m)?;
        let direct = cfim_from_distribution(&p, &ProbJacobian::new(j.matrix() * &a), tol)?;
        wc = wc.max(max_diff(reparametrize(&i_theta, &a.transpose())?.entries(), &direct));

        let psi = run_pure(&circ, &theta)?;
        let dpsi = simulator::derivative_states(&circ, &theta)?;
        let dpsi_f: Vec<Vec<C64>> = (0..d)
            .map(|k| (0..psi.amplitudes().len()).map(|x| (0..d).fold(ZERO, |acc, i| acc + dpsi[i][x] * a[(i, k)])).collect())
            .collect();
        let direct = qfim_from_states(psi.amplitudes(), &dpsi_f)?;
        wq = wq.max(max_diff(reparametrize(&qfim_pure(&circ, &theta)?, &a.transpose())?.entries(), direct.entries()));
    }
    record("Jacobian rule", wc <= 1e-8 && wq <= 1e-8, format!("classical {wc:.1e}, quantum {wq:.1e}"));

    outcome(pass, lines.join("; "))
}

// 6. Hessians of 1 - f and 1 - √f differ by a factor 2.
fn sqrt_fidelity_factor() -> Res<Outcome> {
    let mut worst = 0.0f64;
    let mut used = 0;
    let mut seed = 6000;
    while used < 10 {
        let mut r = rng(seed);
        seed += 1;
        let n = r.random_range(1..=3usize);
        let mut b = ParamCircuit::builder(n);
        for _ in 0..2 {
            b = b.gate(random_fixed_gate(&mut r, n));
        }
        let letters: String = (0..n).map(|_| ['X', 'Y', 'Z'][r.random_range(0..3)]).collect();
        b = b.gate(Gate::pauli_rotation(&letters, (0..n).collect(), 0));
        b = b.gate(random_fixed_gate(&mut r, n));
        let circ = b.build()?;
        let theta = [r.random_range(-PI..PI)];
        let delta = 1e-3;
        let f = |x: f64| overlap_compute_reverse(&circ, &theta, &[theta[0] + x]);
        let (fp, fm, f0) = (f(delta)?, f(-delta)?, f(0.0)?);
        let h1 = ((1.0 - fp) + (1.0 - fm) - 2.0 * (1.0 - f0)) / (delta * delta);
        let h2 = ((1.0 - fp.sqrt()) + (1.0 - fm.sqrt()) - 2.0 * (1.0 - f0.sqrt())) / (delta * delta);
        if h1 < 1e-3 {
            continue;
        }
        used += 1;
        worst = worst.max((h1 / h2 - 2.0).abs());
    }
    outcome(worst <= 1e-4, format!("max |ratio - 2| = {worst:.1e} over 10 circuits ({} drawn, degenerate ones skipped)", seed - 6000))
}

// 7. SLD formula matches the eigenbasis formula.
fn sld_cross_check() -> Res<Outcome> {
    let mut worst = 0.0f64;
    for s in 0..10u64 {
        let mut r = rng(7000 + s);
        let n = 1 + (s % 2) as usize;
        let inner = random_pauli_circuit(&mut r, n, 4, 4);
        let mut b = ParamCircuit::builder(n);
        for q in 0..n {
            b = b.h(q);
        }
        let circ = b.append(&inner, 0).build()?;
        let theta = random_theta(&mut r, circ.n_params());
        let noise = NoiseModel::after_each_gate(&circ, |q| NoiseChannel::depolarizing(0.1, q))?;
        let rho = run_mixed(&circ, &theta, &noise)?;
        let spec = simulator::eigendecompose(&rho, DEFAULT_ZERO_TOL);
        if spec.zero.iter().any(|&z| z) {
            return outcome(false, format!("instance {s} is not full rank"));
        }
        let derivs = density_derivatives(&circ, &theta, &noise, DEFAULT_FD_STEP)?;
        let f = qfim_mixed(&rho, &derivs, DEFAULT_ZERO_TOL)?;
        let sld = sld_operators(&rho, &derivs, DEFAULT_ZERO_TOL)?;
        worst = worst.max(max_diff(&sld.fisher(&rho), f.entries()));
    }
    outcome(worst <= 1e-8, format!("max diff {worst:.1e} over 10 full-rank families (≤1e-8)"))
}

// 8. SPSA average converges; single samples have rank ≤ 2.
fn spsa_consistency() -> Res<Outcome> {
    let circ = toy_ansatz();
    let theta = [0.4, -0.9, 1.3, 0.2];
    let exact = qfim_pure(&circ, &theta)?;
    let est = qfim_spsa(&circ, &theta, SpsaOptions::new(0.01, 2000, 8))?;
    let rel = (est.entries() - exact.entries()).norm() / exact.entries().norm();
    let mut max_rank = 0;
    for seed in 0..50 {
        let one = qfim_spsa(&circ, &theta, SpsaOptions::new(0.01, 1, seed))?;
        max_rank = max_rank.max(rank(one.entries(), 1e-9));
    }
    outcome(rel <= 0.1 && max_rank <= 2, format!("relative Frobenius error {rel:.3} (≤0.1), max single-sample rank {max_rank} (≤2)"))
}

// 9. Sampled CFIM on RY approaches 1 as shots grow.
fn sampled_cfim_convergence() -> Res<Outcome> {
    let circ = ry();
    let m = Measurement::Computational;
    let theta = [0.7];
    let mut rms = Vec::new();
    let mut fixed = Vec::new();
    let mut reproducible = true;
    for shots in [1_000u64, 10_000, 100_000, 1_000_000] {
        let mut sq = 0.0;
        for seed in 0..16 {
            let v = cfim_sampled(&circ, &theta, &m, Shots::Finite(shots), seed, JacobianMode::ParamShift)?.entries()[(0, 0)];
            sq += (v - 1.0) * (v - 1.0);
            if seed == 0 {
                fixed.push((v - 1.0).abs());
                let again = cfim_sampled(&circ, &theta, &m, Shots::Finite(shots), seed, JacobianMode::ParamShift)?.entries()[(0, 0)];
                reproducible &= again.to_bits() == v.to_bits();
            }
        }
        rms.push((sq / 16.0).sqrt());
    }
    let decreasing = rms.windows(2).all(|w| w[1] < w[0]);
    let last = *fixed.last().unwrap();
    outcome(
        decreasing && last <= 0.02 && rms[3] <= 0.02 && reproducible,
        format!(
            "RMS error over 16 seeds {:.1e} > {:.1e} > {:.1e} > {:.1e}; seed-0 error at 1e6 shots {last:.1e} (≤0.02); bitwise reproducible: {reproducible}",
            rms[0], rms[1], rms[2], rms[3]
        ),
    )
}

// 10. QNG: identity metric is GD; toy eigensolver converges; linear reparametrization covariance.
fn qng_behaviour() -> Res<Outcome> {
    let cost = CostFunction::new(toy_ansatz(), toy_hamiltonian())?;
    let exact_cfg = OptimizerConfig { lambda_reg: 0.0, ..OptimizerConfig::default() };
    let theta = [0.3, -0.8, 1.4, 0.2];
    let g = cost.gradient(&theta)?;
    let (q, _) = optimize::qng_step_with_metric(&theta, &g, &RMatrix::identity(4, 4), &exact_cfg)?;
    let identical = q == optimize::gd_step(&cost, &theta, &exact_cfg)?;

    let e0 = toy_hamiltonian().min_eigenvalue();
    let cfg = OptimizerConfig { eta: 0.1, max_iters: 200, grad_norm_tol: 1e-8, ..OptimizerConfig::default() };
    let trace = optimize::minimize(&cost, &[0.1, 0.2, 0.3, 0.4], &cfg)?;
    let gap = (trace.final_cost() - e0).abs();

    // θ = A f on a circuit with a non-singular metric.
    let circ = ParamCircuit::builder(2).ry(0).rx(1).cnot(0, 1).rz(0).ry(1).build()?;
    let cost2 = CostFunction::new(circ.clone(), toy_hamiltonian())?;
    let mut r = rng(10);
    let a = RMatrix::identity(4, 4) + RMatrix::from_fn(4, 4, |_, _| r.random_range(-0.3..0.3));
    let a_inv = a.clone().try_inverse().ok_or("A not invertible")?;
    let step_cfg = OptimizerConfig { eta: 0.05, lambda_reg: 0.0, ..OptimizerConfig::default() };
    let mut th = vec![0.5, -0.3, 0.8, 1.1];
    let mut f = (&a_inv * nalgebra::DVector::from_column_slice(&th)).as_slice().to_vec();
    let mut cov = 0.0f64;
    let mut min_metric = f64::INFINITY;
    for _ in 0..10 {
        min_metric = min_metric.min(qfim_pure(&circ, &th)?.min_eigenvalue());
        th = optimize::qng_step(&cost2, &th, &step_cfg)?.0;
        let theta_of_f = (&a * nalgebra::DVector::from_column_slice(&f)).as_slice().to_vec();
        let g_f = (a.transpose() * nalgebra::DVector::from_column_slice(&cost2.gradient(&theta_of_f)?)).as_slice().to_vec();
        let metric_f = reparametrize(&qfim_pure(&circ, &theta_of_f)?, &a.transpose())?;
        f = optimize::qng_step_with_metric(&f, &g_f, metric_f.entries(), &step_cfg)?.0;
        let mapped = &a * nalgebra::DVector::from_column_slice(&f);
        cov = cov.max(th.iter().zip(mapped.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    outcome(
        identical && gap <= 1e-4 && trace.iterations() <= 200 && cov <= 1e-8,
        format!(
            "identity metric equals GD bitwise: {identical}; eigensolver |C - E0| = {gap:.1e} after {} iterations (≤1e-4, ≤200); reparametrization max deviation {cov:.1e} (≤1e-8, min metric eigenvalue {min_metric:.2})",
            trace.iterations()
        ),
    )
}

// 11. MLE variance saturates the CRB.
fn crb_saturation() -> Res<Outcome> {
    let model = SensingModel::new(metrology::plus_probes(1)?, metrology::collective_phase_encoding(1)?, metrology::x_basis_measurement(1)?)?;
    let shots = 10_000;
    let opts = MleOptions { shots, repeats: 200, grid: Grid::default(), seed: 11 };
    let res = metrology::mle_estimate(&model, &[], 0.7, &[], opts)?;
    let info = metrology::sensing_cfim(&model, &[], &[0.7], &[])?;
    let crb = metrology::crb_bound(&info, shots)?.matrix()[(0, 0)];
    let ratio = res.variance / crb;
    let floor_ok = res.variance >= crb - 3.0 * res.variance_std_error;
    outcome(
        (1.0..=1.5).contains(&ratio) && floor_ok,
        format!(
            "variance / CRB = {ratio:.3} (in [1.0, 1.5]), standard error of ratio {:.3}; above CRB - 3 SE: {floor_ok}",
            res.variance_std_error / crb
        ),
    )
}

// 12. Depolarizing noise lowers the QFIM strictly.
fn noise_monotonicity() -> Res<Outcome> {
    let circ = ry();
    let mut values = Vec::new();
    for p in [0.0, 0.1, 0.3] {
        let noise = NoiseModel::after_each_gate(&circ, |q| NoiseChannel::depolarizing(p, q))?;
        values.push(fisher::qfim_mixed_circuit(&circ, &[0.7], &noise, DEFAULT_FD_STEP)?.entries()[(0, 0)]);
    }
    let m1 = values[0] - values[1];
    let m2 = values[1] - values[2];
    outcome(
        m1 >= 1e-6 && m2 >= 1e-6,
        format!("F = {:.6}, {:.6}, {:.6}; margins {m1:.3e}, {m2:.3e} (≥1e-6)", values[0], values[1], values[2]),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Res<Outcome>, f64);
    let criteria: [Criterion; 12] = [
        ("heisenberg scaling", heisenberg_scaling, 5.0),
        ("QFIM cross-agreement", qfim_cross_agreement, 60.0),
        ("CFIM ≤ QFIM", cfim_below_qfim, 120.0),
        ("classical embedding", classical_embedding, f64::INFINITY),
        ("property suite", property_suite, f64::INFINITY),
        ("√f convention factor", sqrt_fidelity_factor, f64::INFINITY),
        ("SLD cross-check", sld_cross_check, f64::INFINITY),
        ("SPSA consistency", spsa_consistency, 60.0),
        ("sampled CFIM convergence", sampled_cfim_convergence, f64::INFINITY),
        ("QNG behaviour", qng_behaviour, f64::INFINITY),
        ("CRB saturation", crb_saturation, 120.0),
        ("noise monotonicity", noise_monotonicity, f64::INFINITY),
    ];
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && secs < *limit, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget = if limit.is_finite() { format!(", limit {limit:.0} s") } else { String::new() };
        println!("[{}] {:>2}. {name} ({secs:.2} s{budget}): {detail}", if pass { "PASS" } else { "FAIL" }, k + 1);
        if !pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
