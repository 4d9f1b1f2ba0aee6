//! Exact dense simulation: statevectors, density matrices with Kraus noise,
//! measurements, shot sampling and derivative states.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::circuit::{Observable, ParamCircuit};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64, I, ONE, ZERO};
use crate::rng;

/// Default statevector cap.
pub const MAX_STATEVECTOR_QUBITS: usize = 12;
/// Default density-matrix cap.
pub const MAX_DENSITY_QUBITS: usize = 7;

fn env_override() -> Option<usize> {
    std::env::var("FISHERLAB_MAX_QUBITS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
}

/// Statevector qubit limit, overridable through `FISHERLAB_MAX_QUBITS`.
pub fn max_statevector_qubits() -> usize {
    env_override().unwrap_or(MAX_STATEVECTOR_QUBITS)
}

/// Density-matrix qubit limit, overridable through `FISHERLAB_MAX_QUBITS`.
pub fn max_density_qubits() -> usize {
    env_override().unwrap_or(MAX_DENSITY_QUBITS)
}

pub(crate) fn check_size(qubits: usize, limit: usize) -> Result<()> {
    if qubits > limit {
        Err(Error::SizeLimit { qubits, limit })
    } else {
        Ok(())
    }
}

/// Apply a local operator `m` on `targets` (first target most significant) to
/// a full register of `n` qubits stored in `amps`.
pub(crate) fn apply_local(amps: &mut [C64], n: usize, m: &CMatrix, targets: &[usize]) {
    let k = targets.len();
    let dim = 1usize << k;
    let bits: Vec<usize> = targets.iter().map(|&q| n - 1 - q).collect();
    let mask: usize = bits.iter().map(|b| 1usize << b).sum();
    let offsets: Vec<usize> = (0..dim)
        .map(|l| {
            (0..k)
                .filter(|a| (l >> (k - 1 - a)) & 1 == 1)
                .map(|a| 1usize << bits[a])
                .sum()
        })
        .collect();
    let mut buf = vec![ZERO; dim];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (l, slot) in buf.iter_mut().enumerate() {
            *slot = amps[base | offsets[l]];
        }
        for r in 0..dim {
            let mut acc = ZERO;
            for (l, &b) in buf.iter().enumerate() {
                acc += m[(r, l)] * b;
            }
            amps[base | offsets[r]] = acc;
        }
    }
}

/// Pure state amplitudes, normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "length {} is not a power of two",
                amps.len()
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self {
            n_qubits: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.amps.len() != other.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                found: other.amps.len(),
            });
        }
        Ok(inner(&self.amps, &other.amps))
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&mut self, m: &CMatrix, targets: &[usize]) {
        apply_local(&mut self.amps, self.n_qubits, m, targets);
    }

    pub fn to_density(&self) -> DensityMatrix {
        let n = self.amps.len();
        let m = CMatrix::from_fn(n, n, |i, j| self.amps[i] * self.amps[j].conj());
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: m,
        }
    }
}

/// `Σ conj(a_k) b_k`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Run the circuit on `|0...0⟩`.
pub fn run_pure(circuit: &ParamCircuit, theta: &[f64]) -> Result<StateVector> {
    circuit.check_params(theta)?;
    check_size(circuit.n_qubits(), max_statevector_qubits())?;
    let mut state = StateVector::zero(circuit.n_qubits());
    for gate in circuit.gates() {
        state.apply(&gate.unitary(theta), gate.targets());
    }
    Ok(state)
}

/// Apply `U(θ)^†` to `state`.
pub fn apply_inverse(circuit: &ParamCircuit, theta: &[f64], state: &mut StateVector) -> Result<()> {
    circuit.check_params(theta)?;
    if state.n_qubits() != circuit.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_qubits(),
            found: state.n_qubits(),
        });
    }
    for gate in circuit.gates().iter().rev() {
        state.apply(&gate.inverse_unitary(theta), gate.targets());
    }
    Ok(())
}

/// `∂|ψ(θ)⟩/∂θ_i`, obtained by inserting `-i G_i` right after the gate that
/// carries parameter `i`. Not normalized.
pub fn derivative_state(circuit: &ParamCircuit, theta: &[f64], i: usize) -> Result<Vec<C64>> {
    circuit.check_params(theta)?;
    check_size(circuit.n_qubits(), max_statevector_qubits())?;
    if i >= circuit.n_params() {
        return Err(Error::ParamIndexOutOfRange {
            index: i,
            len: circuit.n_params(),
        });
    }
    let g = circuit.gate_of_param(i).ok_or(Error::NoRotationForParam(i))?;
    let mut state = StateVector::zero(circuit.n_qubits());
    for (k, gate) in circuit.gates().iter().enumerate() {
        state.apply(&gate.unitary(theta), gate.targets());
        if k == g {
            let generator = gate.generator().expect("parameter gate is a rotation");
            let minus_i_g = generator.matrix().map(|z| z * (-I));
            state.apply(&minus_i_g, generator.targets());
        }
    }
    Ok(state.into_amplitudes())
}

/// Derivative states for every parameter; parameters without a gate get a
/// zero vector.
pub fn derivative_states(circuit: &ParamCircuit, theta: &[f64]) -> Result<Vec<Vec<C64>>> {
    (0..circuit.n_params())
        .map(|i| match circuit.gate_of_param(i) {
            Some(_) => derivative_state(circuit, theta, i),
            None => Ok(vec![ZERO; 1 << circuit.n_qubits()]),
        })
        .collect()
}

/// Density matrix: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::InvalidState("density matrix must be 2^n x 2^n".into()));
        }
        let herm = linalg::hermitian_deviation(&matrix);
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {} differs from 1", tr.re)));
        }
        let (values, _) = linalg::hermitian_eigen(&matrix);
        if let Some(&lowest) = values.last() {
            if lowest < -1e-9 {
                return Err(Error::InvalidState(format!(
                    "not positive semidefinite (min eigenvalue {lowest:.3e})"
                )));
            }
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            matrix: linalg::identity(dim).map(|z| z / dim as f64),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// `m ρ m^†` with `m` local on `targets`.
    pub fn conjugate(&mut self, m: &CMatrix, targets: &[usize]) {
        self.matrix = sandwich(&self.matrix, self.n_qubits, m, targets);
    }

    /// `Σ_k K_k ρ K_k^†`.
    pub fn apply_channel(&mut self, channel: &NoiseChannel) -> Result<()> {
        if channel.targets.iter().any(|&q| q >= self.n_qubits) {
            return Err(Error::InvalidArgument("channel target out of range".into()));
        }
        let dim = self.matrix.nrows();
        let mut out = CMatrix::zeros(dim, dim);
        for k in &channel.kraus {
            out += sandwich(&self.matrix, self.n_qubits, k, &channel.targets);
        }
        self.matrix = out;
        Ok(())
    }
}

fn sandwich(rho: &CMatrix, n: usize, m: &CMatrix, targets: &[usize]) -> CMatrix {
    // (m ρ)^† = ρ m^†, and m (ρ m^†) = m ρ m^†.
    let mut a = rho.clone();
    for mut col in a.column_iter_mut() {
        apply_local(col.as_mut_slice(), n, m, targets);
    }
    let mut b = a.adjoint();
    for mut col in b.column_iter_mut() {
        apply_local(col.as_mut_slice(), n, m, targets);
    }
    b
}

/// Completely positive trace-preserving map given by Kraus operators acting on
/// `targets`.
#[derive(Debug, Clone)]
pub struct NoiseChannel {
    kraus: Vec<CMatrix>,
    targets: Vec<usize>,
}

impl NoiseChannel {
    pub fn new(kraus: Vec<CMatrix>, targets: Vec<usize>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if kraus.is_empty() {
            return Err(Error::InvalidArgument("channel needs at least one Kraus operator".into()));
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for k in &kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.nrows(),
                });
            }
            sum += k.adjoint() * k;
        }
        let dev = (sum - linalg::identity(dim)).camax();
        if dev > 1e-9 {
            return Err(Error::NonTracePreserving(dev));
        }
        Ok(Self { kraus, targets })
    }

    /// `ρ -> (1-p) ρ + p I/2` on one qubit.
    pub fn depolarizing(p: f64, target: usize) -> Result<Self> {
        check_probability(p)?;
        let mut kraus = vec![linalg::identity(2).map(|z| z * (1.0 - 0.75 * p).sqrt())];
        for letter in ['X', 'Y', 'Z'] {
            kraus.push(linalg::pauli(letter)?.map(|z| z * (p / 4.0).sqrt()));
        }
        Self::new(kraus, vec![target])
    }

    /// Off-diagonal elements shrink by `1 - p`.
    pub fn dephasing(p: f64, target: usize) -> Result<Self> {
        check_probability(p)?;
        let kraus = vec![
            linalg::identity(2).map(|z| z * (1.0 - p / 2.0).sqrt()),
            linalg::pauli('Z')?.map(|z| z * (p / 2.0).sqrt()),
        ];
        Self::new(kraus, vec![target])
    }

    /// `|1⟩ -> |0⟩` with probability `gamma`.
    pub fn amplitude_damping(gamma: f64, target: usize) -> Result<Self> {
        check_probability(gamma)?;
        let k0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c((1.0 - gamma).sqrt(), 0.0)]);
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, c(gamma.sqrt(), 0.0), ZERO, ZERO]);
        Self::new(vec![k0, k1], vec![target])
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")))
    }
}

/// Channels applied after each gate, plus channels applied at the end.
#[derive(Debug, Clone, Default)]
pub struct NoiseModel {
    pub after_gate: Vec<Vec<NoiseChannel>>,
    pub terminal: Vec<NoiseChannel>,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    /// One single-qubit channel on every target of every gate.
    pub fn after_each_gate<F>(circuit: &ParamCircuit, mut make: F) -> Result<Self>
    where
        F: FnMut(usize) -> Result<NoiseChannel>,
    {
        let after_gate = circuit
            .gates()
            .iter()
            .map(|g| g.targets().iter().map(|&q| make(q)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            after_gate,
            terminal: Vec::new(),
        })
    }

    pub fn with_terminal(mut self, channel: NoiseChannel) -> Self {
        self.terminal.push(channel);
        self
    }
}

/// Run the circuit on `|0...0⟩⟨0...0|` with the given noise.
pub fn run_mixed(circuit: &ParamCircuit, theta: &[f64], noise: &NoiseModel) -> Result<DensityMatrix> {
    circuit.check_params(theta)?;
    check_size(circuit.n_qubits(), max_density_qubits())?;
    let mut rho = StateVector::zero(circuit.n_qubits()).to_density();
    for (g, gate) in circuit.gates().iter().enumerate() {
        rho.conjugate(&gate.unitary(theta), gate.targets());
        if let Some(channels) = noise.after_gate.get(g) {
            for ch in channels {
                rho.apply_channel(ch)?;
            }
        }
    }
    for ch in &noise.terminal {
        rho.apply_channel(ch)?;
    }
    Ok(rho)
}

/// Measurement described by its effects `{Π_l}`.
///
/// Projective measurements are kept implicit so that computational-basis
/// readout of 12 qubits does not materialize 4096 dense projectors.
#[derive(Debug, Clone)]
pub enum Measurement {
    /// Projectors onto computational basis states.
    Computational,
    /// Per-qubit Pauli basis (`X`, `Y` or `Z`), outcomes indexed like the
    /// computational basis with bit 0 meaning the +1 eigenstate.
    LocalPauli(Vec<char>),
    /// Projectors onto the columns of a unitary.
    Projective(CMatrix),
    /// General POVM effects.
    Povm(Vec<CMatrix>),
}

impl Measurement {
    pub fn n_outcomes(&self, n_qubits: usize) -> usize {
        match self {
            Measurement::Povm(effects) => effects.len(),
            _ => 1 << n_qubits,
        }
    }

    /// Check effects are PSD and sum to the identity (within 1e-9).
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let dim = 1usize << n_qubits;
        match self {
            Measurement::Computational => Ok(()),
            Measurement::LocalPauli(bases) => {
                if bases.len() != n_qubits {
                    return Err(Error::InvalidMeasurement(format!(
                        "{} bases for {n_qubits} qubits",
                        bases.len()
                    )));
                }
                for &b in bases {
                    if !matches!(b.to_ascii_uppercase(), 'X' | 'Y' | 'Z') {
                        return Err(Error::InvalidMeasurement(format!("unknown basis '{b}'")));
                    }
                }
                Ok(())
            }
            Measurement::Projective(v) => {
                if v.nrows() != dim || v.ncols() != dim {
                    return Err(Error::InvalidMeasurement("basis has wrong dimension".into()));
                }
                let dev = linalg::unitary_deviation(v);
                if dev > 1e-9 {
                    return Err(Error::InvalidMeasurement(format!(
                        "basis vectors are not orthonormal (deviation {dev:.3e})"
                    )));
                }
                Ok(())
            }
            Measurement::Povm(effects) => {
                let mut sum = CMatrix::zeros(dim, dim);
                for (l, e) in effects.iter().enumerate() {
                    if e.nrows() != dim || e.ncols() != dim {
                        return Err(Error::InvalidMeasurement(format!(
                            "effect {l} has wrong dimension"
                        )));
                    }
                    if linalg::hermitian_deviation(e) > 1e-9 {
                        return Err(Error::InvalidMeasurement(format!("effect {l} is not Hermitian")));
                    }
                    let (vals, _) = linalg::hermitian_eigen(e);
                    if vals.last().copied().unwrap_or(0.0) < -1e-9 {
                        return Err(Error::InvalidMeasurement(format!("effect {l} is not PSD")));
                    }
                    sum += e;
                }
                let dev = (sum - linalg::identity(dim)).camax();
                if dev > 1e-9 {
                    return Err(Error::InvalidMeasurement(format!(
                        "effects do not sum to identity (deviation {dev:.3e})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Dense effects; only sensible for small registers.
    pub fn effects(&self, n_qubits: usize) -> Result<Vec<CMatrix>> {
        let dim = 1usize << n_qubits;
        match self {
            Measurement::Povm(e) => Ok(e.clone()),
            _ => {
                let basis = self.basis(n_qubits)?;
                Ok((0..dim)
                    .map(|l| {
                        let col = basis.column(l);
                        &col * col.adjoint()
                    })
                    .collect())
            }
        }
    }

    /// Unitary whose columns are the measured basis vectors (projective kinds).
    fn basis(&self, n_qubits: usize) -> Result<CMatrix> {
        let dim = 1usize << n_qubits;
        match self {
            Measurement::Computational => Ok(linalg::identity(dim)),
            Measurement::Projective(v) => Ok(v.clone()),
            Measurement::LocalPauli(bases) => {
                let mut out = linalg::identity(1);
                for &b in bases {
                    out = linalg::kron(&out, &local_basis(b)?);
                }
                Ok(out)
            }
            Measurement::Povm(_) => Err(Error::InvalidMeasurement("POVM has no basis".into())),
        }
    }

    /// Amplitudes `⟨b_l|v⟩` in the measured basis; `None` for POVMs.
    pub(crate) fn outcome_amplitudes(&self, v: &[C64]) -> Option<Vec<C64>> {
        let n = v.len().trailing_zeros() as usize;
        match self {
            Measurement::Computational => Some(v.to_vec()),
            Measurement::LocalPauli(bases) => {
                let mut out = v.to_vec();
                for (q, &b) in bases.iter().enumerate() {
                    let rot = local_basis(b).ok()?.adjoint();
                    apply_local(&mut out, n, &rot, &[q]);
                }
                Some(out)
            }
            Measurement::Projective(basis) => {
                let vec = nalgebra::DVector::from_column_slice(v);
                Some((basis.adjoint() * vec).as_slice().to_vec())
            }
            Measurement::Povm(_) => None,
        }
    }

    /// `∂p_l = 2 Re⟨ψ|Π_l|∂ψ⟩`.
    pub(crate) fn prob_derivative(&self, psi: &[C64], dpsi: &[C64]) -> Vec<f64> {
        match self {
            Measurement::Povm(effects) => {
                let dv = nalgebra::DVector::from_column_slice(dpsi);
                let pv = nalgebra::DVector::from_column_slice(psi);
                effects
                    .iter()
                    .map(|e| 2.0 * (pv.adjoint() * (e * &dv))[(0, 0)].re)
                    .collect()
            }
            _ => {
                let a = self.outcome_amplitudes(psi).expect("projective");
                let b = self.outcome_amplitudes(dpsi).expect("projective");
                a.iter().zip(&b).map(|(x, y)| 2.0 * (x.conj() * y).re).collect()
            }
        }
    }
}

/// Columns are the +1 / -1 eigenvectors of the Pauli letter.
fn local_basis(letter: char) -> Result<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m = match letter.to_ascii_uppercase() {
        'Z' => linalg::identity(2),
        'X' => CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]),
        'Y' => CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(0.0, s), c(0.0, -s)]),
        other => return Err(Error::InvalidMeasurement(format!("unknown basis '{other}'"))),
    };
    Ok(m)
}

/// Output distribution `p_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist(Vec<f64>);

impl ProbDist {
    /// Clamp round-off negatives (≥ -1e-12) to zero and renormalize when the
    /// total is within 1e-9 of one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let mut probs = probs;
        for (l, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -1e-12 {
                return Err(Error::InvalidState(format!("probability {l} is {p}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMeasurement(format!(
                "probabilities sum to {total}, effects do not sum to identity"
            )));
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Anything that yields measurement statistics.
pub trait QuantumState {
    fn n_qubits(&self) -> usize;
    fn probabilities(&self, m: &Measurement) -> Result<ProbDist>;
    /// `⟨H⟩ = Σ_l p_l h_l` in the eigenbasis of `obs`.
    fn expectation(&self, obs: &Observable) -> Result<f64>;
}

impl QuantumState for StateVector {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn probabilities(&self, m: &Measurement) -> Result<ProbDist> {
        m.validate(self.n_qubits)?;
        let raw = match m {
            Measurement::Povm(effects) => {
                let v = nalgebra::DVector::from_column_slice(&self.amps);
                effects
                    .iter()
                    .map(|e| (v.adjoint() * (e * &v))[(0, 0)].re)
                    .collect()
            }
            _ => m
                .outcome_amplitudes(&self.amps)
                .expect("projective")
                .iter()
                .map(|a| a.norm_sqr())
                .collect(),
        };
        ProbDist::new(raw)
    }

    fn expectation(&self, obs: &Observable) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: obs.n_qubits(),
            });
        }
        let (values, vectors) = obs.eigen();
        let p = self.probabilities(&Measurement::Projective(vectors.clone()))?;
        Ok(p.probs().iter().zip(values).map(|(p, h)| p * h).sum())
    }
}

impl QuantumState for DensityMatrix {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn probabilities(&self, m: &Measurement) -> Result<ProbDist> {
        m.validate(self.n_qubits)?;
        let raw = match m {
            Measurement::Povm(effects) => effects
                .iter()
                .map(|e| linalg::trace(&(&self.matrix * e)).re)
                .collect(),
            _ => {
                let basis = m.basis(self.n_qubits)?;
                let rotated = basis.adjoint() * &self.matrix * &basis;
                rotated.diagonal().iter().map(|z| z.re).collect()
            }
        };
        ProbDist::new(raw)
    }

    fn expectation(&self, obs: &Observable) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: obs.n_qubits(),
            });
        }
        let (values, vectors) = obs.eigen();
        let p = self.probabilities(&Measurement::Projective(vectors.clone()))?;
        Ok(p.probs().iter().zip(values).map(|(p, h)| p * h).sum())
    }
}

pub fn probabilities<S: QuantumState + ?Sized>(state: &S, m: &Measurement) -> Result<ProbDist> {
    state.probabilities(m)
}

pub fn expectation<S: QuantumState + ?Sized>(state: &S, obs: &Observable) -> Result<f64> {
    state.expectation(obs)
}

/// Shot budget: a finite number of repetitions or exact (infinite-shot)
/// probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Finite(u64),
    Analytic,
}

/// Outcome counts from a finite number of shots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCounts {
    pub counts: Vec<u64>,
    pub shots: u64,
}

impl SampleCounts {
    /// Empirical frequencies; all zeros when no shots were taken.
    pub fn frequencies(&self) -> Vec<f64> {
        if self.shots == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&k| k as f64 / self.shots as f64)
            .collect()
    }
}

/// Multinomial draw, deterministic in `seed`.
pub fn sample(dist: &ProbDist, shots: u64, seed: u64) -> SampleCounts {
    let mut rng = rng::rng_for(seed, 0);
    sample_with(dist, shots, &mut rng)
}

pub(crate) fn sample_with<R: Rng + ?Sized>(dist: &ProbDist, shots: u64, rng: &mut R) -> SampleCounts {
    let probs = dist.probs();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (l, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if l + 1 == probs.len() {
            counts[l] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("valid binomial").sample(rng)
        };
        counts[l] = k;
        remaining -= k;
        mass -= p;
    }
    SampleCounts { counts, shots }
}

/// Eigendecomposition of a density matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Descending; entries below the zero tolerance are reported as exactly 0.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: CMatrix,
    /// `true` where the eigenvalue was below the zero tolerance.
    pub zero: Vec<bool>,
}

pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

pub fn eigendecompose(rho: &DensityMatrix, zero_tol: f64) -> Spectrum {
    eigendecompose_matrix(rho.matrix(), zero_tol)
}

pub(crate) fn eigendecompose_matrix(m: &CMatrix, zero_tol: f64) -> Spectrum {
    let (mut values, vectors) = linalg::hermitian_eigen(m);
    let zero: Vec<bool> = values.iter().map(|&v| v < zero_tol).collect();
    for (v, &z) in values.iter_mut().zip(&zero) {
        if z {
            *v = 0.0;
        }
    }
    Spectrum {
        values,
        vectors,
        zero,
    }
}
