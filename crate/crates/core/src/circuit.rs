//! Parametrized circuits: generators, gates, layer structure and observables.
//!
//! A rotation gate realizes `exp(-i θ G)` for a Hermitian generator `G` acting
//! on an ordered list of target qubits. Every parameter index drives at most
//! one gate; reparametrizations are handled with the Jacobian rule in
//! [`crate::fisher::reparametrize`].
//!
//! Qubit 0 is the most significant bit of a computational-basis index.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, I, ONE, ZERO};

const HERMITIAN_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Exponential {
    /// `G^2 = I/4`, so `exp(-iθG) = cos(θ/2) I - 2i sin(θ/2) G`.
    HalfInvolution,
    Spectral { values: Vec<f64>, vectors: CMatrix },
}

/// Hermitian generator of a rotation gate together with its target qubits.
#[derive(Debug, Clone)]
pub struct Generator {
    matrix: CMatrix,
    targets: Vec<usize>,
    exponential: Exponential,
    shift_constant: Option<f64>,
}

impl Generator {
    /// Arbitrary Hermitian generator on `targets` (first target most significant).
    pub fn new(matrix: CMatrix, targets: Vec<usize>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidGenerator(format!(
                "{} targets need a {dim}x{dim} matrix, got {}x{}",
                targets.len(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if targets.is_empty() {
            return Err(Error::InvalidGenerator("no target qubits".into()));
        }
        let dev = linalg::hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let (values, vectors) = linalg::hermitian_eigen(&matrix);
        let shift_constant = two_level_shift_constant(&values);

        let square = &matrix * &matrix;
        let quarter = linalg::identity(dim).map(|z| z * 0.25);
        let exponential = if (square - quarter).norm() < 1e-13 {
            Exponential::HalfInvolution
        } else {
            Exponential::Spectral { values, vectors }
        };
        Ok(Self {
            matrix,
            targets,
            exponential,
            shift_constant,
        })
    }

    /// `P/2` for a Pauli string `P`, one letter per target.
    pub fn pauli(letters: &str, targets: Vec<usize>) -> Result<Self> {
        if letters.chars().count() != targets.len() {
            return Err(Error::InvalidGenerator(format!(
                "Pauli string '{letters}' does not match {} targets",
                targets.len()
            )));
        }
        let p = linalg::pauli_string(letters)?;
        Self::new(p.map(|z| z * 0.5), targets)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// `r` of the two-point shift rule, when the generator has exactly two
    /// distinct eigenvalues (`r` is half their gap).
    pub fn shift_constant(&self) -> Option<f64> {
        self.shift_constant
    }

    /// `exp(-i θ G)`.
    pub fn unitary(&self, theta: f64) -> CMatrix {
        match &self.exponential {
            Exponential::HalfInvolution => {
                let dim = self.matrix.nrows();
                let (s, co) = (theta * 0.5).sin_cos();
                let mut u = self.matrix.map(|z| z * (-2.0 * s) * I);
                for k in 0..dim {
                    u[(k, k)] += c(co, 0.0);
                }
                u
            }
            Exponential::Spectral { values, vectors } => {
                let dim = values.len();
                let phases = CMatrix::from_fn(dim, dim, |i, j| {
                    if i == j {
                        let (s, co) = (-theta * values[i]).sin_cos();
                        c(co, s)
                    } else {
                        ZERO
                    }
                });
                vectors * phases * vectors.adjoint()
            }
        }
    }
}

fn two_level_shift_constant(values: &[f64]) -> Option<f64> {
    let mut distinct: Vec<f64> = Vec::new();
    for &v in values {
        if !distinct.iter().any(|&d| (d - v).abs() < 1e-9) {
            distinct.push(v);
        }
    }
    if distinct.len() == 2 {
        Some((distinct[0] - distinct[1]).abs() / 2.0)
    } else {
        None
    }
}

/// A gate: fixed unitary or rotation `exp(-i θ_k G)` driven by parameter `k`.
#[derive(Debug, Clone)]
pub enum Gate {
    Fixed {
        unitary: CMatrix,
        targets: Vec<usize>,
        label: String,
    },
    Rotation {
        generator: Generator,
        param: usize,
    },
}

impl Gate {
    pub fn fixed(unitary: CMatrix, targets: Vec<usize>, label: impl Into<String>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if unitary.nrows() != dim || unitary.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "{} targets need a {dim}x{dim} unitary",
                targets.len()
            )));
        }
        let dev = linalg::unitary_deviation(&unitary);
        if dev > UNITARY_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not unitary (deviation {dev:.3e})"
            )));
        }
        Ok(Gate::Fixed {
            unitary,
            targets,
            label: label.into(),
        })
    }

    pub fn rotation(generator: Generator, param: usize) -> Self {
        Gate::Rotation { generator, param }
    }

    pub fn rx(target: usize, param: usize) -> Self {
        Self::pauli_rotation("X", vec![target], param)
    }

    pub fn ry(target: usize, param: usize) -> Self {
        Self::pauli_rotation("Y", vec![target], param)
    }

    pub fn rz(target: usize, param: usize) -> Self {
        Self::pauli_rotation("Z", vec![target], param)
    }

    /// `exp(-i θ P/2)`. Panics if the Pauli string is malformed; use
    /// [`Generator::pauli`] for fallible construction.
    pub fn pauli_rotation(letters: &str, targets: Vec<usize>, param: usize) -> Self {
        let generator = Generator::pauli(letters, targets).expect("valid Pauli string");
        Gate::Rotation { generator, param }
    }

    pub fn h(target: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        Gate::Fixed {
            unitary: m,
            targets: vec![target],
            label: "h".into(),
        }
    }

    pub fn pauli_gate(letter: char, target: usize) -> Result<Self> {
        Ok(Gate::Fixed {
            unitary: linalg::pauli(letter)?,
            targets: vec![target],
            label: letter.to_ascii_lowercase().to_string(),
        })
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        Gate::Fixed {
            unitary: m,
            targets: vec![control, target],
            label: "cnot".into(),
        }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        let mut m = CMatrix::identity(4, 4);
        m[(3, 3)] = -ONE;
        Gate::Fixed {
            unitary: m,
            targets: vec![a, b],
            label: "cz".into(),
        }
    }

    /// Controlled SWAP with `control` first.
    pub fn cswap(control: usize, a: usize, b: usize) -> Self {
        let mut m = CMatrix::identity(8, 8);
        m[(5, 5)] = ZERO;
        m[(6, 6)] = ZERO;
        m[(5, 6)] = ONE;
        m[(6, 5)] = ONE;
        Gate::Fixed {
            unitary: m,
            targets: vec![control, a, b],
            label: "cswap".into(),
        }
    }

    pub fn targets(&self) -> &[usize] {
        match self {
            Gate::Fixed { targets, .. } => targets,
            Gate::Rotation { generator, .. } => generator.targets(),
        }
    }

    pub fn param(&self) -> Option<usize> {
        match self {
            Gate::Fixed { .. } => None,
            Gate::Rotation { param, .. } => Some(*param),
        }
    }

    pub fn generator(&self) -> Option<&Generator> {
        match self {
            Gate::Fixed { .. } => None,
            Gate::Rotation { generator, .. } => Some(generator),
        }
    }

    pub fn shift_constant(&self) -> Option<f64> {
        self.generator().and_then(Generator::shift_constant)
    }

    /// The gate's local unitary at the given parameter vector.
    pub fn unitary(&self, theta: &[f64]) -> CMatrix {
        match self {
            Gate::Fixed { unitary, .. } => unitary.clone(),
            Gate::Rotation { generator, param } => generator.unitary(theta[*param]),
        }
    }

    /// Local inverse: adjoint of a fixed gate, rotation at `-θ`.
    pub fn inverse_unitary(&self, theta: &[f64]) -> CMatrix {
        match self {
            Gate::Fixed { unitary, .. } => unitary.adjoint(),
            Gate::Rotation { generator, param } => generator.unitary(-theta[*param]),
        }
    }

    fn remapped(&self, qubit_offset: usize, param_offset: usize) -> Gate {
        match self {
            Gate::Fixed {
                unitary,
                targets,
                label,
            } => Gate::Fixed {
                unitary: unitary.clone(),
                targets: targets.iter().map(|q| q + qubit_offset).collect(),
                label: label.clone(),
            },
            Gate::Rotation { generator, param } => {
                let mut g = generator.clone();
                g.targets = g.targets.iter().map(|q| q + qubit_offset).collect();
                Gate::Rotation {
                    generator: g,
                    param: param + param_offset,
                }
            }
        }
    }
}

/// Unchecked circuit description; turned into a [`ParamCircuit`] by
/// [`ParamCircuit::new`] once [`validate`] passes.
#[derive(Debug, Clone)]
pub struct CircuitParts {
    pub n_qubits: usize,
    pub n_params: usize,
    pub gates: Vec<Gate>,
    /// Partition of gate indices into layers; inferred greedily when `None`.
    pub layers: Option<Vec<Vec<usize>>>,
}

/// List of invariant violations found by [`validate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            write!(f, "ok")
        } else {
            write!(f, "{}", self.violations.join("; "))
        }
    }
}

/// Check every circuit invariant, collecting all violations.
pub fn validate(parts: &CircuitParts) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |msg: String| report.violations.push(msg);
    let n = parts.n_qubits;
    if n == 0 {
        push("circuit must have at least one qubit".into());
    }

    let mut owner: Vec<Option<usize>> = vec![None; parts.n_params];
    for (g, gate) in parts.gates.iter().enumerate() {
        let targets = gate.targets();
        if targets.is_empty() {
            push(format!("gate {g}: no target qubits"));
        }
        for (a, &q) in targets.iter().enumerate() {
            if q >= n {
                push(format!("gate {g}: qubit {q} out of range for {n} qubits"));
            }
            if targets[..a].contains(&q) {
                push(format!("gate {g}: duplicate target qubit {q}"));
            }
        }
        match gate {
            Gate::Fixed { unitary, .. } => {
                let dim = 1usize << targets.len();
                if unitary.nrows() != dim || unitary.ncols() != dim {
                    push(format!("gate {g}: unitary has wrong dimension"));
                } else {
                    let dev = linalg::unitary_deviation(unitary);
                    if dev > UNITARY_TOL {
                        push(format!("gate {g}: matrix is not unitary (deviation {dev:.3e})"));
                    }
                }
            }
            Gate::Rotation { param, .. } => {
                if *param >= parts.n_params {
                    push(format!(
                        "gate {g}: parameter index out of range ({param} >= {})",
                        parts.n_params
                    ));
                } else if let Some(prev) = owner[*param] {
                    push(format!(
                        "gate {g}: parameter {param} already used by gate {prev} (parameter sharing is not supported)"
                    ));
                } else {
                    owner[*param] = Some(g);
                }
            }
        }
    }

    if let Some(layers) = &parts.layers {
        let mut layer_of: Vec<Option<usize>> = vec![None; parts.gates.len()];
        for (l, layer) in layers.iter().enumerate() {
            let mut used: Vec<usize> = Vec::new();
            for &g in layer {
                if g >= parts.gates.len() {
                    push(format!("layer {l}: gate index {g} out of range"));
                    continue;
                }
                if layer_of[g].is_some() {
                    push(format!("layer {l}: gate {g} assigned to more than one layer"));
                    continue;
                }
                layer_of[g] = Some(l);
                for &q in parts.gates[g].targets() {
                    if used.contains(&q) {
                        push(format!("overlapping layer {l}: qubit {q} acted on twice"));
                    }
                    used.push(q);
                }
            }
        }
        for (g, slot) in layer_of.iter().enumerate() {
            if slot.is_none() {
                push(format!("gate {g} is not assigned to any layer"));
            }
        }
        // Executing layer by layer must reproduce the sequential gate order.
        for a in 0..parts.gates.len() {
            for b in (a + 1)..parts.gates.len() {
                let (Some(la), Some(lb)) = (layer_of[a], layer_of[b]) else {
                    continue;
                };
                let share = parts.gates[a]
                    .targets()
                    .iter()
                    .any(|q| parts.gates[b].targets().contains(q));
                if share && la >= lb && la != lb {
                    push(format!(
                        "layer order conflicts with gate order: gate {a} (layer {la}) must precede gate {b} (layer {lb})"
                    ));
                }
            }
        }
    }
    report
}

/// Greedy as-soon-as-possible layering consistent with the gate order.
fn infer_layers(n_qubits: usize, gates: &[Gate]) -> Vec<Vec<usize>> {
    let mut depth = vec![0usize; n_qubits];
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for (g, gate) in gates.iter().enumerate() {
        let level = gate.targets().iter().map(|&q| depth[q]).max().unwrap_or(0);
        if layers.len() <= level {
            layers.resize(level + 1, Vec::new());
        }
        layers[level].push(g);
        for &q in gate.targets() {
            depth[q] = level + 1;
        }
    }
    layers
}

/// A validated parametrized circuit. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ParamCircuit {
    n_qubits: usize,
    n_params: usize,
    gates: Vec<Gate>,
    layers: Vec<Vec<usize>>,
    param_gate: Vec<Option<usize>>,
}

impl ParamCircuit {
    pub fn new(parts: CircuitParts) -> Result<Self> {
        let report = validate(&parts);
        if !report.is_ok() {
            return Err(Error::InvalidCircuit(report));
        }
        let layers = match parts.layers {
            Some(l) => l,
            None => infer_layers(parts.n_qubits, &parts.gates),
        };
        let mut param_gate = vec![None; parts.n_params];
        for (g, gate) in parts.gates.iter().enumerate() {
            if let Some(p) = gate.param() {
                param_gate[p] = Some(g);
            }
        }
        Ok(Self {
            n_qubits: parts.n_qubits,
            n_params: parts.n_params,
            gates: parts.gates,
            layers,
            param_gate,
        })
    }

    pub fn builder(n_qubits: usize) -> CircuitBuilder {
        CircuitBuilder::new(n_qubits)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Gate-index layers.
    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    /// Index of the gate driven by parameter `i`, if any.
    pub fn gate_of_param(&self, i: usize) -> Option<usize> {
        self.param_gate.get(i).copied().flatten()
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::DimensionMismatch {
                expected: self.n_params,
                found: theta.len(),
            });
        }
        Ok(())
    }

    /// Re-validate (always ok for a constructed circuit).
    pub fn validate(&self) -> ValidationReport {
        validate(&CircuitParts {
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            gates: self.gates.clone(),
            layers: Some(self.layers.clone()),
        })
    }

    pub fn into_parts(self) -> CircuitParts {
        CircuitParts {
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            gates: self.gates,
            layers: Some(self.layers),
        }
    }
}

/// Incremental circuit construction. Rotation helpers allocate the next free
/// parameter index.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    n_qubits: usize,
    n_params: usize,
    gates: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            n_params: 0,
            gates: Vec::new(),
        }
    }

    fn next_param(&mut self) -> usize {
        self.n_params += 1;
        self.n_params - 1
    }

    pub fn rx(mut self, q: usize) -> Self {
        let p = self.next_param();
        self.gates.push(Gate::rx(q, p));
        self
    }

    pub fn ry(mut self, q: usize) -> Self {
        let p = self.next_param();
        self.gates.push(Gate::ry(q, p));
        self
    }

    pub fn rz(mut self, q: usize) -> Self {
        let p = self.next_param();
        self.gates.push(Gate::rz(q, p));
        self
    }

    pub fn pauli_rotation(mut self, letters: &str, targets: &[usize]) -> Result<Self> {
        let g = Generator::pauli(letters, targets.to_vec())?;
        let p = self.next_param();
        self.gates.push(Gate::rotation(g, p));
        Ok(self)
    }

    pub fn rotation(mut self, generator: Generator) -> Self {
        let p = self.next_param();
        self.gates.push(Gate::rotation(generator, p));
        self
    }

    pub fn h(mut self, q: usize) -> Self {
        self.gates.push(Gate::h(q));
        self
    }

    pub fn cnot(mut self, control: usize, target: usize) -> Self {
        self.gates.push(Gate::cnot(control, target));
        self
    }

    pub fn cz(mut self, a: usize, b: usize) -> Self {
        self.gates.push(Gate::cz(a, b));
        self
    }

    pub fn gate(mut self, gate: Gate) -> Self {
        if let Some(p) = gate.param() {
            self.n_params = self.n_params.max(p + 1);
        }
        self.gates.push(gate);
        self
    }

    /// Append `other` shifted by `qubit_offset`; its parameters are renumbered
    /// after the ones allocated so far.
    pub fn append(mut self, other: &ParamCircuit, qubit_offset: usize) -> Self {
        let offset = self.n_params;
        for gate in other.gates() {
            self.gates.push(gate.remapped(qubit_offset, offset));
        }
        self.n_params += other.n_params();
        self
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn build(self) -> Result<ParamCircuit> {
        ParamCircuit::new(CircuitParts {
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            gates: self.gates,
            layers: None,
        })
    }
}

/// `θ + s e_i`.
pub fn shift(theta: &[f64], i: usize, s: f64) -> Result<Vec<f64>> {
    if i >= theta.len() {
        return Err(Error::ParamIndexOutOfRange {
            index: i,
            len: theta.len(),
        });
    }
    let mut out = theta.to_vec();
    out[i] += s;
    Ok(out)
}

/// Parameter-index groups of each layer, skipping layers without rotations.
pub fn layers_of(circuit: &ParamCircuit) -> Vec<Vec<usize>> {
    circuit
        .layers()
        .iter()
        .map(|layer| {
            layer
                .iter()
                .filter_map(|&g| circuit.gates()[g].param())
                .collect::<Vec<_>>()
        })
        .filter(|group| !group.is_empty())
        .collect()
}

/// Hermitian observable on the full register, with a lazily computed
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct Observable {
    n_qubits: usize,
    matrix: CMatrix,
    eigen: OnceLock<(Vec<f64>, CMatrix)>,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "observable must be a 2^n x 2^n matrix, got {}x{}",
                dim,
                matrix.ncols()
            )));
        }
        let dev = linalg::hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
            eigen: OnceLock::new(),
        })
    }

    /// `Σ_k c_k P_k` for Pauli strings covering all `n_qubits`.
    pub fn from_pauli_terms(n_qubits: usize, terms: &[(f64, &str)]) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for (coef, letters) in terms {
            if letters.chars().count() != n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "Pauli term '{letters}' does not cover {n_qubits} qubits"
                )));
            }
            m += linalg::pauli_string(letters)?.map(|z| z * *coef);
        }
        Self::new(m)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues `h_l` (descending) and eigenvectors `|h_l⟩` as columns.
    pub fn eigen(&self) -> &(Vec<f64>, CMatrix) {
        self.eigen.get_or_init(|| linalg::hermitian_eigen(&self.matrix))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().0.last().copied().unwrap_or(0.0)
    }
}
