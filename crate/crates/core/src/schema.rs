//! JSON and CSV interchange: circuit files, Fisher matrices, float formatting.
//!
//! Every float is written with 17 significant digits so values survive a
//! text round trip bit for bit. Non-finite values become `null`.

use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::circuit::{CircuitParts, Gate, Generator, ParamCircuit};
use crate::error::{Error, Result};
use crate::fisher::FisherMatrix;
use crate::linalg::{c, CMatrix};

/// `x` in scientific notation with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Serializes the wrapped float via [`format_f64`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F17(pub f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format_f64(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

pub fn f17_vec(xs: &[f64]) -> Vec<F17> {
    xs.iter().copied().map(F17).collect()
}

/// Circuit file layout. Unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub qubits: usize,
    pub params: usize,
    pub gates: Vec<GateSpec>,
    #[serde(default)]
    pub layers: Option<Vec<Vec<usize>>>,
}

/// One gate entry, selected by its `type` key.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GateSpec {
    Rx { target: usize, param: usize },
    Ry { target: usize, param: usize },
    Rz { target: usize, param: usize },
    /// `exp(-iθP/2)` for a Pauli string `P`, first letter on `targets[0]`.
    Rot { targets: Vec<usize>, pauli: String, param: usize },
    /// `exp(-iθG)` for a Hermitian generator given as `[re, im]` pairs, row-major.
    Gen { targets: Vec<usize>, matrix: Vec<[f64; 2]>, param: usize },
    H { target: usize },
    X { target: usize },
    Y { target: usize },
    Z { target: usize },
    Cnot { control: usize, target: usize },
    Cz { control: usize, target: usize },
    /// Parameter-free unitary given as `[re, im]` pairs, row-major.
    Fixed { targets: Vec<usize>, matrix: Vec<[f64; 2]>, #[serde(default)] label: Option<String> },
}

fn dense(entries: &[[f64; 2]], targets: &[usize], gate: usize) -> Result<CMatrix> {
    let dim = 1usize << targets.len();
    if entries.len() != dim * dim {
        return Err(Error::Schema(format!(
            "gate {gate}: matrix needs {} entries for {} targets, found {}",
            dim * dim,
            targets.len(),
            entries.len()
        )));
    }
    Ok(CMatrix::from_row_iterator(dim, dim, entries.iter().map(|[re, im]| c(*re, *im))))
}

impl GateSpec {
    fn to_gate(&self, index: usize) -> Result<Gate> {
        let at = |e: Error| Error::Schema(format!("gate {index}: {e}"));
        Ok(match self {
            GateSpec::Rx { target, param } => Gate::rx(*target, *param),
            GateSpec::Ry { target, param } => Gate::ry(*target, *param),
            GateSpec::Rz { target, param } => Gate::rz(*target, *param),
            GateSpec::Rot { targets, pauli, param } => {
                if pauli.len() != targets.len() || !pauli.chars().all(|ch| matches!(ch, 'I' | 'X' | 'Y' | 'Z')) {
                    return Err(Error::Schema(format!("gate {index}: pauli string '{pauli}' does not match {} targets", targets.len())));
                }
                Gate::rotation(Generator::pauli(pauli, targets.clone()).map_err(at)?, *param)
            }
            GateSpec::Gen { targets, matrix, param } => {
                Gate::rotation(Generator::new(dense(matrix, targets, index)?, targets.clone()).map_err(at)?, *param)
            }
            GateSpec::H { target } => Gate::h(*target),
            GateSpec::X { target } => Gate::pauli_gate('X', *target).map_err(at)?,
            GateSpec::Y { target } => Gate::pauli_gate('Y', *target).map_err(at)?,
            GateSpec::Z { target } => Gate::pauli_gate('Z', *target).map_err(at)?,
            GateSpec::Cnot { control, target } => Gate::cnot(*control, *target),
            GateSpec::Cz { control, target } => Gate::cz(*control, *target),
            GateSpec::Fixed { targets, matrix, label } => {
                let label = label.clone().unwrap_or_else(|| "fixed".to_string());
                Gate::fixed(dense(matrix, targets, index)?, targets.clone(), label).map_err(at)?
            }
        })
    }
}

impl CircuitFile {
    pub fn into_circuit(self) -> Result<ParamCircuit> {
        let gates = self.gates.iter().enumerate().map(|(k, g)| g.to_gate(k)).collect::<Result<Vec<_>>>()?;
        ParamCircuit::new(CircuitParts {
            n_qubits: self.qubits,
            n_params: self.params,
            gates,
            layers: self.layers,
        })
    }
}

/// Parse a circuit file; syntax and schema errors carry line and column.
pub fn parse_circuit(text: &str) -> Result<ParamCircuit> {
    let file: CircuitFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    file.into_circuit()
}

#[derive(Serialize)]
struct MetaOut<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    warnings: &'a [String],
}

#[derive(Serialize)]
struct FisherOut<'a> {
    kind: &'static str,
    method: &'static str,
    d: usize,
    entries: Vec<F17>,
    meta: MetaOut<'a>,
}

/// `{"kind", "method", "d", "entries" (row-major), "meta"}`, pretty-printed.
pub fn fisher_to_json(f: &FisherMatrix) -> String {
    let d = f.dim();
    let m = f.meta();
    let out = FisherOut {
        kind: f.kind().as_str(),
        method: f.method().as_str(),
        d,
        entries: (0..d * d).map(|k| F17(f.entries()[(k / d, k % d)])).collect(),
        meta: MetaOut {
            shots: m.shots,
            seed: m.seed,
            epsilon: m.epsilon.map(F17),
            samples: m.samples,
            warnings: &m.warnings,
        },
    };
    let mut s = serde_json::to_string_pretty(&out).expect("Fisher matrix serializes");
    s.push('\n');
    s
}

/// One CSV row per matrix row, no header.
pub fn fisher_to_csv(f: &FisherMatrix) -> String {
    let mut out = String::new();
    for row in f.entries().row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
