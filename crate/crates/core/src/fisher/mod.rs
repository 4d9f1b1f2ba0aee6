//! Fisher information matrices.
//!
//! * [`classical`]: the CFIM `I_ij = Σ_l ∂_i p_l ∂_j p_l / p_l`, exact or from shots.
//! * [`pure`]: the pure-state QFIM from derivative states, generator
//!   covariances of parallel layers, four-overlap parameter shifts, and a
//!   finite-difference projection.
//! * [`spsa`]: rank-2 stochastic QFIM estimates.
//! * [`mixed`]: the Bures/SLD QFIM of density matrices.
//!
//! Estimators symmetrize their output; exact routines are symmetric by
//! construction.

pub mod classical;
pub mod mixed;
pub mod pure;
pub mod spsa;

pub use classical::{cfim_exact, cfim_from_distribution, cfim_sampled, prob_jacobian, JacobianMode, ProbJacobian, ZeroTolerance};
pub use mixed::{DEFAULT_FD_STEP, density_derivatives, qfim_mixed, qfim_mixed_circuit, sld_operators, SldSet};
pub use pure::{qfim_layer_blocks, qfim_param_shift, qfim_projection_fd, qfim_from_states, qfim_projection_fd_matrix, qfim_pure, LayerBlock, LayerBlocks};
pub use spsa::{qfim_spsa, spsa_estimate, SpsaOptions};

use crate::error::{Error, Result};
use crate::linalg::{self, RMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherKind {
    Classical,
    Quantum,
}

impl FisherKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FisherKind::Classical => "classical",
            FisherKind::Quantum => "quantum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherMethod {
    Exact,
    Sampled,
    ParamShift,
    FiniteDiff,
    Spsa,
    MixedExact,
}

impl FisherMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FisherMethod::Exact => "exact",
            FisherMethod::Sampled => "sampled",
            FisherMethod::ParamShift => "paramShift",
            FisherMethod::FiniteDiff => "finiteDiff",
            FisherMethod::Spsa => "spsa",
            FisherMethod::MixedExact => "mixedExact",
        }
    }
}

/// Provenance of an estimate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FisherMeta {
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub samples: Option<usize>,
    pub warnings: Vec<String>,
}

/// A `d × d` real symmetric information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    entries: RMatrix,
    kind: FisherKind,
    method: FisherMethod,
    meta: FisherMeta,
}

impl FisherMatrix {
    pub fn new(entries: RMatrix, kind: FisherKind, method: FisherMethod) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        Ok(Self {
            entries,
            kind,
            method,
            meta: FisherMeta::default(),
        })
    }

    /// Estimated matrices are stored as `(M + Mᵀ)/2`.
    pub(crate) fn symmetrized(entries: RMatrix, kind: FisherKind, method: FisherMethod) -> Self {
        Self {
            entries: linalg::symmetrize(&entries),
            kind,
            method,
            meta: FisherMeta::default(),
        }
    }

    pub fn with_meta(mut self, meta: FisherMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn entries(&self) -> &RMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> RMatrix {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn kind(&self) -> FisherKind {
        self.kind
    }

    pub fn method(&self) -> FisherMethod {
        self.method
    }

    pub fn meta(&self) -> &FisherMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut FisherMeta {
        &mut self.meta
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.entries)
    }

    /// Restriction to the given parameter indices (rows and columns).
    pub fn sub_block(&self, indices: &[usize]) -> Result<FisherMatrix> {
        let d = self.dim();
        if let Some(&bad) = indices.iter().find(|&&i| i >= d) {
            return Err(Error::ParamIndexOutOfRange { index: bad, len: d });
        }
        let k = indices.len();
        let entries = RMatrix::from_fn(k, k, |a, b| self.entries[(indices[a], indices[b])]);
        Ok(Self {
            entries,
            kind: self.kind,
            method: self.method,
            meta: self.meta.clone(),
        })
    }
}

/// Transformation rule `F' = J F Jᵀ` with `J_ij = ∂θ_j / ∂f_i` (`d' × d`).
pub fn reparametrize(fisher: &FisherMatrix, jacobian: &RMatrix) -> Result<FisherMatrix> {
    if jacobian.ncols() != fisher.dim() {
        return Err(Error::DimensionMismatch {
            expected: fisher.dim(),
            found: jacobian.ncols(),
        });
    }
    let entries = jacobian * fisher.entries() * jacobian.transpose();
    Ok(FisherMatrix::symmetrized(entries, fisher.kind, fisher.method).with_meta(fisher.meta.clone()))
}
