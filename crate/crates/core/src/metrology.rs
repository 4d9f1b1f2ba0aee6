//! Cramér-Rao bounds, probe → encoding → measurement sensing models, scaling
//! studies, maximum-likelihood estimation and QFIM rank.
//!
//! A [`SensingModel`] concatenates three circuits on the same register. Its
//! parameter vector is `(θ, φ, μ)`: probe parameters first, then the physical
//! parameters written by the encoding, then measurement-stage parameters.
//! Readout is in the computational basis after the measurement stage.

use rayon::prelude::*;

use crate::circuit::{Generator, ParamCircuit};
use crate::error::{Error, Result};
use crate::fisher::{cfim_exact, qfim_pure, FisherKind, FisherMatrix};
use crate::linalg::{self, c, CMatrix, RMatrix};
use crate::rng;
use crate::schema::format_f64;
use crate::simulator::{self, probabilities, run_pure, Measurement, ProbDist};

/// Real symmetric PSD matrix of estimator (co)variances.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(RMatrix);

impl CovarianceMatrix {
    pub fn new(m: RMatrix) -> Result<Self> {
        check_psd(&m, "covariance")?;
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.0
    }
}

/// PSD weight matrix for scalar figures of merit `Tr{W Cov}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(RMatrix);

impl WeightMatrix {
    pub fn new(m: RMatrix) -> Result<Self> {
        check_psd(&m, "weight")?;
        Ok(Self(m))
    }

    pub fn identity(d: usize) -> Self {
        Self(RMatrix::identity(d, d))
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.0
    }
}

fn check_psd(m: &RMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-9 {
        return Err(Error::InvalidArgument(format!("{what} matrix is not symmetric (deviation {asym:.3e})")));
    }
    let lo = linalg::min_eigenvalue(m);
    if lo < -1e-9 {
        return Err(Error::InvalidArgument(format!("{what} matrix is not PSD (min eigenvalue {lo:.3e})")));
    }
    Ok(())
}

/// Inverse of an information matrix; singular when the smallest eigenvalue is
/// at most `1e-10 · max(1, λ_max)`.
fn information_inverse(m: &FisherMatrix) -> Result<RMatrix> {
    let (vals, _) = linalg::symmetric_eigen(m.entries());
    let (lo, hi) = (vals.last().copied().unwrap_or(1.0), vals.first().copied().unwrap_or(1.0));
    if lo <= 1e-10 * hi.max(1.0) {
        return Err(Error::NotIdentifiable);
    }
    let inv = linalg::symmetrize(m.entries()).try_inverse().ok_or(Error::NotIdentifiable)?;
    Ok(linalg::symmetrize(&inv))
}

fn bound(m: &FisherMatrix, n: u64, kind: FisherKind) -> Result<CovarianceMatrix> {
    if m.kind() != kind {
        return Err(Error::InvalidArgument(format!("expected a {} Fisher matrix", kind.as_str())));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("number of repetitions must be positive".into()));
    }
    Ok(CovarianceMatrix(information_inverse(m)? / n as f64))
}

/// `I⁻¹ / n`.
pub fn crb_bound(i: &FisherMatrix, n: u64) -> Result<CovarianceMatrix> {
    bound(i, n, FisherKind::Classical)
}

/// `F⁻¹ / n`.
pub fn qcrb_bound(f: &FisherMatrix, n: u64) -> Result<CovarianceMatrix> {
    bound(f, n, FisherKind::Quantum)
}

/// `Tr{W M⁻¹} / n` for either kind of information matrix.
pub fn weighted_bound(w: &WeightMatrix, m: &FisherMatrix, n: u64) -> Result<f64> {
    if w.0.nrows() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: w.0.nrows() });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("number of repetitions must be positive".into()));
    }
    if w.0.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    Ok((&w.0 * information_inverse(m)?).trace() / n as f64)
}

/// Probe, encoding and measurement stage on a shared register.
#[derive(Debug, Clone)]
pub struct SensingModel {
    pub probe: ParamCircuit,
    pub encoding: ParamCircuit,
    pub measurement: ParamCircuit,
}

impl SensingModel {
    pub fn new(probe: ParamCircuit, encoding: ParamCircuit, measurement: ParamCircuit) -> Result<Self> {
        let n = probe.n_qubits();
        for stage in [&encoding, &measurement] {
            if stage.n_qubits() != n {
                return Err(Error::DimensionMismatch { expected: n, found: stage.n_qubits() });
            }
        }
        Ok(Self { probe, encoding, measurement })
    }

    pub fn n_qubits(&self) -> usize {
        self.probe.n_qubits()
    }

    pub fn n_phi(&self) -> usize {
        self.encoding.n_params()
    }

    /// Indices of `φ` in the composed parameter vector.
    pub fn phi_indices(&self) -> Vec<usize> {
        let start = self.probe.n_params();
        (start..start + self.encoding.n_params()).collect()
    }

    /// Probe followed by encoding.
    pub fn state_circuit(&self) -> Result<ParamCircuit> {
        ParamCircuit::builder(self.n_qubits()).append(&self.probe, 0).append(&self.encoding, 0).build()
    }

    /// All three stages.
    pub fn full_circuit(&self) -> Result<ParamCircuit> {
        ParamCircuit::builder(self.n_qubits())
            .append(&self.probe, 0)
            .append(&self.encoding, 0)
            .append(&self.measurement, 0)
            .build()
    }

    fn params(&self, theta: &[f64], phi: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
        for (got, want) in [(theta.len(), self.probe.n_params()), (phi.len(), self.encoding.n_params()), (mu.len(), self.measurement.n_params())] {
            if got != want {
                return Err(Error::DimensionMismatch { expected: want, found: got });
            }
        }
        Ok([theta, phi, mu].concat())
    }

    /// Computational-basis output distribution.
    pub fn distribution(&self, theta: &[f64], phi: &[f64], mu: &[f64]) -> Result<ProbDist> {
        let p = self.params(theta, phi, mu)?;
        probabilities(&run_pure(&self.full_circuit()?, &p)?, &Measurement::Computational)
    }
}

/// CFIM of the full model restricted to the `φ` block.
pub fn sensing_cfim(model: &SensingModel, theta: &[f64], phi: &[f64], mu: &[f64]) -> Result<FisherMatrix> {
    let p = model.params(theta, phi, mu)?;
    cfim_exact(&model.full_circuit()?, &p, &Measurement::Computational)?.sub_block(&model.phi_indices())
}

/// QFIM of the encoded probe state restricted to the `φ` block.
pub fn sensing_qfim(model: &SensingModel, theta: &[f64], phi: &[f64]) -> Result<FisherMatrix> {
    let p = model.params(theta, phi, &vec![0.0; model.measurement.n_params()])?;
    let p = &p[..model.probe.n_params() + model.encoding.n_params()];
    qfim_pure(&model.state_circuit()?, p)?.sub_block(&model.phi_indices())
}

/// `n`-qubit GHZ preparation `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_probe(n: usize) -> Result<ParamCircuit> {
    let mut b = ParamCircuit::builder(n).h(0);
    for k in 1..n {
        b = b.cnot(k - 1, k);
    }
    b.build()
}

/// `|+⟩^{⊗n}`.
pub fn plus_probes(n: usize) -> Result<ParamCircuit> {
    (0..n).fold(ParamCircuit::builder(n), |b, q| b.h(q)).build()
}

/// `Σ_j |1⟩⟨1|_j` on qubits `0..n`: the number of excited qubits.
pub fn collective_phase_generator(n: usize) -> Result<Generator> {
    let dim = 1usize << n;
    let diag = nalgebra::DVector::from_fn(dim, |k, _| c(k.count_ones() as f64, 0.0));
    Generator::new(CMatrix::from_diagonal(&diag), (0..n).collect())
}

/// One physical phase imprinted on every qubit through the collective generator.
pub fn collective_phase_encoding(n: usize) -> Result<ParamCircuit> {
    ParamCircuit::builder(n).rotation(collective_phase_generator(n)?).build()
}

/// An independent `|1⟩⟨1|` phase per qubit (`n` physical parameters).
pub fn per_qubit_phase_encoding(n: usize) -> Result<ParamCircuit> {
    let one = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
    (0..n)
        .try_fold(ParamCircuit::builder(n), |b, q| Ok(b.rotation(Generator::new(one.clone(), vec![q])?)))?
        .build()
}

/// Hadamard on every qubit, so computational readout measures in the X basis.
pub fn x_basis_measurement(n: usize) -> Result<ParamCircuit> {
    plus_probes(n)
}

/// How `n` probes are prepared for phase sensing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Separate,
    Ghz,
}

impl Strategy {
    pub fn model(&self, n: usize) -> Result<SensingModel> {
        let probe = match self {
            Strategy::Separate => plus_probes(n)?,
            Strategy::Ghz => ghz_probe(n)?,
        };
        SensingModel::new(probe, collective_phase_encoding(n)?, x_basis_measurement(n)?)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Separate => "separate",
            Strategy::Ghz => "ghz",
        }
    }
}

/// `F(n)` per probe count, with the least-squares slope of `ln F` on `ln n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub strategy: Strategy,
    pub rows: Vec<(usize, f64)>,
    pub slope: Option<f64>,
}

impl ScalingTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,qfi\n");
        for (n, f) in &self.rows {
            out.push_str(&format!("{n},{}\n", format_f64(*f)));
        }
        out
    }
}

/// Least-squares slope of `y` on `x`; `None` with fewer than two distinct `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (x.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

/// Phase QFIM at `phi` for each probe count.
pub fn scaling_experiment(ns: &[usize], strategy: Strategy, phi: f64) -> Result<ScalingTable> {
    let limit = simulator::max_statevector_qubits();
    if let Some(&n) = ns.iter().find(|&&n| n > limit) {
        return Err(Error::SizeLimit { qubits: n, limit });
    }
    if ns.contains(&0) {
        return Err(Error::InvalidArgument("probe count must be positive".into()));
    }
    let rows: Vec<(usize, f64)> = ns
        .par_iter()
        .map(|&n| Ok((n, sensing_qfim(&strategy.model(n)?, &[], &[phi])?.entries()[(0, 0)])))
        .collect::<Result<_>>()?;
    let lx: Vec<f64> = rows.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|(_, f)| f.ln()).collect();
    let slope = if ly.iter().all(|v| v.is_finite()) { fit_slope(&lx, &ly) } else { None };
    Ok(ScalingTable { strategy, rows, slope })
}

/// Uniform grid `lo, …, hi` of `points` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|k| self.lo + step * k as f64).collect()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: std::f64::consts::PI,
            points: 10_000,
        }
    }
}

/// Grid-search maximum-likelihood estimates over independent repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub estimates: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance over repeats (0 for a single repeat).
    pub variance: f64,
    /// Normal-theory standard error of `variance`: `variance · √(2/(R-1))`.
    pub variance_std_error: f64,
}

/// Settings for [`mle_estimate`]; repeat `r` samples from stream `r` of `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub shots: u64,
    pub repeats: usize,
    pub grid: Grid,
    pub seed: u64,
}

/// Draw `shots` outcomes at the true phase and maximize the log-likelihood
/// over the grid; ties resolve to the smallest grid value.
pub fn mle_estimate(model: &SensingModel, theta: &[f64], phi_true: f64, mu: &[f64], opts: MleOptions) -> Result<EstimatorResult> {
    if model.n_phi() != 1 {
        return Err(Error::InvalidArgument(format!("MLE needs one physical parameter, model has {}", model.n_phi())));
    }
    if opts.shots == 0 || opts.repeats == 0 || opts.grid.points == 0 {
        return Err(Error::InvalidArgument("shots, repeats and grid points must be positive".into()));
    }
    let grid = opts.grid.values();
    let table: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&g| Ok(model.distribution(theta, &[g], mu)?.probs().iter().map(|p| p.ln()).collect()))
        .collect::<Result<_>>()?;
    let truth = model.distribution(theta, &[phi_true], mu)?;

    let estimates: Vec<f64> = (0..opts.repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::rng_for(opts.seed, r as u64);
            let counts = simulator::sample_with(&truth, opts.shots, &mut rng).counts;
            let mut best = (f64::NEG_INFINITY, 0usize);
            let mut worst = f64::INFINITY;
            for (g, logp) in table.iter().enumerate() {
                let ll: f64 = counts
                    .iter()
                    .zip(logp)
                    .filter(|(&k, _)| k > 0)
                    .map(|(&k, &lp)| k as f64 * lp)
                    .sum();
                if ll > best.0 {
                    best = (ll, g);
                }
                worst = worst.min(ll);
            }
            if best.0 == f64::NEG_INFINITY || (best.0 - worst).abs() <= 1e-12 * best.0.abs().max(1.0) {
                return Err(Error::NonIdentifiableOnGrid);
            }
            Ok(grid[best.1])
        })
        .collect::<Result<_>>()?;

    let r = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / r;
    let (variance, se) = if estimates.len() > 1 {
        let v = estimates.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0);
        (v, v * (2.0 / (r - 1.0)).sqrt())
    } else {
        (0.0, f64::INFINITY)
    };
    Ok(EstimatorResult {
        estimates,
        mean,
        variance,
        variance_std_error: se,
    })
}

/// Default relative threshold for [`effective_quantum_dimension`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Number of eigenvalues above `rank_tol · max(λ_max, 1e-12)`.
pub fn effective_quantum_dimension(f: &FisherMatrix, rank_tol: f64) -> usize {
    let spectrum = fisher_spectrum(f);
    let cut = rank_tol * spectrum.first().copied().unwrap_or(0.0).max(1e-12);
    spectrum.iter().filter(|&&v| v > cut).count()
}

/// Eigenvalues of the symmetrized matrix, descending.
pub fn fisher_spectrum(m: &FisherMatrix) -> Vec<f64> {
    linalg::symmetric_eigen(m.entries()).0
}
