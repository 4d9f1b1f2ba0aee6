//! Gradient descent, quantum natural gradient and SPSA-smoothed natural
//! gradient on expectation-value costs `C(θ) = ⟨ψ(θ)|H|ψ(θ)⟩`.
//!
//! Natural-gradient steps solve `(F + λI) x = ∇C` by Cholesky factorization
//! and move to `θ - ηx`; the metric is never inverted explicitly.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{shift, Observable, ParamCircuit};
use crate::error::{Error, Result};
use crate::fisher::{qfim_pure, qfim_spsa, SpsaOptions};
use crate::linalg::{self, RMatrix};
use crate::rng;
use crate::schema::{f17_vec, F17};
use crate::simulator::{expectation, run_pure};

/// `C(θ) = ⟨ψ(θ)|H|ψ(θ)⟩` for a noiseless circuit.
#[derive(Debug, Clone)]
pub struct CostFunction {
    pub circuit: ParamCircuit,
    pub observable: Observable,
}

impl CostFunction {
    pub fn new(circuit: ParamCircuit, observable: Observable) -> Result<Self> {
        if observable.n_qubits() != circuit.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: circuit.n_qubits(),
                found: observable.n_qubits(),
            });
        }
        Ok(Self { circuit, observable })
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        expectation(&run_pure(&self.circuit, theta)?, &self.observable)
    }

    /// Parameter-shift gradient `r (C(θ + π/(4r) e_i) - C(θ - π/(4r) e_i))`.
    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.circuit.check_params(theta)?;
        (0..self.n_params())
            .into_par_iter()
            .map(|i| {
                let Some(g) = self.circuit.gate_of_param(i) else {
                    return Ok(0.0);
                };
                let r = self.circuit.gates()[g]
                    .shift_constant()
                    .ok_or_else(|| Error::UnsupportedGate(format!("parameter {i}: generator has no two-point shift rule")))?;
                let s = std::f64::consts::PI / (4.0 * r);
                Ok(r * (self.value(&shift(theta, i, s)?)? - self.value(&shift(theta, i, -s)?)?))
            })
            .collect()
    }

    /// Central finite-difference gradient.
    pub fn gradient_fd(&self, theta: &[f64], eps: f64) -> Result<Vec<f64>> {
        self.circuit.check_params(theta)?;
        (0..self.n_params())
            .map(|i| Ok((self.value(&shift(theta, i, eps)?)? - self.value(&shift(theta, i, -eps)?)?) / (2.0 * eps)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gd,
    Qng,
    SpsaQng,
}

/// Where SPSA-QNG draws its per-iteration metric from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSource {
    /// Rank-2 SPSA estimates with `spsa_samples` samples.
    Spsa,
    /// The exact pure-state QFIM (the infinite-sample limit).
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub eta: f64,
    pub lambda_reg: f64,
    pub max_iters: usize,
    pub grad_norm_tol: f64,
    pub method: Method,
    /// Smoothing weight of the running metric, in `[0, 1)`.
    pub beta: f64,
    pub seed: u64,
    pub spsa_epsilon: f64,
    pub spsa_samples: usize,
    pub metric_source: MetricSource,
    /// Starting value of the running metric; the first estimate is used when absent.
    pub initial_metric: Option<RMatrix>,
    /// Halve `η` (up to 30 times) until the cost does not increase.
    pub backtracking: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            lambda_reg: 1e-6,
            max_iters: 200,
            grad_norm_tol: 1e-8,
            method: Method::Qng,
            beta: 0.9,
            seed: 0,
            spsa_epsilon: 0.01,
            spsa_samples: 10,
            metric_source: MetricSource::Spsa,
            initial_metric: None,
            backtracking: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.lambda_reg >= 0.0 && self.lambda_reg.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambdaReg must be non-negative, got {}", self.lambda_reg)));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidArgument(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        if self.grad_norm_tol < 0.0 {
            return Err(Error::InvalidArgument("gradNormTol must be non-negative".into()));
        }
        if self.method == Method::SpsaQng && self.metric_source == MetricSource::Spsa && self.spsa_samples == 0 {
            return Err(Error::InvalidArgument("spsaSamples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Conditioning of the regularized metric that was solved against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveDiagnostics {
    pub lambda_reg: F17,
    pub min_eigenvalue: F17,
    pub max_eigenvalue: F17,
    pub condition_number: F17,
}

/// Solve `(F + λI) x = g`.
///
/// Fails with [`Error::MetricSingular`] when the regularized matrix has an
/// eigenvalue at or below `1e-12 · max(1, λ_max)`.
pub fn natural_direction(metric: &RMatrix, grad: &[f64], lambda_reg: f64) -> Result<(Vec<f64>, SolveDiagnostics)> {
    let d = grad.len();
    if metric.nrows() != d || metric.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: metric.nrows() });
    }
    let mut m = linalg::symmetrize(metric);
    for k in 0..d {
        m[(k, k)] += lambda_reg;
    }
    let (vals, _) = linalg::symmetric_eigen(&m);
    let (lo, hi) = (vals.last().copied().unwrap_or(1.0), vals.first().copied().unwrap_or(1.0));
    let diag = SolveDiagnostics {
        lambda_reg: F17(lambda_reg),
        min_eigenvalue: F17(lo),
        max_eigenvalue: F17(hi),
        condition_number: F17(if lo > 0.0 { hi / lo } else { f64::INFINITY }),
    };
    if d > 0 && lo <= 1e-12 * hi.max(1.0) {
        return Err(Error::MetricSingular);
    }
    let chol = nalgebra::Cholesky::new(m).ok_or(Error::MetricSingular)?;
    let x = chol.solve(&nalgebra::DVector::from_column_slice(grad));
    Ok((x.as_slice().to_vec(), diag))
}

fn axpy(theta: &[f64], eta: f64, dir: &[f64]) -> Vec<f64> {
    theta.iter().zip(dir).map(|(t, x)| t - eta * x).collect()
}

/// `θ - η∇C(θ)`.
pub fn gd_step(cost: &CostFunction, theta: &[f64], config: &OptimizerConfig) -> Result<Vec<f64>> {
    let g = cost.gradient(theta)?;
    Ok(axpy(theta, config.eta, &g))
}

/// Natural-gradient step against a supplied metric.
pub fn qng_step_with_metric(theta: &[f64], grad: &[f64], metric: &RMatrix, config: &OptimizerConfig) -> Result<(Vec<f64>, SolveDiagnostics)> {
    let (x, diag) = natural_direction(metric, grad, config.lambda_reg)?;
    Ok((axpy(theta, config.eta, &x), diag))
}

/// `θ - η (F + λI)⁻¹ ∇C(θ)` with the exact pure-state QFIM.
pub fn qng_step(cost: &CostFunction, theta: &[f64], config: &OptimizerConfig) -> Result<(Vec<f64>, SolveDiagnostics)> {
    let g = cost.gradient(theta)?;
    let f = qfim_pure(&cost.circuit, theta)?;
    qng_step_with_metric(theta, &g, f.entries(), config)
}

/// Running metric `F̄_t = β F̄_{t-1} + (1-β) F̂_t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SmoothedMetric {
    pub matrix: Option<RMatrix>,
    pub updates: u64,
}

impl SmoothedMetric {
    pub fn new(initial: Option<RMatrix>) -> Self {
        Self { matrix: initial, updates: 0 }
    }

    /// Blend in a fresh estimate and clip negative eigenvalues at zero.
    /// Negatives within round-off (`1e-12 · max(1, ‖F̄‖₂)`) are left alone, so
    /// an exact PSD metric passes through unchanged.
    pub fn update(&self, fresh: RMatrix, beta: f64) -> SmoothedMetric {
        let blended = match &self.matrix {
            Some(prev) if beta > 0.0 => prev * beta + fresh * (1.0 - beta),
            _ => fresh,
        };
        let (vals, _) = linalg::symmetric_eigen(&blended);
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let matrix = if vals.last().is_some_and(|&lo| lo < -1e-12 * scale) {
            linalg::clip_psd(&blended)
        } else {
            blended
        };
        SmoothedMetric {
            matrix: Some(matrix),
            updates: self.updates + 1,
        }
    }
}

fn fresh_metric(cost: &CostFunction, theta: &[f64], config: &OptimizerConfig, update: u64) -> Result<RMatrix> {
    Ok(match config.metric_source {
        MetricSource::Exact => qfim_pure(&cost.circuit, theta)?.into_entries(),
        MetricSource::Spsa => {
            let seed = rng::derive_seed(config.seed, update);
            qfim_spsa(&cost.circuit, theta, SpsaOptions::new(config.spsa_epsilon, config.spsa_samples, seed))?.into_entries()
        }
    })
}

/// One SPSA-QNG step. The fresh metric for update `t` uses stream `t` of the
/// configured seed.
pub fn spsa_qng_step(cost: &CostFunction, theta: &[f64], config: &OptimizerConfig, state: &SmoothedMetric) -> Result<(Vec<f64>, SmoothedMetric, SolveDiagnostics)> {
    let next = state.update(fresh_metric(cost, theta, config, state.updates)?, config.beta);
    let g = cost.gradient(theta)?;
    let (theta_new, diag) = qng_step_with_metric(theta, &g, next.matrix.as_ref().expect("metric set by update"), config)?;
    Ok((theta_new, next, diag))
}

/// One row of an optimization trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OptRecord {
    pub iter: usize,
    pub theta: Vec<F17>,
    pub cost: F17,
    pub grad_norm: F17,
    pub eta: F17,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveDiagnostics>,
}

impl OptRecord {
    pub fn theta(&self) -> Vec<f64> {
        self.theta.iter().map(|x| x.0).collect()
    }
}

/// Iterates and outcome of [`minimize`]; record 0 is the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct OptTrace {
    pub records: Vec<OptRecord>,
    pub converged: bool,
}

impl OptTrace {
    pub fn final_record(&self) -> &OptRecord {
        self.records.last().expect("trace holds the starting point")
    }

    pub fn final_cost(&self) -> f64 {
        self.final_record().cost.0
    }

    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    /// Columns `iter,cost,gradNorm,eta,conditionNumber,theta_0..theta_{d-1}`.
    pub fn to_csv(&self) -> String {
        use crate::schema::format_f64 as f;
        let d = self.records.first().map_or(0, |r| r.theta.len());
        let mut out = String::from("iter,cost,gradNorm,eta,conditionNumber");
        for k in 0..d {
            out.push_str(&format!(",theta_{k}"));
        }
        out.push('\n');
        for r in &self.records {
            let cond = r.solve.map_or(String::new(), |s| f(s.condition_number.0));
            out.push_str(&format!("{},{},{},{},{}", r.iter, f(r.cost.0), f(r.grad_norm.0), f(r.eta.0), cond));
            for t in &r.theta {
                out.push(',');
                out.push_str(&f(t.0));
            }
            out.push('\n');
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Iterate the configured step until `‖∇C‖ ≤ gradNormTol` or `maxIters`.
pub fn minimize(cost: &CostFunction, theta0: &[f64], config: &OptimizerConfig) -> Result<OptTrace> {
    config.validate()?;
    cost.circuit.check_params(theta0)?;
    let mut theta = theta0.to_vec();
    let mut c = cost.value(&theta)?;
    let mut g = cost.gradient(&theta)?;
    let mut records = vec![OptRecord {
        iter: 0,
        theta: f17_vec(&theta),
        cost: F17(c),
        grad_norm: F17(norm(&g)),
        eta: F17(config.eta),
        solve: None,
    }];
    let mut metric = SmoothedMetric::new(config.initial_metric.clone());
    let mut converged = norm(&g) <= config.grad_norm_tol;
    let mut iter = 0;
    while !converged && iter < config.max_iters {
        iter += 1;
        // Direction at the current point, independent of the step size.
        let (dir, solve) = match config.method {
            Method::Gd => (g.clone(), None),
            Method::Qng => {
                let f = qfim_pure(&cost.circuit, &theta)?;
                let (x, diag) = natural_direction(f.entries(), &g, config.lambda_reg)?;
                (x, Some(diag))
            }
            Method::SpsaQng => {
                metric = metric.update(fresh_metric(cost, &theta, config, metric.updates)?, config.beta);
                let (x, diag) = natural_direction(metric.matrix.as_ref().expect("metric set"), &g, config.lambda_reg)?;
                (x, Some(diag))
            }
        };
        let mut eta = config.eta;
        let mut next = axpy(&theta, eta, &dir);
        let mut c_next = cost.value(&next)?;
        if config.backtracking {
            let mut halvings = 0;
            while c_next > c + 1e-12 && halvings < 30 {
                eta *= 0.5;
                next = axpy(&theta, eta, &dir);
                c_next = cost.value(&next)?;
                halvings += 1;
            }
        }
        theta = next;
        c = c_next;
        g = cost.gradient(&theta)?;
        converged = norm(&g) <= config.grad_norm_tol;
        records.push(OptRecord {
            iter,
            theta: f17_vec(&theta),
            cost: F17(c),
            grad_norm: F17(norm(&g)),
            eta: F17(eta),
            solve,
        });
    }
    Ok(OptTrace { records, converged })
}
