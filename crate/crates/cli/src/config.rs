//! Run configuration: command-line flags merged over an optional JSON file.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::CliError;

/// Flags shared by every command. Any flag overrides the same key in `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with any of the keys below (camelCase); unknown keys are rejected.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Circuit JSON file.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Parameter values, comma separated (radians).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` or `csv`.
    #[arg(long)]
    pub format: Option<String>,
    /// Measurement basis letters (`z`, `x`, `y`), one per qubit or one for all.
    #[arg(long)]
    pub basis: Option<String>,
    /// Use an n-qubit GHZ probe instead of a circuit file.
    #[arg(long)]
    pub ghz: Option<usize>,
    /// Phase encoding for `--ghz`: `collective-phase` or `per-qubit`.
    #[arg(long)]
    pub encoding: Option<String>,
    /// SPSA sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Noise after every gate, e.g. `depolarizing:0.1`, `dephasing:0.2`, `amplitude-damping:0.05`.
    #[arg(long)]
    pub noise: Option<String>,
    /// Direction for the finite-difference projection, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    /// Clip negative eigenvalues of SPSA estimates.
    #[arg(long)]
    pub psd_project: bool,
    /// Cost observable as `coef:PAULI` terms, comma separated (e.g. `1:ZZ,0.5:XI`).
    #[arg(long, allow_hyphen_values = true)]
    pub observable: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub lambda_reg: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub grad_norm_tol: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Halve the step until the cost does not increase.
    #[arg(long)]
    pub backtracking: bool,
    /// Probe strategy for `sense`: `separate` or `ghz`.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Probe counts for `sense`, as `1..5` or `1,2,4`.
    #[arg(long)]
    pub n: Option<String>,
    /// Physical phase value.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Run the maximum-likelihood experiment instead of the scaling scan.
    #[arg(long)]
    pub mle: bool,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Information kind for `spectrum`: `quantum` or `classical`.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub rank_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct FileConfig {
    circuit: Option<PathBuf>,
    theta: Option<Vec<f64>>,
    method: Option<String>,
    shots: Option<u64>,
    seed: Option<u64>,
    epsilon: Option<f64>,
    out: Option<PathBuf>,
    format: Option<String>,
    basis: Option<String>,
    ghz: Option<usize>,
    encoding: Option<String>,
    samples: Option<usize>,
    noise: Option<String>,
    direction: Option<Vec<f64>>,
    psd_project: Option<bool>,
    observable: Option<Vec<(f64, String)>>,
    eta: Option<f64>,
    lambda_reg: Option<f64>,
    max_iters: Option<usize>,
    grad_norm_tol: Option<f64>,
    beta: Option<f64>,
    backtracking: Option<bool>,
    strategy: Option<String>,
    n: Option<Vec<usize>>,
    phi: Option<f64>,
    mle: Option<bool>,
    repeats: Option<usize>,
    grid_points: Option<usize>,
    kind: Option<String>,
    rank_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Fully merged settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub circuit: Option<PathBuf>,
    pub theta: Option<Vec<f64>>,
    pub method: Option<String>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub basis: Option<String>,
    pub ghz: Option<usize>,
    pub encoding: Option<String>,
    pub samples: Option<usize>,
    pub noise: Option<String>,
    pub direction: Option<Vec<f64>>,
    pub psd_project: bool,
    pub observable: Option<Vec<(f64, String)>>,
    pub eta: Option<f64>,
    pub lambda_reg: Option<f64>,
    pub max_iters: Option<usize>,
    pub grad_norm_tol: Option<f64>,
    pub beta: Option<f64>,
    pub backtracking: bool,
    pub strategy: Option<String>,
    pub n: Option<Vec<usize>>,
    pub phi: Option<f64>,
    pub mle: bool,
    pub repeats: Option<usize>,
    pub grid_points: Option<usize>,
    pub kind: Option<String>,
    pub rank_tol: Option<f64>,
}

pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::config(format!("{what}: '{s}' is not a number"))))
        .collect()
}

fn parse_counts(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::config(format!("n: expected 'a..b' or a comma-separated list, got '{text}'"));
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn parse_observable(text: &str) -> Result<Vec<(f64, String)>, CliError> {
    text.split(',')
        .map(|term| {
            let (coef, pauli) = term
                .split_once(':')
                .ok_or_else(|| CliError::config(format!("observable term '{term}' must look like coef:PAULI")))?;
            let coef = coef.trim().parse::<f64>().map_err(|_| CliError::config(format!("observable coefficient '{coef}' is not a number")))?;
            Ok((coef, pauli.trim().to_ascii_uppercase()))
        })
        .collect()
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_flags(flags: &Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let theta = match &flags.theta {
            Some(t) => Some(parse_list(t, "theta")?),
            None => file.theta,
        };
        let direction = match &flags.direction {
            Some(t) => Some(parse_list(t, "direction")?),
            None => file.direction,
        };
        let observable = match &flags.observable {
            Some(t) => Some(parse_observable(t)?),
            None => file.observable,
        };
        let n = match &flags.n {
            Some(t) => Some(parse_counts(t)?),
            None => file.n,
        };
        let format = match flags.format.clone().or(file.format).as_deref() {
            None | Some("json") => Format::Json,
            Some("csv") => Format::Csv,
            Some(other) => return Err(CliError::config(format!("unknown format '{other}' (expected json or csv)"))),
        };
        Ok(Self {
            circuit: flags.circuit.clone().or(file.circuit),
            theta,
            method: flags.method.clone().or(file.method),
            shots: flags.shots.or(file.shots),
            seed: flags.seed.or(file.seed),
            epsilon: flags.epsilon.or(file.epsilon),
            out: flags.out.clone().or(file.out),
            format,
            basis: flags.basis.clone().or(file.basis),
            ghz: flags.ghz.or(file.ghz),
            encoding: flags.encoding.clone().or(file.encoding),
            samples: flags.samples.or(file.samples),
            noise: flags.noise.clone().or(file.noise),
            direction,
            psd_project: flags.psd_project || file.psd_project.unwrap_or(false),
            observable,
            eta: flags.eta.or(file.eta),
            lambda_reg: flags.lambda_reg.or(file.lambda_reg),
            max_iters: flags.max_iters.or(file.max_iters),
            grad_norm_tol: flags.grad_norm_tol.or(file.grad_norm_tol),
            beta: flags.beta.or(file.beta),
            backtracking: flags.backtracking || file.backtracking.unwrap_or(false),
            strategy: flags.strategy.clone().or(file.strategy),
            n,
            phi: flags.phi.or(file.phi),
            mle: flags.mle || file.mle.unwrap_or(false),
            repeats: flags.repeats.or(file.repeats),
            grid_points: flags.grid_points.or(file.grid_points),
            kind: flags.kind.clone().or(file.kind),
            rank_tol: flags.rank_tol.or(file.rank_tol),
        })
    }

    /// The seed, which every stochastic method must be given explicitly.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::config("seed required for stochastic methods (pass --seed N)"))
    }
}
