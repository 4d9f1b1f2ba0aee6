//! Command bodies. Each returns the primary output text; nothing here writes files.

use std::fs;
use std::path::PathBuf;

use fisherlab::circuit::{Observable, ParamCircuit};
use fisherlab::fisher::{self, FisherMatrix, JacobianMode, SpsaOptions};
use fisherlab::metrology::{self, Grid, MleOptions, SensingModel, Strategy};
use fisherlab::optimize::{self, CostFunction, Method, MetricSource, OptimizerConfig};
use fisherlab::schema::{f17_vec, fisher_to_csv, fisher_to_json, format_f64, parse_circuit, F17};
use fisherlab::simulator::{Measurement, NoiseChannel, NoiseModel, Shots};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::CliError;

/// Text for `--out` (or stdout), plus an optional summary and stderr notes.
pub struct Output {
    pub primary: String,
    pub summary: Option<String>,
    pub notes: Vec<String>,
}

impl Output {
    fn new(primary: String) -> Self {
        Self { primary, summary: None, notes: Vec::new() }
    }

    /// Summaries go next to the output as `<out>.summary.json`, or to stderr.
    pub fn write(&self, cfg: &RunConfig) -> Result<(), CliError> {
        for n in &self.notes {
            eprintln!("note: {n}");
        }
        match &cfg.out {
            Some(path) => {
                fs::write(path, &self.primary).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
                if let Some(s) = &self.summary {
                    let mut p = path.clone().into_os_string();
                    p.push(".summary.json");
                    let p = PathBuf::from(p);
                    fs::write(&p, s).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
                }
            }
            None => {
                print!("{}", self.primary);
                if let Some(s) = &self.summary {
                    eprint!("{s}");
                }
            }
        }
        Ok(())
    }
}

/// Lower-case with `-` and `_` removed, so `param-shift` and `paramShift` agree.
fn normalize(name: &str) -> String {
    name.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_lowercase()
}

fn load_circuit(cfg: &RunConfig) -> Result<ParamCircuit, CliError> {
    let path = cfg.circuit.as_ref().ok_or_else(|| CliError::config("circuit required (pass --circuit PATH)"))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    parse_circuit(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn theta_for(cfg: &RunConfig, d: usize) -> Result<Vec<f64>, CliError> {
    match &cfg.theta {
        Some(t) if t.len() == d => Ok(t.clone()),
        Some(t) => Err(CliError::config(format!("theta has {} values, circuit has {d} parameters", t.len()))),
        None if d == 0 => Ok(Vec::new()),
        None => Err(CliError::config("theta required (pass --theta v1,v2,...)")),
    }
}

fn measurement_for(cfg: &RunConfig, n: usize) -> Result<Measurement, CliError> {
    let Some(b) = &cfg.basis else {
        return Ok(Measurement::Computational);
    };
    let letters: Vec<char> = b.chars().map(|c| c.to_ascii_uppercase()).collect();
    let letters = match letters.len() {
        1 => vec![letters[0]; n],
        k if k == n => letters,
        k => return Err(CliError::config(format!("basis has {k} letters for {n} qubits"))),
    };
    if letters.iter().all(|&c| c == 'Z') {
        return Ok(Measurement::Computational);
    }
    let m = Measurement::LocalPauli(letters);
    m.validate(n)?;
    Ok(m)
}

fn noise_for(cfg: &RunConfig, circuit: &ParamCircuit) -> Result<NoiseModel, CliError> {
    let spec = cfg.noise.as_deref().ok_or_else(|| CliError::config("mixed method requires a noise spec (pass --noise depolarizing:P)"))?;
    let (kind, value) = spec
        .split_once(':')
        .ok_or_else(|| CliError::config(format!("noise '{spec}' must look like kind:value")))?;
    let value: f64 = value.parse().map_err(|_| CliError::config(format!("noise strength '{value}' is not a number")))?;
    let kind = normalize(kind);
    let model = match kind.as_str() {
        "depolarizing" => NoiseModel::after_each_gate(circuit, |q| NoiseChannel::depolarizing(value, q)),
        "dephasing" => NoiseModel::after_each_gate(circuit, |q| NoiseChannel::dephasing(value, q)),
        "amplitudedamping" => NoiseModel::after_each_gate(circuit, |q| NoiseChannel::amplitude_damping(value, q)),
        "none" => Ok(NoiseModel::none()),
        _ => return Err(CliError::config(format!("unknown noise kind '{kind}'"))),
    };
    Ok(model?)
}

fn emit_fisher(cfg: &RunConfig, f: &FisherMatrix) -> Output {
    let mut out = Output::new(match cfg.format {
        Format::Json => fisher_to_json(f),
        Format::Csv => fisher_to_csv(f),
    });
    out.notes.extend(f.meta().warnings.iter().cloned());
    out
}

pub fn cfim(cfg: &RunConfig) -> Result<Output, CliError> {
    let circuit = load_circuit(cfg)?;
    let theta = theta_for(cfg, circuit.n_params())?;
    let m = measurement_for(cfg, circuit.n_qubits())?;
    let method = normalize(cfg.method.as_deref().unwrap_or("exact"));
    let f = match method.as_str() {
        "exact" => fisher::cfim_exact(&circuit, &theta, &m)?,
        "sampled" => {
            let seed = cfg.require_seed()?;
            let shots = cfg.shots.ok_or_else(|| CliError::config("shots required for the sampled method (pass --shots N)"))?;
            let mode = match cfg.epsilon {
                Some(eps) => JacobianMode::CentralFd(eps),
                None => JacobianMode::ParamShift,
            };
            fisher::cfim_sampled(&circuit, &theta, &m, Shots::Finite(shots), seed, mode)?
        }
        _ => return Err(CliError::config(format!("unknown cfim method '{method}' (expected exact or sampled)"))),
    };
    Ok(emit_fisher(cfg, &f))
}

/// Circuit and parameters for `qfim`: a circuit file, or a GHZ probe with a phase encoding.
fn qfim_target(cfg: &RunConfig) -> Result<(ParamCircuit, Vec<f64>), CliError> {
    let Some(n) = cfg.ghz else {
        let circuit = load_circuit(cfg)?;
        let theta = theta_for(cfg, circuit.n_params())?;
        return Ok((circuit, theta));
    };
    if n == 0 {
        return Err(CliError::config("ghz needs at least one qubit"));
    }
    let encoding = match normalize(cfg.encoding.as_deref().unwrap_or("collective-phase")).as_str() {
        "collectivephase" => metrology::collective_phase_encoding(n)?,
        "perqubit" => metrology::per_qubit_phase_encoding(n)?,
        other => return Err(CliError::config(format!("unknown encoding '{other}' (expected collective-phase or per-qubit)"))),
    };
    let model = SensingModel::new(metrology::ghz_probe(n)?, encoding, ParamCircuit::builder(n).build()?)?;
    let circuit = model.state_circuit()?;
    let theta = match (&cfg.theta, cfg.phi) {
        (Some(_), _) => theta_for(cfg, circuit.n_params())?,
        (None, phi) => vec![phi.unwrap_or(0.0); circuit.n_params()],
    };
    Ok((circuit, theta))
}

pub fn qfim(cfg: &RunConfig) -> Result<Output, CliError> {
    let (circuit, theta) = qfim_target(cfg)?;
    let method = normalize(cfg.method.as_deref().unwrap_or("exact"));
    let f = match method.as_str() {
        "exact" => fisher::qfim_pure(&circuit, &theta)?,
        "paramshift" => fisher::qfim_param_shift(&circuit, &theta)?,
        "spsa" => {
            let mut opts = SpsaOptions::new(cfg.epsilon.unwrap_or(0.01), cfg.samples.unwrap_or(100), cfg.require_seed()?);
            opts.psd_project = cfg.psd_project;
            fisher::qfim_spsa(&circuit, &theta, opts)?
        }
        "fdprojection" => {
            let v = match &cfg.direction {
                Some(v) => v.clone(),
                None => vec![1.0 / (theta.len().max(1) as f64).sqrt(); theta.len()],
            };
            fisher::qfim_projection_fd_matrix(&circuit, &theta, &v, cfg.epsilon.unwrap_or(1e-3))?
        }
        "mixed" => {
            let noise = noise_for(cfg, &circuit)?;
            fisher::qfim_mixed_circuit(&circuit, &theta, &noise, cfg.epsilon.unwrap_or(fisher::DEFAULT_FD_STEP))?
        }
        _ => {
            return Err(CliError::config(format!(
                "unknown qfim method '{method}' (expected exact, param-shift, spsa, fd-projection or mixed)"
            )))
        }
    };
    Ok(emit_fisher(cfg, &f))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct QngSummary {
    method: String,
    iterations: usize,
    converged: bool,
    final_cost: F17,
    theta: Vec<F17>,
}

pub fn qng(cfg: &RunConfig) -> Result<Output, CliError> {
    let circuit = load_circuit(cfg)?;
    let theta0 = match &cfg.theta {
        Some(_) => theta_for(cfg, circuit.n_params())?,
        None => vec![0.0; circuit.n_params()],
    };
    let terms = cfg.observable.as_ref().ok_or_else(|| CliError::config("observable required (pass --observable 1:ZZ,0.5:XI)"))?;
    let refs: Vec<(f64, &str)> = terms.iter().map(|(c, p)| (*c, p.as_str())).collect();
    let cost = CostFunction::new(circuit.clone(), Observable::from_pauli_terms(circuit.n_qubits(), &refs)?)?;
    let method_name = normalize(cfg.method.as_deref().unwrap_or("qng"));
    let method = match method_name.as_str() {
        "gd" => Method::Gd,
        "qng" => Method::Qng,
        "spsaqng" => Method::SpsaQng,
        _ => return Err(CliError::config(format!("unknown qng method '{method_name}' (expected gd, qng or spsa-qng)"))),
    };
    let defaults = OptimizerConfig::default();
    let mut oc = OptimizerConfig {
        eta: cfg.eta.unwrap_or(defaults.eta),
        lambda_reg: cfg.lambda_reg.unwrap_or(defaults.lambda_reg),
        max_iters: cfg.max_iters.unwrap_or(defaults.max_iters),
        grad_norm_tol: cfg.grad_norm_tol.unwrap_or(defaults.grad_norm_tol),
        method,
        beta: cfg.beta.unwrap_or(defaults.beta),
        spsa_epsilon: cfg.epsilon.unwrap_or(defaults.spsa_epsilon),
        spsa_samples: cfg.samples.unwrap_or(defaults.spsa_samples),
        metric_source: MetricSource::Spsa,
        backtracking: cfg.backtracking,
        ..defaults
    };
    if method == Method::SpsaQng {
        oc.seed = cfg.require_seed()?;
    }
    let trace = optimize::minimize(&cost, &theta0, &oc)?;
    let summary = QngSummary {
        method: method_name,
        iterations: trace.iterations(),
        converged: trace.converged,
        final_cost: F17(trace.final_cost()),
        theta: f17_vec(&trace.final_record().theta()),
    };
    let mut out = Output::new(match cfg.format {
        Format::Json => trace.to_jsonl(),
        Format::Csv => trace.to_csv(),
    });
    let mut s = serde_json::to_string_pretty(&summary).expect("summary serializes");
    s.push('\n');
    out.summary = Some(s);
    Ok(out)
}

#[derive(Serialize)]
struct ScalingRow {
    n: usize,
    qfi: F17,
}

#[derive(Serialize)]
struct ScalingOut {
    strategy: &'static str,
    rows: Vec<ScalingRow>,
    slope: Option<F17>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MleOut {
    phi_true: F17,
    shots: u64,
    repeats: usize,
    mean: F17,
    variance: F17,
    variance_std_error: F17,
    crb: F17,
    ratio: F17,
}

pub fn sense(cfg: &RunConfig) -> Result<Output, CliError> {
    if cfg.mle {
        return sense_mle(cfg);
    }
    let strategy = match normalize(cfg.strategy.as_deref().unwrap_or("ghz")).as_str() {
        "ghz" => Strategy::Ghz,
        "separate" => Strategy::Separate,
        other => return Err(CliError::config(format!("unknown strategy '{other}' (expected separate or ghz)"))),
    };
    let ns = cfg.n.clone().unwrap_or_else(|| (1..=5).collect());
    let table = metrology::scaling_experiment(&ns, strategy, cfg.phi.unwrap_or(0.0))?;
    let mut out = Output::new(match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let o = ScalingOut {
                strategy: strategy.as_str(),
                rows: table.rows.iter().map(|&(n, f)| ScalingRow { n, qfi: F17(f) }).collect(),
                slope: table.slope.map(F17),
            };
            let mut s = serde_json::to_string_pretty(&o).expect("table serializes");
            s.push('\n');
            s
        }
    });
    if let Some(s) = table.slope {
        out.notes.push(format!("log-log slope {}", format_f64(s)));
    }
    Ok(out)
}

fn sense_mle(cfg: &RunConfig) -> Result<Output, CliError> {
    let seed = cfg.require_seed()?;
    let n = cfg.ghz.unwrap_or(1);
    let probe = if cfg.ghz.is_some() { metrology::ghz_probe(n)? } else { metrology::plus_probes(1)? };
    let model = SensingModel::new(probe, metrology::collective_phase_encoding(n)?, metrology::x_basis_measurement(n)?)?;
    let phi = cfg.phi.unwrap_or(0.7);
    let opts = MleOptions {
        shots: cfg.shots.unwrap_or(10_000),
        repeats: cfg.repeats.unwrap_or(200),
        grid: Grid {
            points: cfg.grid_points.unwrap_or(Grid::default().points),
            ..Grid::default()
        },
        seed,
    };
    let result = metrology::mle_estimate(&model, &[], phi, &[], opts)?;
    let info = metrology::sensing_cfim(&model, &[], &[phi], &[])?;
    let crb = metrology::crb_bound(&info, opts.shots)?.matrix()[(0, 0)];
    let o = MleOut {
        phi_true: F17(phi),
        shots: opts.shots,
        repeats: opts.repeats,
        mean: F17(result.mean),
        variance: F17(result.variance),
        variance_std_error: F17(result.variance_std_error),
        crb: F17(crb),
        ratio: F17(result.variance / crb),
    };
    Ok(Output::new(match cfg.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&o).expect("result serializes");
            s.push('\n');
            s
        }
        Format::Csv => format!(
            "phiTrue,shots,repeats,mean,variance,varianceStdError,crb,ratio\n{},{},{},{},{},{},{},{}\n",
            format_f64(phi),
            o.shots,
            o.repeats,
            format_f64(result.mean),
            format_f64(result.variance),
            format_f64(result.variance_std_error),
            format_f64(crb),
            format_f64(o.ratio.0)
        ),
    }))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SpectrumOut {
    kind: &'static str,
    eigenvalues: Vec<F17>,
    effective_dimension: usize,
    rank_tol: F17,
}

pub fn spectrum(cfg: &RunConfig) -> Result<Output, CliError> {
    let circuit = load_circuit(cfg)?;
    let theta = theta_for(cfg, circuit.n_params())?;
    let f = match normalize(cfg.kind.as_deref().unwrap_or("quantum")).as_str() {
        "quantum" => fisher::qfim_pure(&circuit, &theta)?,
        "classical" => fisher::cfim_exact(&circuit, &theta, &measurement_for(cfg, circuit.n_qubits())?)?,
        other => return Err(CliError::config(format!("unknown kind '{other}' (expected quantum or classical)"))),
    };
    let tol = cfg.rank_tol.unwrap_or(metrology::DEFAULT_RANK_TOL);
    let values = metrology::fisher_spectrum(&f);
    let dim = metrology::effective_quantum_dimension(&f, tol);
    Ok(Output::new(match cfg.format {
        Format::Json => {
            let o = SpectrumOut {
                kind: f.kind().as_str(),
                eigenvalues: f17_vec(&values),
                effective_dimension: dim,
                rank_tol: F17(tol),
            };
            let mut s = serde_json::to_string_pretty(&o).expect("spectrum serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("index,eigenvalue\n");
            for (k, v) in values.iter().enumerate() {
                s.push_str(&format!("{k},{}\n", format_f64(*v)));
            }
            s
        }
    }))
}
