//! Command bodies. Each returns the full output text so that callers can
//! write it to a file or stdout, and tests can compare it directly.

use std::collections::BTreeMap;
use std::fmt::Write;

use ghzchain::dynamics::{run_protocol, RunOptions, RunSummary};
use ghzchain::ensemble::{displaced_chain, run_ensemble_with, EnsembleOptions, RNG_ALGORITHM};
use ghzchain::estimators::{alpha_opt, error_budget, m_nr, p_nr, BudgetInputs, ErrorBudget};
use ghzchain::fitting::{fit_linear, fit_power_law, FitModel, FitResult};
use ghzchain::model::{to_mhz, ChainConfig, SpinSystem};
use ghzchain::protocol::{
    corrected_protocol, entanglement_protocol, max_chain_length, ChainGeometry, ChainLengthBudget,
    PulseSequence,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MethodSpec, SweepVar, CONFIG_HEADER};
use crate::CliError;

pub const SWEEP_HEADER: &str =
    "sweep_var_name,sweep_value,L,alpha,delta_omega_mhz,P,M,phase_rad,total_time_us";
pub const ENSEMBLE_HEADER: &str = "sweep_var_name,sweep_value,M_mean,M_stderr,P_mean,P_stderr,n_real,seed";

fn header(cfg: &ExperimentConfig) -> String {
    format!("{CONFIG_HEADER}{}\n", cfg.header_json())
}

/// Sweep points, or a single unnamed point at the base configuration.
fn points(cfg: &ExperimentConfig) -> Result<Vec<(Option<SweepVar>, f64)>, CliError> {
    match &cfg.sweep {
        Some(s) => Ok(s.points()?.into_iter().map(|x| (Some(s.var), x)).collect()),
        None => Ok(vec![(None, f64::NAN)]),
    }
}

fn at(cfg: &ExperimentConfig, var: Option<SweepVar>, x: f64) -> Result<ExperimentConfig, CliError> {
    match var {
        Some(v) => cfg.at_point(v, x),
        None => Ok(cfg.clone()),
    }
}

fn var_name(var: Option<SweepVar>) -> &'static str {
    var.map_or("none", SweepVar::as_str)
}

/// Protocol for `chain`, inter-chain corrected when a spacing is configured.
pub fn sequence(cfg: &ExperimentConfig, chain: &ChainConfig) -> Result<PulseSequence, CliError> {
    match cfg.chain_spacing_nm {
        Some(d) => {
            let geom = ChainGeometry::new(d, chain, cfg.array.chains, cfg.array.driven)?;
            Ok(corrected_protocol(chain, &geom)?)
        }
        None => Ok(entanglement_protocol(chain)?),
    }
}

fn system(cfg: &ExperimentConfig, chain: &ChainConfig) -> Result<SpinSystem, CliError> {
    match cfg.shifts(chain.qubits)? {
        Some(s) => Ok(displaced_chain(chain, &s)?),
        None => Ok(SpinSystem::from_chain(chain)?),
    }
}

pub fn cmd_pulses(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let chain = cfg.chain.resolve()?;
    let seq = sequence(cfg, &chain)?;
    Ok(header(cfg) + &seq.to_csv())
}

#[derive(Debug, Serialize)]
struct RunOutput<'a> {
    config: &'a ExperimentConfig,
    alpha: f64,
    delta_omega_mhz: f64,
    result: RunSummary,
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let chain = cfg.chain.resolve()?;
    let method = cfg.method.propagator()?;
    let seq = sequence(cfg, &chain)?;
    let sys = system(cfg, &chain)?;
    let res = run_protocol(&sys, &seq, &RunOptions::new(method))?;
    let out = RunOutput {
        config: cfg,
        alpha: chain.alpha(),
        delta_omega_mhz: to_mhz(chain.delta_omega),
        result: res.summary(),
    };
    Ok(serde_json::to_string_pretty(&out).expect("run output serializes") + "\n")
}

fn sweep_row(cfg: &ExperimentConfig, var: Option<SweepVar>, x: f64) -> Result<String, CliError> {
    let point = at(cfg, var, x)?;
    let chain = point.chain.resolve()?;
    let seq = sequence(&point, &chain)?;
    let (p, m, phase) = match point.method {
        MethodSpec::Estimate => {
            let a = chain.alpha();
            (p_nr(chain.qubits, a)?, m_nr(chain.qubits, a)?, f64::NAN)
        }
        other => {
            let sys = system(&point, &chain)?;
            let r = run_protocol(&sys, &seq, &RunOptions::new(other.propagator()?))?;
            (r.error_probability, r.magnetization, r.relative_phase)
        }
    };
    Ok(format!(
        "{},{x:.16e},{},{:.16e},{:.16e},{p:.16e},{m:.16e},{phase:.16e},{:.16e}",
        var_name(var),
        chain.qubits,
        chain.alpha(),
        to_mhz(chain.delta_omega),
        seq.total_time()
    ))
}

/// Single-chain simulations over the sweep variable.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let pts = points(cfg)?;
    let rows: Vec<String> = pts
        .par_iter()
        .map(|&(var, x)| sweep_row(cfg, var, x))
        .collect::<Result<_, _>>()?;
    let mut out = header(cfg);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    Ok(out)
}

/// Noisy ensembles over the sweep variable.
pub fn cmd_ensemble(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let method = cfg.method.propagator()?;
    let pts = points(cfg)?;
    let rows: Vec<String> = pts
        .iter()
        .map(|&(var, x)| {
            let point = at(cfg, var, x)?;
            let chain = point.chain.resolve()?;
            if !point.displace.is_empty() {
                log::warn!("fixed displacements are ignored by `ensemble`");
            }
            let mut opts = EnsembleOptions::new(point.ensemble.chains, point.ensemble.realizations, method);
            opts.sequence = Some(sequence(&point, &chain)?);
            let e = run_ensemble_with(&chain, &point.noise(), &opts)?;
            Ok(format!(
                "{},{x:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                var_name(var),
                e.m_mean,
                e.m_stderr,
                e.p_mean,
                e.p_stderr,
                e.realizations,
                point.seed
            ))
        })
        .collect::<Result<_, CliError>>()?;
    let mut out = header(cfg);
    let _ = writeln!(out, "# rng: {RNG_ALGORITHM}");
    out.push_str(ENSEMBLE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    Ok(out)
}

/// Closed-form error budget over the sweep variable, with `α_opt` for the
/// configured `v̄`.
pub fn cmd_estimate(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let pts = points(cfg)?;
    let mut out = header(cfg);
    let _ = writeln!(
        out,
        "sweep_var_name,sweep_value,{},alpha_opt",
        ErrorBudget::CSV_HEADER
    );
    for (var, x) in pts {
        let point = at(cfg, var, x)?;
        let chain = point.chain.resolve()?;
        let (v, displaced) = match point.displace.first() {
            Some(d) => (d.v.abs(), d.site),
            None => (point.noise.v, 1),
        };
        let inputs = BudgetInputs {
            v,
            xi: point.noise.xi,
            v_bar: point.noise.v_bar,
            displaced,
            chi: point.chain_spacing_nm.map_or(0.0, |d| chain.spacing / d),
        };
        let b = error_budget(&chain, &inputs)?;
        let a_opt = alpha_opt(point.noise.v_bar, chain.qubits, chain.k);
        let _ = writeln!(out, "{},{x:.16e},{},{a_opt:.16e}", var_name(var), b.csv_row());
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct LmaxOutput<'a> {
    config: &'a ExperimentConfig,
    t2_us: f64,
    #[serde(flatten)]
    budget: ChainLengthBudget,
}

pub fn cmd_lmax(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let chain = cfg.chain.resolve()?;
    let budget = max_chain_length(cfg.t2_us, &chain)?;
    let out = LmaxOutput {
        config: cfg,
        t2_us: cfg.t2_us,
        budget,
    };
    Ok(serde_json::to_string_pretty(&out).expect("lmax output serializes") + "\n")
}

/// Column of a sweep CSV to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitColumn {
    P,
    M,
}

impl std::str::FromStr for FitColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "P" | "p" => Ok(FitColumn::P),
            "M" | "m" => Ok(FitColumn::M),
            _ => Err(format!("unknown column '{s}' (P | M)")),
        }
    }
}

/// Linear fit at one α.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFit {
    pub alpha: f64,
    pub fit: FitResult,
    /// `(P⁰, P¹)` or `(M⁰, M¹)` in the `P = −P⁰ + P¹L`, `M = M⁰ − M¹L` convention.
    pub coefficients: (f64, f64),
}

/// Power laws `c·α^e` of both coefficients across the α groups.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scaling {
    pub first: FitResult,
    pub second: FitResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOutput {
    pub model: FitModel,
    pub column: FitColumn,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Scaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_law: Option<FitResult>,
}

/// `(L, α, y)` triples from a sweep CSV.
pub fn read_sweep(text: &str, column: FitColumn) -> Result<Vec<(usize, f64, f64)>, CliError> {
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let head: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Input("sweep CSV has no header row".into()))?
        .split(',')
        .collect();
    let find = |name: &str| {
        head.iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Input(format!("sweep CSV lacks column `{name}`")))
    };
    let (il, ia) = (find("L")?, find("alpha")?);
    let iy = find(match column {
        FitColumn::P => "P",
        FitColumn::M => "M",
    })?;
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let get = |i: usize| -> Result<&str, CliError> {
            f.get(i)
                .map(|s| s.trim())
                .ok_or_else(|| CliError::Input(format!("data row {}: too few fields", n + 1)))
        };
        let bad = |what: &str| CliError::Input(format!("data row {}: bad {what}", n + 1));
        let l: usize = get(il)?.parse().map_err(|_| bad("L"))?;
        let a: f64 = get(ia)?.parse().map_err(|_| bad("alpha"))?;
        let y: f64 = get(iy)?.parse().map_err(|_| bad("value"))?;
        out.push((l, a, y));
    }
    Ok(out)
}

/// Linear-in-L fits per α (plus power laws of the coefficients when three or
/// more α values are present), or a single power law in α.
pub fn fit_sweep(
    rows: &[(usize, f64, f64)],
    model: FitModel,
    column: FitColumn,
) -> Result<FitOutput, CliError> {
    match model {
        FitModel::Linear => {
            let mut by_alpha: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
            for &(l, a, y) in rows {
                by_alpha.entry(a.to_bits()).or_default().push((l as f64, y));
            }
            let mut groups = Vec::new();
            for (bits, pts) in by_alpha {
                let fit = fit_linear(&pts)?;
                let coefficients = match column {
                    FitColumn::P => (fit.first, fit.second),
                    FitColumn::M => (-fit.first, -fit.second),
                };
                groups.push(GroupFit {
                    alpha: f64::from_bits(bits),
                    fit,
                    coefficients,
                });
            }
            groups.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
            let scaling = if groups.len() >= 3 {
                let first: Vec<_> = groups.iter().map(|g| (g.alpha, g.coefficients.0)).collect();
                let second: Vec<_> = groups.iter().map(|g| (g.alpha, g.coefficients.1)).collect();
                match (fit_power_law(&first), fit_power_law(&second)) {
                    (Ok(first), Ok(second)) => Some(Scaling { first, second }),
                    _ => {
                        log::warn!("coefficients are not all positive; power-law stage skipped");
                        None
                    }
                }
            } else {
                None
            };
            Ok(FitOutput {
                model,
                column,
                groups,
                scaling,
                power_law: None,
            })
        }
        FitModel::PowerLaw => {
            let pts: Vec<_> = rows.iter().map(|&(_, a, y)| (a, y)).collect();
            Ok(FitOutput {
                model,
                column,
                groups: Vec::new(),
                scaling: None,
                power_law: Some(fit_power_law(&pts)?),
            })
        }
    }
}

pub fn cmd_fit(sweep_csv: &str, model: FitModel, column: FitColumn) -> Result<String, CliError> {
    let rows = read_sweep(sweep_csv, column)?;
    let out = fit_sweep(&rows, model, column)?;
    Ok(serde_json::to_string_pretty(&out).expect("fit output serializes") + "\n")
}
