//! JSON experiment configuration. Frequencies are in MHz here and converted
//! to rad/μs once, in [`ChainSpec::resolve`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ghzchain::dynamics::Method;
use ghzchain::ensemble::NoiseModel;
use ghzchain::model::{mhz, ChainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Prefix of the first line of every CSV this tool writes.
pub const CONFIG_HEADER: &str = "# config: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSpec {
    pub qubits: usize,
    pub omega0_mhz: f64,
    pub delta_omega_mhz: f64,
    /// Dipole constant `J/2π` at 1 nm, signed.
    pub coupling_mhz: f64,
    pub spacing_nm: f64,
    pub k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_h_mhz: Option<f64>,
    pub theta_rad: f64,
    /// Overrides `delta_omega_mhz` when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            qubits: 7,
            omega0_mhz: 1000.0,
            delta_omega_mhz: 141.0,
            coupling_mhz: -52.0,
            spacing_nm: 2.2,
            k: 1,
            omega_h_mhz: None,
            theta_rad: std::f64::consts::FRAC_PI_2,
            alpha: None,
        }
    }
}

impl ChainSpec {
    pub fn resolve(&self) -> Result<ChainConfig, CliError> {
        let mut cfg = ChainConfig {
            qubits: self.qubits,
            omega0: mhz(self.omega0_mhz),
            delta_omega: mhz(self.delta_omega_mhz),
            coupling: mhz(self.coupling_mhz),
            spacing: self.spacing_nm,
            k: self.k,
            omega_h: self.omega_h_mhz.map(mhz),
            theta: self.theta_rad,
        };
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CliError::Config(format!("chain.alpha must be positive, got {a}")));
            }
            cfg = cfg.with_alpha(a);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub xi: f64,
    pub v: f64,
    pub v_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    Alpha,
    InvAlpha,
    #[serde(rename = "L")]
    L,
    VBar,
    Xi,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::Alpha => "alpha",
            SweepVar::InvAlpha => "inv_alpha",
            SweepVar::L => "L",
            SweepVar::VBar => "v_bar",
            SweepVar::Xi => "xi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub var: SweepVar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let pts = match (&self.values, &self.range) {
            (Some(v), None) => v.clone(),
            (None, Some(r)) => expand(r)?,
            _ => {
                return Err(CliError::Config(
                    "sweep needs exactly one of `values` or `range`".into(),
                ))
            }
        };
        if pts.is_empty() {
            return Err(CliError::Config("sweep has no points".into()));
        }
        if let Some(x) = pts.iter().find(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("sweep value {x} is not finite")));
        }
        if self.var == SweepVar::L {
            if let Some(x) = pts.iter().find(|x| x.fract() != 0.0 || **x < 1.0) {
                return Err(CliError::Config(format!(
                    "sweep over L needs positive integers, got {x}"
                )));
            }
        }
        Ok(pts)
    }
}

fn expand(r: &Range) -> Result<Vec<f64>, CliError> {
    if r.steps == 0 {
        return Err(CliError::Config("sweep.range.steps must be ≥ 1".into()));
    }
    if r.steps == 1 {
        return Ok(vec![r.start]);
    }
    let n = (r.steps - 1) as f64;
    match r.scale {
        Scale::Linear => Ok((0..r.steps)
            .map(|i| r.start + (r.stop - r.start) * i as f64 / n)
            .collect()),
        Scale::Log => {
            if !(r.start > 0.0 && r.stop > 0.0) {
                return Err(CliError::Config("log-scale range needs positive bounds".into()));
            }
            let (a, b) = (r.start.ln(), r.stop.ln());
            Ok((0..r.steps).map(|i| (a + (b - a) * i as f64 / n).exp()).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSpec {
    pub chains: usize,
    pub realizations: usize,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            chains: 100,
            realizations: 50,
        }
    }
}

/// Parallel chain array used by the inter-chain correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySpec {
    pub chains: usize,
    pub driven: usize,
}

impl Default for ArraySpec {
    fn default() -> Self {
        Self { chains: 3, driven: 1 }
    }
}

/// Simulation method. `estimate` evaluates the fitted closed forms instead
/// of propagating and is accepted by `sweep` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    #[default]
    Exact,
    TwoLevel,
    Estimate,
}

impl MethodSpec {
    pub fn propagator(self) -> Result<Method, CliError> {
        match self {
            MethodSpec::Exact => Ok(Method::Exact),
            MethodSpec::TwoLevel => Ok(Method::TwoLevel),
            MethodSpec::Estimate => Err(CliError::Config(
                "method `estimate` is only valid for `sweep`".into(),
            )),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(MethodSpec::Exact),
            "two_level" => Ok(MethodSpec::TwoLevel),
            "estimate" => Ok(MethodSpec::Estimate),
            _ => Err(format!("unknown method '{s}' (exact | two_level | estimate)")),
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodSpec::Exact => "exact",
            MethodSpec::TwoLevel => "two_level",
            MethodSpec::Estimate => "estimate",
        })
    }
}

/// Fixed displacement of one site, in units of the spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub site: usize,
    pub v: f64,
}

impl FromStr for Displacement {
    type Err = String;

    /// `k:v`, e.g. `4:-0.05`. A Unicode minus is accepted.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.replace('\u{2212}', "-");
        let (k, v) = s
            .split_once(':')
            .ok_or_else(|| format!("expected k:v, got '{s}'"))?;
        let site = k.trim().parse().map_err(|_| format!("bad site index '{k}'"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("bad displacement '{v}'"))?;
        if !v.is_finite() {
            return Err(format!("displacement must be finite, got {v}"));
        }
        Ok(Self { site, v })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub chain: ChainSpec,
    pub noise: NoiseSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub method: MethodSpec,
    pub ensemble: EnsembleSpec,
    pub seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub displace: Vec<Displacement>,
    /// Inter-chain spacing `D` in nm; absent means isolated chains.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_spacing_nm: Option<f64>,
    pub array: ArraySpec,
    /// Transverse relaxation time for `lmax`.
    pub t2_us: f64,
    /// Not echoed into output headers.
    #[serde(skip_serializing)]
    pub output: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            chain: ChainSpec::default(),
            noise: NoiseSpec::default(),
            sweep: None,
            method: MethodSpec::default(),
            ensemble: EnsembleSpec::default(),
            seed: 0,
            displace: Vec::new(),
            chain_spacing_nm: None,
            array: ArraySpec::default(),
            t2_us: 20.0,
            output: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses JSON, or the `# config: ` header line of a CSV written by this tool.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let body = match text.strip_prefix(CONFIG_HEADER) {
            Some(rest) => rest.lines().next().unwrap_or(""),
            None => text,
        };
        serde_json::from_str(body).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            xi: self.noise.xi,
            v: self.noise.v,
            v_bar: self.noise.v_bar,
            seed: self.seed,
        }
    }

    /// Sets the inter-chain spacing; infinity is the same as leaving it unset.
    pub fn set_chain_spacing(&mut self, d: f64) -> Result<(), CliError> {
        if d.is_infinite() && d > 0.0 {
            self.chain_spacing_nm = None;
            return Ok(());
        }
        if !(d > 0.0) {
            return Err(CliError::Config(format!(
                "chain spacing must be positive, got {d}"
            )));
        }
        self.chain_spacing_nm = Some(d);
        Ok(())
    }

    /// Compact JSON used in output headers.
    pub fn header_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Copy of `self` with the sweep variable set to `x`.
    pub fn at_point(&self, var: SweepVar, x: f64) -> Result<Self, CliError> {
        let mut c = self.clone();
        match var {
            SweepVar::Alpha => c.chain.alpha = Some(x),
            SweepVar::InvAlpha => {
                if x == 0.0 {
                    return Err(CliError::Config("inv_alpha sweep value 0".into()));
                }
                c.chain.alpha = Some(1.0 / x)
            }
            SweepVar::L => c.chain.qubits = x as usize,
            SweepVar::VBar => c.noise.v_bar = x,
            SweepVar::Xi => c.noise.xi = x,
        }
        Ok(c)
    }

    /// Per-site displacements for the resolved chain.
    pub fn shifts(&self, qubits: usize) -> Result<Option<Vec<f64>>, CliError> {
        if self.displace.is_empty() {
            return Ok(None);
        }
        let mut s = vec![0.0; qubits];
        for d in &self.displace {
            if d.site >= qubits {
                return Err(CliError::Config(format!(
                    "displaced site {} outside chain of {qubits} qubits",
                    d.site
                )));
            }
            s[d.site] += d.v;
        }
        Ok(Some(s))
    }
}
