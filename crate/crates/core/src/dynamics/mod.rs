//! Propagation of the register through a pulse sequence.
//!
//! Amplitudes `A_p(t)` are in the Schrödinger picture with the static
//! Hamiltonian `H₀ + H_int` diagonal in the product basis. Three engines are
//! provided:
//!
//! - exact: dense diagonalization of the time-independent rotating-frame
//!   Hamiltonian ([`RotatingFrameMatrix`]);
//! - two-level: each target-bit pair follows the detuned Rabi solution;
//! - [`ode_oracle`]: RK4 integration with the lab-frame drive, for checks.

mod frame;
mod oracle;
mod two_level;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{QuantumState, SpinSystem};
use crate::protocol::{Pulse, PulseSequence};

pub use frame::{PulsePropagator, RotatingFrameMatrix, EXACT_QUBIT_LIMIT};
pub use oracle::{OracleSettings, ORACLE_QUBIT_LIMIT};
pub use two_level::rabi_unitary;

/// Number of leading basis states reported in [`RunResult`] summaries.
pub const LEADING_STATES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Exact,
    TwoLevel,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::TwoLevel => "two_level",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "two_level" => Ok(Method::TwoLevel),
            other => Err(invalid(format!("unknown method '{other}' (exact | two_level)"))),
        }
    }
}

/// Applies `pulse`, starting at time `start`, by exact diagonalization.
pub fn apply_pulse_exact(
    state: &QuantumState,
    pulse: &Pulse,
    start: f64,
    sys: &SpinSystem,
) -> Result<QuantumState> {
    check_inputs(state, sys)?;
    let prop = PulsePropagator::new(sys, pulse)?;
    let mut out = state.clone();
    prop.apply(out.amplitudes_mut(), start);
    Ok(out)
}

/// Applies `pulse`, starting at time `start`, with the two-level approximation.
pub fn apply_pulse_two_level(
    state: &QuantumState,
    pulse: &Pulse,
    start: f64,
    sys: &SpinSystem,
) -> Result<QuantumState> {
    check_inputs(state, sys)?;
    if pulse.target >= sys.len() {
        return Err(invalid(format!(
            "pulse target {} outside register of {} qubits",
            pulse.target,
            sys.len()
        )));
    }
    let mut out = state.clone();
    two_level::propagate(sys, pulse, out.amplitudes_mut(), start);
    Ok(out)
}

fn check_inputs(state: &QuantumState, sys: &SpinSystem) -> Result<()> {
    if state.qubits() != sys.len() {
        return Err(invalid(format!(
            "state has {} qubits, system has {}",
            state.qubits(),
            sys.len()
        )));
    }
    state.check_normalized()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub method: Method,
    /// Uniform Larmor offset (rad/μs) added to every spin during pulse `n`.
    pub offsets: Option<Vec<f64>>,
    /// Initial state; the ground state when `None`.
    pub initial: Option<QuantumState>,
    /// Record a [`Snapshot`] after every pulse.
    pub trace: bool,
}

impl RunOptions {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }
}

/// Populations after one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub pulse: usize,
    pub target: usize,
    /// Probability of |00…0⟩.
    pub ground: f64,
    /// Probability of the ladder state with qubits `0..=target` excited.
    pub ladder: f64,
    pub leading_states: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "RunSummary")]
pub struct RunResult {
    pub state: QuantumState,
    pub error_probability: f64,
    pub magnetization: f64,
    /// `arg(C_{2^L−1}/C_0)` with `C_p = A_p·e^{iE_p T}`, wrapped to (−π, π].
    pub relative_phase: f64,
    pub total_time: f64,
    pub snapshots: Vec<Snapshot>,
}

/// JSON form of [`RunResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub phase_rad: f64,
    pub total_time_us: f64,
    pub leading_states: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<Snapshot>,
}

impl From<RunResult> for RunSummary {
    fn from(r: RunResult) -> Self {
        Self {
            p: r.error_probability,
            m: r.magnetization,
            phase_rad: r.relative_phase,
            total_time_us: r.total_time,
            leading_states: r.state.leading_states(LEADING_STATES),
            snapshots: r.snapshots,
        }
    }
}

impl RunResult {
    fn new(sys: &SpinSystem, state: QuantumState, total_time: f64, snapshots: Vec<Snapshot>) -> Self {
        let last = sys.dimension() - 1;
        let a = state.amplitudes();
        // E_last − E_0 = Σ ω_l.
        let gap: f64 = (0..sys.len()).map(|l| sys.larmor(l)).sum();
        let raw = a[last].arg() - a[0].arg() + gap * total_time;
        let relative_phase = wrap_phase(raw);
        Self {
            error_probability: state.error_probability(),
            magnetization: state.magnetization(),
            relative_phase,
            total_time,
            snapshots,
            state,
        }
    }

    pub fn summary(&self) -> RunSummary {
        self.clone().into()
    }
}

fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Runs `seq` on `sys` with the chosen method.
pub fn run_protocol(sys: &SpinSystem, seq: &PulseSequence, opts: &RunOptions) -> Result<RunResult> {
    let mut state = match &opts.initial {
        Some(s) => s.clone(),
        None => QuantumState::ground(sys.len()),
    };
    check_inputs(&state, sys)?;
    if let Some(offsets) = &opts.offsets {
        if offsets.len() != seq.len() {
            return Err(invalid(format!(
                "{} frequency offsets for {} pulses",
                offsets.len(),
                seq.len()
            )));
        }
    }
    for p in seq.pulses() {
        if p.target >= sys.len() {
            return Err(invalid(format!(
                "pulse target {} outside register of {} qubits",
                p.target,
                sys.len()
            )));
        }
    }
    if opts.method == Method::Exact && sys.len() > EXACT_QUBIT_LIMIT {
        return Err(crate::Error::TooLarge {
            what: "exact propagator",
            qubits: sys.len(),
            limit: EXACT_QUBIT_LIMIT,
        });
    }

    let mut snapshots = Vec::new();
    for (n, (start, pulse)) in seq.iter().enumerate() {
        let offset = opts.offsets.as_ref().map_or(0.0, |o| o[n]);
        let local: Cow<SpinSystem> = if offset != 0.0 {
            Cow::Owned(sys.shifted(offset))
        } else {
            Cow::Borrowed(sys)
        };
        match opts.method {
            Method::Exact => PulsePropagator::new(&local, pulse)?.apply(state.amplitudes_mut(), start),
            Method::TwoLevel => two_level::propagate(&local, pulse, state.amplitudes_mut(), start),
        }
        if opts.trace {
            let ladder = (1usize << (pulse.target + 1)) - 1;
            snapshots.push(Snapshot {
                pulse: n,
                target: pulse.target,
                ground: state.probability(0),
                ladder: state.probability(ladder),
                leading_states: state.leading_states(LEADING_STATES),
            });
        }
    }
    Ok(RunResult::new(sys, state, seq.total_time(), snapshots))
}

/// Reference integration of `seq` from the ground state (see [`OracleSettings`]).
pub fn ode_oracle(sys: &SpinSystem, seq: &PulseSequence) -> Result<RunResult> {
    ode_oracle_with(
        sys,
        seq,
        &QuantumState::ground(sys.len()),
        OracleSettings::default(),
    )
}

pub fn ode_oracle_with(
    sys: &SpinSystem,
    seq: &PulseSequence,
    initial: &QuantumState,
    settings: OracleSettings,
) -> Result<RunResult> {
    check_inputs(initial, sys)?;
    let amps = oracle::integrate(sys, seq, initial.amplitudes(), settings)?;
    let state = QuantumState::from_amplitudes(amps)?;
    Ok(RunResult::new(sys, state, seq.total_time(), Vec::new()))
}

/// Amplitude-wise `|a|²` distance, `max_p ||a_p|² − |b_p|²|`.
pub fn max_population_difference(a: &QuantumState, b: &QuantumState) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs())
        .fold(0.0, f64::max)
}
