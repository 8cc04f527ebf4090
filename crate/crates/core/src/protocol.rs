//! Pulse synthesis for the entanglement protocol.
//!
//! A π/2 pulse on qubit 0 splits the ground state; Control-Not π pulses on
//! qubits `1..L` then walk the excited branch up the ladder
//! |0…01⟩ → |0…011⟩ → … → |1…1⟩. Each π pulse is tuned to the excited
//! branch's transition frequency including every long-range dipole shift, and
//! its Rabi frequency is chosen so that the same spin in the ground branch
//! completes exactly `K` full detuned Rabi cycles (the 2πK condition).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{inverse_cube_sum, to_mhz, ChainConfig, ZETA3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Hadamard,
    Cnot,
}

impl PulseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PulseKind::Hadamard => "hadamard",
            PulseKind::Cnot => "cnot",
        }
    }

    /// Rotation angle `Ω·τ`.
    pub fn angle(self) -> f64 {
        match self {
            PulseKind::Hadamard => FRAC_PI_2,
            PulseKind::Cnot => PI,
        }
    }
}

/// Rectangular circularly polarized RF pulse. Frequencies in rad/μs, time in μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub kind: PulseKind,
    pub target: usize,
    pub frequency: f64,
    pub rabi: f64,
    pub phase: f64,
    pub duration: f64,
}

impl Pulse {
    /// Pulse whose duration is set from `kind.angle() / rabi`.
    pub fn new(kind: PulseKind, target: usize, frequency: f64, rabi: f64) -> Self {
        Self {
            kind,
            target,
            frequency,
            rabi,
            phase: 0.0,
            duration: kind.angle() / rabi,
        }
    }
}

/// Contiguous pulses; pulse `n` starts when pulse `n − 1` ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
    starts: Vec<f64>,
}

impl PulseSequence {
    pub fn new(pulses: Vec<Pulse>) -> Self {
        let mut t = 0.0;
        let starts = pulses
            .iter()
            .map(|p| {
                let s = t;
                t += p.duration;
                s
            })
            .collect();
        Self { pulses, starts }
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// `(start, pulse)` pairs in order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &Pulse)> {
        self.starts.iter().copied().zip(self.pulses.iter())
    }

    pub fn total_time(&self) -> f64 {
        match (self.starts.last(), self.pulses.last()) {
            (Some(s), Some(p)) => s + p.duration,
            _ => 0.0,
        }
    }

    /// Pulse table with frequencies in MHz:
    /// `index,kind,target,nu_MHz,rabi_MHz,phase_rad,duration_us,t_start_us`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,kind,target,nu_MHz,rabi_MHz,phase_rad,duration_us,t_start_us\n");
        for (i, (start, p)) in self.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                p.kind.as_str(),
                p.target,
                to_mhz(p.frequency),
                to_mhz(p.rabi),
                p.phase,
                p.duration,
                start
            );
        }
        out
    }
}

/// Position of the driven chain inside a planar array of parallel chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainGeometry {
    /// Inter-chain spacing `D` in nm; `f64::INFINITY` decouples the chains.
    pub chain_spacing: f64,
    /// `χ = A/D`.
    pub chi: f64,
    pub chains: usize,
    pub driven: usize,
}

impl ChainGeometry {
    pub fn new(chain_spacing: f64, cfg: &ChainConfig, chains: usize, driven: usize) -> Result<Self> {
        if !(chain_spacing > 0.0) {
            return Err(invalid(format!(
                "chain spacing must be positive, got {chain_spacing}"
            )));
        }
        let chi = cfg.spacing / chain_spacing;
        if chi >= 1.0 {
            return Err(invalid(format!("χ = A/D = {chi} must be below 1")));
        }
        if chains == 0 || driven >= chains {
            return Err(invalid(format!("driven chain {driven} outside 0..{chains}")));
        }
        if driven == 0 || driven + 1 == chains {
            log::warn!("chain {driven} is an edge chain; neighbor-chain corrections assume two neighbors");
        }
        Ok(Self {
            chain_spacing,
            chi,
            chains,
            driven,
        })
    }
}

/// `s_z(p′)` of site `l` in the excited branch just before the pulse on `j`:
/// sites below `j` already flipped.
fn ladder_sz(l: usize, j: usize) -> f64 {
    if l < j {
        -0.5
    } else {
        0.5
    }
}

/// π/2 pulse on qubit 0 resonant with the ground-state transition `E_1 − E_0`.
pub fn hadamard_pulse(cfg: &ChainConfig) -> Pulse {
    let shift: f64 = (1..cfg.qubits).rev().map(|l| (l as f64).powi(-3)).sum();
    let nu = cfg.omega0 + cfg.nearest_coupling() / 2.0 * shift;
    Pulse::new(PulseKind::Hadamard, 0, nu, cfg.omega_h())
}

/// Frequency of the Control-Not on `j`, resonant with the excited branch.
fn cnot_frequency(j: usize, cfg: &ChainConfig) -> f64 {
    let shift: f64 = (0..cfg.qubits)
        .filter(|&l| l != j)
        .map(|l| ladder_sz(l, j) / (l.abs_diff(j) as f64).powi(3))
        .sum();
    cfg.larmor(j) + cfg.nearest_coupling() * shift
}

/// Ground-branch detuning `Δ_j(q″, 0) = (J/A³) Σ_{l<j} 1/(j−l)³`.
pub fn ground_detuning(j: usize, cfg: &ChainConfig) -> f64 {
    cfg.nearest_coupling() * inverse_cube_sum(j)
}

/// π pulse flipping qubit `j` in the excited branch while the 2πK condition
/// suppresses the flip in the ground branch.
pub fn cnot_pulse(j: usize, cfg: &ChainConfig) -> Result<Pulse> {
    if j == 0 {
        return Err(invalid(
            "qubit 0 is the Hadamard target; Control-Not targets start at 1",
        ));
    }
    if j >= cfg.qubits {
        return Err(invalid(format!(
            "target {j} outside chain of {} qubits",
            cfg.qubits
        )));
    }
    let rabi = ground_detuning(j, cfg).abs() / cfg.sqrt_4k2m1();
    Ok(Pulse::new(PulseKind::Cnot, j, cnot_frequency(j, cfg), rabi))
}

/// Hadamard followed by Control-Nots on qubits `1..L`.
pub fn entanglement_protocol(cfg: &ChainConfig) -> Result<PulseSequence> {
    cfg.validate()?;
    if cfg.qubits < 2 {
        return Err(invalid("entanglement needs at least two qubits"));
    }
    let mut pulses = vec![hadamard_pulse(cfg)];
    for j in 1..cfg.qubits {
        pulses.push(cnot_pulse(j, cfg)?);
    }
    Ok(PulseSequence::new(pulses))
}

/// `[1 + χ²(j−l)²]^{−3/2}`.
fn chain_kernel(chi: f64, j: usize, l: usize) -> f64 {
    let d = chi * l.abs_diff(j) as f64;
    (1.0 + d * d).powf(-1.5)
}

/// Control-Not on `j` with first-order corrections for the fields of the two
/// neighboring chains, both assumed to be in the same register state.
pub fn corrected_pulse(j: usize, cfg: &ChainConfig, geom: &ChainGeometry) -> Result<Pulse> {
    let base = cnot_pulse(j, cfg)?;
    if geom.chain_spacing.is_infinite() {
        return Ok(base);
    }
    let d3 = geom.chain_spacing.powi(3);
    let freq_shift: f64 = (0..cfg.qubits)
        .filter(|&l| l != j)
        .map(|l| ladder_sz(l, j) * chain_kernel(geom.chi, j, l))
        .sum();
    let rabi_shift: f64 = (0..j).map(|l| chain_kernel(geom.chi, j, l)).sum();
    let nu = base.frequency + 2.0 * cfg.coupling / d3 * freq_shift;
    let rabi = base.rabi + 2.0 * cfg.coupling.abs() / (d3 * cfg.sqrt_4k2m1()) * rabi_shift;
    Ok(Pulse::new(PulseKind::Cnot, j, nu, rabi))
}

/// [`entanglement_protocol`] with every Control-Not replaced by [`corrected_pulse`].
pub fn corrected_protocol(cfg: &ChainConfig, geom: &ChainGeometry) -> Result<PulseSequence> {
    cfg.validate()?;
    if cfg.qubits < 2 {
        return Err(invalid("entanglement needs at least two qubits"));
    }
    let mut pulses = vec![hadamard_pulse(cfg)];
    for j in 1..cfg.qubits {
        pulses.push(corrected_pulse(j, cfg, geom)?);
    }
    Ok(PulseSequence::new(pulses))
}

/// Outcome of [`max_chain_length`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainLengthBudget {
    /// `|J|·T₂/(π·A³·√(4K²−1))`.
    pub rhs: f64,
    /// Largest `L` whose exact duration sum fits within `rhs`.
    pub l_max: usize,
    /// Exact left-hand sum at `l_max`.
    pub exact_sum: f64,
    /// `(L−1)/ζ(3) + 0.3399` at `l_max`.
    pub zeta_sum: f64,
    /// Largest `L` satisfying the ζ(3) approximation.
    pub zeta_l_max: usize,
}

/// `(L − 1)/ζ(3) + 0.3399`, the large-`L` form of the duration sum.
pub fn zeta_duration_sum(l: usize) -> f64 {
    (l as f64 - 1.0) / ZETA3 + 0.3399
}

/// Exact duration sum `Σ_{j=1}^{L−1} (Σ_{l<j} 1/(j−l)³)^{−1}`.
pub fn duration_sum(l: usize) -> f64 {
    let mut h = 0.0;
    let mut total = 0.0;
    for j in 1..l {
        h += (j as f64).powi(-3);
        total += 1.0 / h;
    }
    total
}

/// Longest chain whose Control-Not sequence fits inside `T₂` (Hadamard
/// duration neglected).
pub fn max_chain_length(t2: f64, cfg: &ChainConfig) -> Result<ChainLengthBudget> {
    if !(t2 > 0.0 && t2.is_finite()) {
        return Err(invalid(format!("T2 must be positive, got {t2}")));
    }
    cfg.validate()?;
    let rhs = cfg.coupling.abs() * t2 / (PI * cfg.spacing.powi(3) * cfg.sqrt_4k2m1());
    // The running inverse-cube sum is accumulated in increasing j. Terms
    // beyond j ~ 10⁵ change it by less than 1 ulp.
    let mut l_max = 1;
    let mut sum = 0.0;
    let mut h = 0.0;
    loop {
        let j = l_max;
        h += (j as f64).powi(-3);
        let next = sum + 1.0 / h;
        if next > rhs {
            break;
        }
        sum = next;
        l_max += 1;
    }
    let zeta_l_max = if rhs < zeta_duration_sum(1) {
        1
    } else {
        ((rhs - 0.3399) * ZETA3).floor() as usize + 1
    };
    Ok(ChainLengthBudget {
        rhs,
        l_max,
        exact_sum: sum,
        zeta_sum: zeta_duration_sum(l_max),
        zeta_l_max,
    })
}
