//! Independent reference: fixed-step RK4 integration of the time-dependent
//! Schrödinger equation with the lab-frame circular drive.
//!
//! The integration runs in the interaction picture of the static Hamiltonian,
//! `A_p = C_p·e^{−iE_p t}`, so the diagonal part is exact and only the drive
//! `V(t) = −(Ω/2)(e^{i(νt+φ)}σ⁻ + h.c.)` is stepped. No rotating frame is
//! used, which keeps the oracle independent of the propagators it checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::SpinSystem;
use crate::protocol::PulseSequence;

/// Largest register the oracle accepts.
pub const ORACLE_QUBIT_LIMIT: usize = 8;

/// Step-size controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Minimum steps per period of the drive, `2π/ν`.
    pub steps_per_drive_period: f64,
    /// Minimum steps per period of the fastest interaction-picture beat.
    pub steps_per_beat_period: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            steps_per_drive_period: 200.0,
            steps_per_beat_period: 200.0,
        }
    }
}

struct Transition {
    lower: usize,
    upper: usize,
    gap: f64,
}

/// Integrates `amplitudes` (Schrödinger picture at t = 0) through `seq`.
/// Returns the amplitudes at `seq.total_time()`.
pub fn integrate(
    sys: &SpinSystem,
    seq: &PulseSequence,
    amplitudes: &[Complex64],
    settings: OracleSettings,
) -> Result<Vec<Complex64>> {
    let qubits = sys.len();
    if qubits > ORACLE_QUBIT_LIMIT {
        return Err(Error::TooLarge {
            what: "ode oracle",
            qubits,
            limit: ORACLE_QUBIT_LIMIT,
        });
    }
    let n = sys.dimension();
    let mut transitions = Vec::with_capacity(qubits * n / 2);
    for p in 0..n {
        for l in 0..qubits {
            if p >> l & 1 == 0 {
                transitions.push(Transition {
                    lower: p,
                    upper: p | 1 << l,
                    gap: sys.flip_energy(p, l),
                });
            }
        }
    }

    // C(0) = A(0).
    let mut c: Vec<Complex64> = amplitudes.to_vec();
    let zero = Complex64::new(0.0, 0.0);
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut beat = vec![zero; transitions.len()];
    let mut half_step = vec![zero; transitions.len()];

    for (start, pulse) in seq.iter() {
        let detunings: Vec<f64> = transitions.iter().map(|t| t.gap - pulse.frequency).collect();
        let fastest = detunings.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let two_pi = std::f64::consts::TAU;
        let mut h_max = two_pi / (settings.steps_per_drive_period * pulse.frequency.abs());
        if fastest > 0.0 {
            h_max = h_max.min(two_pi / (settings.steps_per_beat_period * fastest));
        }
        let steps = (pulse.duration / h_max).ceil().max(1.0) as usize;
        let h = pulse.duration / steps as f64;
        let a = 0.5 * pulse.rabi;
        for (r, d) in half_step.iter_mut().zip(&detunings) {
            *r = Complex64::from_polar(1.0, 0.5 * d * h);
        }

        let anchor = |beat: &mut [Complex64], t: f64| {
            for (z, d) in beat.iter_mut().zip(&detunings) {
                *z = Complex64::from_polar(1.0, d * t - pulse.phase);
            }
        };
        let rhs = |beat: &[Complex64], c: &[Complex64], out: &mut [Complex64]| {
            out.iter_mut().for_each(|x| *x = zero);
            for (tr, z) in transitions.iter().zip(beat) {
                let w = Complex64::new(0.0, a) * z;
                out[tr.upper] += w * c[tr.lower];
                out[tr.lower] += Complex64::new(-w.re, w.im) * c[tr.upper];
            }
        };

        for step in 0..steps {
            let t = start + step as f64 * h;
            if step % 64 == 0 {
                anchor(&mut beat, t);
            }
            rhs(&beat, &c, &mut k1);
            for i in 0..n {
                tmp[i] = c[i] + 0.5 * h * k1[i];
            }
            for (z, r) in beat.iter_mut().zip(&half_step) {
                *z *= r;
            }
            rhs(&beat, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = c[i] + 0.5 * h * k2[i];
            }
            rhs(&beat, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = c[i] + h * k3[i];
            }
            for (z, r) in beat.iter_mut().zip(&half_step) {
                *z *= r;
            }
            rhs(&beat, &tmp, &mut k4);
            for i in 0..n {
                c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }

    let total = seq.total_time();
    Ok(c.iter()
        .enumerate()
        .map(|(p, x)| x * Complex64::from_polar(1.0, -sys.energy(p) * total))
        .collect())
}
