//! Two-level analytic propagator: every pair of basis states differing only in
//! the target bit evolves under its own detuned Rabi unitary.

use num_complex::Complex64;

use super::frame::excitation_phases;
use crate::model::SpinSystem;
use crate::protocol::Pulse;

/// `sin(x)/x` with the removable singularity filled in.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Rotating-frame 2×2 unitary for a pair with detuning `delta` (`E_q − E_p − ν`),
/// Rabi frequency `rabi`, phase `phase`, duration `tau`, without the common
/// phase `e^{−icτ}`. Returned row-major as `[u_pp, u_pq, u_qp, u_qq]`.
pub fn rabi_unitary(delta: f64, rabi: f64, phase: f64, tau: f64) -> [Complex64; 4] {
    let lambda = delta.hypot(rabi);
    let half = 0.5 * lambda * tau;
    let c = half.cos();
    // (2/λ)·sin(λτ/2)
    let s = tau * sinc(half);
    let i = Complex64::i();
    let diag_p = Complex64::new(c, 0.5 * s * delta);
    let diag_q = Complex64::new(c, -0.5 * s * delta);
    let off = i * (0.5 * s * rabi);
    [
        diag_p,
        off * Complex64::from_polar(1.0, phase),
        off * Complex64::from_polar(1.0, -phase),
        diag_q,
    ]
}

/// Advances Schrödinger-picture amplitudes over one pulse starting at `start`.
pub fn propagate(sys: &SpinSystem, pulse: &Pulse, amplitudes: &mut [Complex64], start: f64) {
    let qubits = sys.len();
    let j = pulse.target;
    let bit = 1usize << j;
    let nu = pulse.frequency;
    let tau = pulse.duration;
    let into_frame = excitation_phases(qubits, nu * start);
    let out_of_frame = excitation_phases(qubits, -nu * (start + tau));
    let global = Complex64::from_polar(1.0, -sys.zeeman_offset() * tau);

    for (p, a) in amplitudes.iter_mut().enumerate() {
        *a *= into_frame[p.count_ones() as usize];
    }
    for p in 0..amplitudes.len() {
        if p & bit != 0 {
            continue;
        }
        let q = p | bit;
        let d_p = sys.reduced_energy(p) - nu * p.count_ones() as f64;
        let delta = sys.flip_energy(p, j) - nu;
        let centre = d_p + 0.5 * delta;
        let u = rabi_unitary(delta, pulse.rabi, pulse.phase, tau);
        let common = global * Complex64::from_polar(1.0, -centre * tau);
        let (bp, bq) = (amplitudes[p], amplitudes[q]);
        amplitudes[p] = common * (u[0] * bp + u[1] * bq);
        amplitudes[q] = common * (u[2] * bp + u[3] * bq);
    }
    for (p, a) in amplitudes.iter_mut().enumerate() {
        *a *= out_of_frame[p.count_ones() as usize];
    }
}
