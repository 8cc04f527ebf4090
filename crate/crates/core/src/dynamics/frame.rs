//! Rotating-frame Hamiltonian of a single rectangular pulse and its exact
//! propagator by dense diagonalization.
//!
//! With `B_p = A_p·e^{iν M_p t}` (`M_p` the number of excited spins in `p`)
//! the drive matrix elements become static and the pulse Hamiltonian is
//! time independent: diagonal `E_p − ν M_p`, and `−(Ω/2)e^{−iφ}` between
//! states that differ by one excitation.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::{Mat, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::SpinSystem;
use crate::protocol::Pulse;

/// Largest register the exact propagator accepts (16384² matrix).
pub const EXACT_QUBIT_LIMIT: usize = 14;

/// Hermitian `2^N × 2^N` pulse Hamiltonian in the rotating frame.
#[derive(Debug, Clone)]
pub struct RotatingFrameMatrix {
    qubits: usize,
    // Diagonal minus `shift`; keeps the eigenproblem well scaled.
    reduced_diagonal: Vec<f64>,
    shift: f64,
    coupling: Complex64,
}

impl RotatingFrameMatrix {
    pub fn new(sys: &SpinSystem, pulse: &Pulse) -> Self {
        let qubits = sys.len();
        let reduced_diagonal = (0..sys.dimension())
            .map(|p| sys.reduced_energy(p) - pulse.frequency * p.count_ones() as f64)
            .collect();
        Self {
            qubits,
            reduced_diagonal,
            shift: sys.zeeman_offset(),
            coupling: -0.5 * pulse.rabi * Complex64::from_polar(1.0, -pulse.phase),
        }
    }

    pub fn dimension(&self) -> usize {
        self.reduced_diagonal.len()
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// `E_p − ν M_p`.
    pub fn diagonal(&self, p: usize) -> f64 {
        self.reduced_diagonal[p] + self.shift
    }

    /// Matrix element `⟨row|H̃|col⟩`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        if row == col {
            return Complex64::new(self.diagonal(row), 0.0);
        }
        let diff = row ^ col;
        if diff.count_ones() != 1 {
            return Complex64::new(0.0, 0.0);
        }
        if row & diff != 0 {
            self.coupling
        } else {
            self.coupling.conj()
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let n = self.dimension();
        let mut m = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                m.push(self.entry(r, c));
            }
        }
        m
    }

    /// Number of nonzero entries strictly above the diagonal.
    pub fn upper_nonzeros(&self) -> usize {
        if self.coupling == Complex64::new(0.0, 0.0) {
            return 0;
        }
        self.qubits * (self.dimension() / 2)
    }
}

/// `exp(−iH̃τ)` for one pulse, stored as a real eigendecomposition.
///
/// The phase `φ` is removed by the diagonal gauge `D = diag(e^{−iφ M_p})`,
/// `H̃(φ) = D·H̃(0)·D†`, so only the real symmetric `H̃(0)` is diagonalized.
#[derive(Debug, Clone)]
pub struct PulsePropagator {
    qubits: usize,
    eigenvalues: Vec<f64>,
    // Column-major eigenvectors.
    vectors: Vec<f64>,
    shift: f64,
    frequency: f64,
    phase: f64,
    duration: f64,
}

impl PulsePropagator {
    pub fn new(sys: &SpinSystem, pulse: &Pulse) -> Result<Self> {
        let qubits = sys.len();
        if qubits > EXACT_QUBIT_LIMIT {
            return Err(Error::TooLarge {
                what: "exact propagator",
                qubits,
                limit: EXACT_QUBIT_LIMIT,
            });
        }
        let frame = RotatingFrameMatrix::new(sys, pulse);
        let n = frame.dimension();
        let off = -0.5 * pulse.rabi;
        let mut a = Mat::<f64>::zeros(n, n);
        for p in 0..n {
            a[(p, p)] = frame.reduced_diagonal[p];
            for l in 0..qubits {
                let q = p | 1 << l;
                if q != p {
                    // Lower triangle only.
                    a[(q, p)] = off;
                }
            }
        }
        let mut s = Diag::<f64>::zeros(n);
        let mut u = Mat::<f64>::zeros(n, n);
        let mut buf = MemBuffer::new(self_adjoint_evd_scratch::<f64>(
            n,
            ComputeEigenvectors::Yes,
            Par::Seq,
            Default::default(),
        ));
        self_adjoint_evd(
            a.as_ref(),
            s.as_mut(),
            Some(u.as_mut()),
            Par::Seq,
            MemStack::new(&mut buf),
            Default::default(),
        )
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
        let eigenvalues = s.column_vector().iter().copied().collect();
        let mut vectors = Vec::with_capacity(n * n);
        for k in 0..n {
            vectors.extend(u.col(k).iter().copied());
        }
        Ok(Self {
            qubits,
            eigenvalues,
            vectors,
            shift: frame.shift,
            frequency: pulse.frequency,
            phase: pulse.phase,
            duration: pulse.duration,
        })
    }

    /// Advances Schrödinger-picture amplitudes from `start` to `start + τ`.
    pub fn apply(&self, amplitudes: &mut [Complex64], start: f64) {
        let n = self.eigenvalues.len();
        debug_assert_eq!(amplitudes.len(), n);
        let into_frame = excitation_phases(self.qubits, self.frequency * start + self.phase);
        let out_of_frame = excitation_phases(
            self.qubits,
            -(self.frequency * (start + self.duration) + self.phase),
        );

        for (p, a) in amplitudes.iter_mut().enumerate() {
            *a *= into_frame[p.count_ones() as usize];
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let col = &self.vectors[k * n..(k + 1) * n];
            let (mut re, mut im) = (0.0, 0.0);
            for (u, a) in col.iter().zip(amplitudes.iter()) {
                re += u * a.re;
                im += u * a.im;
            }
            let rot = Complex64::from_polar(1.0, -(self.eigenvalues[k] + self.shift) * self.duration);
            *c = Complex64::new(re, im) * rot;
        }
        amplitudes.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for (k, c) in coeffs.iter().enumerate() {
            let col = &self.vectors[k * n..(k + 1) * n];
            for (u, a) in col.iter().zip(amplitudes.iter_mut()) {
                a.re += u * c.re;
                a.im += u * c.im;
            }
        }
        for (p, a) in amplitudes.iter_mut().enumerate() {
            *a *= out_of_frame[p.count_ones() as usize];
        }
    }
}

/// `e^{iθm}` for `m = 0..=qubits`.
pub(crate) fn excitation_phases(qubits: usize, theta: f64) -> Vec<Complex64> {
    (0..=qubits)
        .map(|m| Complex64::from_polar(1.0, theta * m as f64))
        .collect()
}
