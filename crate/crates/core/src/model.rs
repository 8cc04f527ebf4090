//! Basis encoding, spin-system geometry, energies and observables.
//!
//! Basis index `p` has bit `l` equal to the occupation `n_l` of spin `l`.
//! Bit value 0 is the spin state |0⟩ with `s_z = +1/2`, bit value 1 is |1⟩
//! with `s_z = -1/2`. Index 0 is the ground state |00…0⟩ and index
//! `2^L - 1` is the fully excited state |11…1⟩.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Riemann ζ(3).
pub const ZETA3: f64 = 1.202_056_903_159_594_3;

/// Reduced Planck constant in erg·s.
pub const HBAR_CGS: f64 = 1.054_571_817e-27;

/// Bohr magneton in erg/G.
pub const BOHR_MAGNETON_CGS: f64 = 9.274_010_078_3e-21;

/// Free-electron g-factor magnitude used for the electron moment.
pub const ELECTRON_G: f64 = 2.0;

/// Tolerance for `Σ|C_p|² = 1`.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Converts an ordinary frequency in MHz to angular frequency in rad/μs.
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Converts an angular frequency in rad/μs to ordinary frequency in MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// `Σ_{m=1}^{n} 1/m³`. Zero for `n = 0`.
pub fn inverse_cube_sum(n: usize) -> f64 {
    // Summed smallest-first for accuracy at large n.
    (1..=n).rev().map(|m| (m as f64).powi(-3)).sum()
}

/// `s_z` eigenvalue of spin `l` in basis state `p`.
pub fn sz(p: usize, l: usize, qubits: usize) -> Result<f64> {
    if l >= qubits {
        return Err(invalid(format!("site {l} out of range for {qubits} qubits")));
    }
    if qubits < usize::BITS as usize && p >> qubits != 0 {
        return Err(invalid(format!(
            "basis index {p} out of range for {qubits} qubits"
        )));
    }
    Ok(spin_z(p, l))
}

#[inline]
pub(crate) fn spin_z(p: usize, l: usize) -> f64 {
    if p >> l & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}

/// Secular dipole coupling constant at 1 nm, `μ²(3cos²Θ − 1)/(ħ·(1 nm)³)`, in rad/s.
///
/// `mu` is the magnetic moment in erg/G. Divide by 10⁶ for rad/μs.
pub fn coupling_constant(mu: f64, theta: f64) -> f64 {
    let nm_cubed = 1e-7f64.powi(3);
    mu * mu * (3.0 * theta.cos().powi(2) - 1.0) / (HBAR_CGS * nm_cubed)
}

/// Electron-electron coupling at 1 nm in rad/μs for chain-to-field angle `theta`.
pub fn electron_coupling(theta: f64) -> f64 {
    coupling_constant(ELECTRON_G * BOHR_MAGNETON_CGS, theta) * 1e-6
}

/// Physical z magnetization `½·M·μ·R·L` of `chains` identical chains.
pub fn physical_magnetization(m: f64, mu: f64, chains: usize, qubits: usize) -> f64 {
    0.5 * m * mu * chains as f64 * qubits as f64
}

/// Parameters of one ideal chain. Frequencies in rad/μs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Number of qubits `L`.
    pub qubits: usize,
    /// Larmor frequency of qubit 0.
    pub omega0: f64,
    /// Larmor frequency increment between neighbors, `δω`.
    pub delta_omega: f64,
    /// Dipole coupling constant `J` at 1 nm.
    pub coupling: f64,
    /// Neighbor spacing `A` in nm.
    pub spacing: f64,
    /// Integer `K` of the 2πK condition.
    pub k: u32,
    /// Hadamard Rabi frequency `Ω_H`; `None` selects `α·|δω|`.
    pub omega_h: Option<f64>,
    /// Chain-to-field angle `Θ` in rad. Informational once `coupling` is set.
    pub theta: f64,
}

impl ChainConfig {
    /// Electron spins 2.2 nm apart with `|J|/2π ≈ 52 MHz`, `K = 1`,
    /// `δω/2π = 141 MHz` and `ω₀/2π = 1 GHz`.
    pub fn electron(qubits: usize) -> Self {
        Self {
            qubits,
            omega0: mhz(1000.0),
            delta_omega: mhz(141.0),
            coupling: -mhz(52.0),
            spacing: 2.2,
            k: 1,
            omega_h: None,
            theta: PI / 2.0,
        }
    }

    pub fn with_qubits(mut self, qubits: usize) -> Self {
        self.qubits = qubits;
        self
    }

    /// Sets `|δω|` so that [`ChainConfig::alpha`] equals `alpha`, keeping the sign of `δω`.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        let sign = if self.delta_omega < 0.0 { -1.0 } else { 1.0 };
        self.delta_omega = sign * self.nearest_coupling().abs() / (self.sqrt_4k2m1() * alpha);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits < 1 {
            return Err(invalid("chain needs at least one qubit"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(invalid(format!(
                "spacing A must be positive, got {}",
                self.spacing
            )));
        }
        if self.k < 1 {
            return Err(invalid("K must be at least 1"));
        }
        if self.delta_omega == 0.0 || !self.delta_omega.is_finite() {
            return Err(invalid("delta_omega must be finite and nonzero"));
        }
        if !self.coupling.is_finite() || !self.omega0.is_finite() {
            return Err(invalid("coupling and omega0 must be finite"));
        }
        if let Some(w) = self.omega_h {
            if !(w > 0.0 && w.is_finite()) {
                return Err(invalid(format!("omega_h must be positive, got {w}")));
            }
        }
        let ratio = self.delta_omega.abs() / self.nearest_coupling().abs();
        if ratio < 10.0 {
            log::warn!(
                "|δω|/(|J|/A³) = {ratio:.3} < 10: two-level approximation is outside its validity range"
            );
        }
        Ok(())
    }

    /// Nearest-neighbor coupling `J/A³`.
    pub fn nearest_coupling(&self) -> f64 {
        self.coupling / self.spacing.powi(3)
    }

    /// `√(4K² − 1)`.
    pub fn sqrt_4k2m1(&self) -> f64 {
        let k = self.k as f64;
        (4.0 * k * k - 1.0).sqrt()
    }

    /// Master error parameter `α = |J|/(√(4K²−1)·A³·|δω|)`.
    pub fn alpha(&self) -> f64 {
        self.nearest_coupling().abs() / (self.sqrt_4k2m1() * self.delta_omega.abs())
    }

    /// Hadamard Rabi frequency.
    pub fn omega_h(&self) -> f64 {
        self.omega_h
            .unwrap_or_else(|| self.alpha() * self.delta_omega.abs())
    }

    /// Larmor frequency of site `l` in the ideal chain.
    pub fn larmor(&self, l: usize) -> f64 {
        self.omega0 + l as f64 * self.delta_omega
    }
}

/// One spin: position in nm and Larmor frequency in rad/μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spin {
    pub x: f64,
    pub y: f64,
    pub larmor: f64,
}

/// Planar register of spins with secular dipole couplings `J/r³`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    spins: Vec<Spin>,
    coupling_at_1nm: f64,
    // Row-major L×L, zero diagonal.
    couplings: Vec<f64>,
}

impl SpinSystem {
    pub fn new(spins: Vec<Spin>, coupling_at_1nm: f64) -> Result<Self> {
        let n = spins.len();
        if n == 0 {
            return Err(invalid("spin system must contain at least one spin"));
        }
        let mut couplings = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let r = (spins[a].x - spins[b].x).hypot(spins[a].y - spins[b].y);
                if !(r > 0.0) {
                    return Err(invalid(format!("spins {a} and {b} coincide")));
                }
                let c = coupling_at_1nm / (r * r * r);
                couplings[a * n + b] = c;
                couplings[b * n + a] = c;
            }
        }
        Ok(Self {
            spins,
            coupling_at_1nm,
            couplings,
        })
    }

    /// The undisplaced chain: `x_l = l·A`, `y = 0`, `ω_l = ω₀ + l·δω`.
    pub fn from_chain(cfg: &ChainConfig) -> Result<Self> {
        cfg.validate()?;
        let spins = (0..cfg.qubits)
            .map(|l| Spin {
                x: l as f64 * cfg.spacing,
                y: 0.0,
                larmor: cfg.larmor(l),
            })
            .collect();
        Self::new(spins, cfg.coupling)
    }

    /// `chains` parallel copies of the ideal chain spaced `chain_spacing` nm
    /// apart along y. Spin `l` of chain `r` has index `r·L + l`.
    pub fn chain_array(cfg: &ChainConfig, chains: usize, chain_spacing: f64) -> Result<Self> {
        cfg.validate()?;
        if chains == 0 || !(chain_spacing > 0.0) {
            return Err(invalid("chain array needs ≥ 1 chain and positive spacing"));
        }
        let spins = (0..chains)
            .flat_map(|r| {
                (0..cfg.qubits).map(move |l| Spin {
                    x: l as f64 * cfg.spacing,
                    y: r as f64 * chain_spacing,
                    larmor: cfg.larmor(l),
                })
            })
            .collect();
        Self::new(spins, cfg.coupling)
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn dimension(&self) -> usize {
        1usize << self.spins.len()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn coupling_at_1nm(&self) -> f64 {
        self.coupling_at_1nm
    }

    pub fn larmor(&self, l: usize) -> f64 {
        self.spins[l].larmor
    }

    /// Pair coupling `J/r³` between spins `a` and `b` (zero for `a == b`).
    pub fn pair_coupling(&self, a: usize, b: usize) -> f64 {
        self.couplings[a * self.spins.len() + b]
    }

    /// Copy with every Larmor frequency shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.spins {
            s.larmor += offset;
        }
        out
    }

    fn check_index(&self, p: usize) -> Result<()> {
        if p >= self.dimension() {
            return Err(invalid(format!(
                "basis index {p} out of range for {} qubits",
                self.len()
            )));
        }
        Ok(())
    }

    /// `E_p = −Σ ω_l s_l − Σ_{l<k} (J/r³) s_l s_k`.
    pub fn state_energy(&self, p: usize) -> Result<f64> {
        self.check_index(p)?;
        Ok(self.energy(p))
    }

    pub(crate) fn energy(&self, p: usize) -> f64 {
        self.zeeman_offset() + self.reduced_energy(p)
    }

    /// `E_p` for every basis state.
    pub fn energies(&self) -> Vec<f64> {
        (0..self.dimension()).map(|p| self.energy(p)).collect()
    }

    /// Energy of |00…0⟩ from the Zeeman term alone, `−½Σω_l`.
    pub(crate) fn zeeman_offset(&self) -> f64 {
        -0.5 * self.spins.iter().map(|s| s.larmor).sum::<f64>()
    }

    /// `E_p − zeeman_offset()`: `Σ n_l ω_l` plus the Ising term.
    pub(crate) fn reduced_energy(&self, p: usize) -> f64 {
        let n = self.spins.len();
        let mut e = 0.0;
        for l in 0..n {
            if p >> l & 1 == 1 {
                e += self.spins[l].larmor;
            }
        }
        e + self.ising(p)
    }

    fn ising(&self, p: usize) -> f64 {
        let n = self.spins.len();
        let mut e = 0.0;
        for l in 0..n {
            let sl = spin_z(p, l);
            let row = &self.couplings[l * n..(l + 1) * n];
            for (k, &c) in row.iter().enumerate().skip(l + 1) {
                e -= c * sl * spin_z(p, k);
            }
        }
        e
    }

    /// `E_{p'} − E_p` where `p'` is `p` with spin `j` flipped, evaluated
    /// directly from the local field rather than as a difference of energies.
    pub fn flip_energy(&self, p: usize, j: usize) -> f64 {
        let n = self.spins.len();
        let row = &self.couplings[j * n..(j + 1) * n];
        let mut field = self.spins[j].larmor;
        for (l, &c) in row.iter().enumerate() {
            if l != j {
                field += c * spin_z(p, l);
            }
        }
        if p >> j & 1 == 0 {
            field
        } else {
            -field
        }
    }
}

/// Amplitudes over the `2^N` product basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn ground(qubits: usize) -> Self {
        Self::basis(qubits, 0)
    }

    pub fn basis(qubits: usize, p: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amplitudes[p] = Complex64::new(1.0, 0.0);
        Self { qubits, amplitudes }
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(invalid(format!("amplitude count {len} is not a power of two")));
        }
        Ok(Self {
            qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// `(|00…0⟩ + e^{iφ}|11…1⟩)/√2`.
    pub fn entangled(qubits: usize, phase: f64) -> Self {
        let mut s = Self::ground(qubits);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        s.amplitudes[0] = Complex64::new(h, 0.0);
        let last = s.amplitudes.len() - 1;
        s.amplitudes[last] += Complex64::from_polar(h, phase);
        if last == 0 {
            // One qubit: both branches are the same basis state.
            let norm = s.amplitudes[0].norm();
            s.amplitudes[0] /= norm;
        }
        s
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn probability(&self, p: usize) -> f64 {
        self.amplitudes[p].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(())
    }

    /// Dimensionless magnetization `M = (2/L) Σ_p |C_p|² Σ_l s_l(p)`.
    pub fn magnetization(&self) -> f64 {
        magnetization(self)
    }

    /// Error probability `|½ − |C_0|²| + |½ − |C_{2^L−1}|²|`.
    pub fn error_probability(&self) -> f64 {
        error_probability(self)
    }

    /// Basis states sorted by descending probability, at most `count`.
    pub fn leading_states(&self, count: usize) -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = self.amplitudes.iter().map(|a| a.norm_sqr()).enumerate().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.truncate(count);
        v
    }
}

/// Magnetization of a single basis state: `(L − 2·popcount(p))/L`.
pub fn basis_magnetization(p: usize, qubits: usize) -> f64 {
    (qubits as f64 - 2.0 * p.count_ones() as f64) / qubits as f64
}

pub fn magnetization(state: &QuantumState) -> f64 {
    let l = state.qubits;
    state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(p, a)| a.norm_sqr() * basis_magnetization(p, l))
        .sum()
}

pub fn error_probability(state: &QuantumState) -> f64 {
    let last = state.amplitudes.len() - 1;
    (0.5 - state.probability(0)).abs() + (0.5 - state.probability(last)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn sz_bit_convention() {
        assert_eq!(sz(0, 2, 3).unwrap(), 0.5);
        assert_eq!(sz(0b111, 1, 3).unwrap(), -0.5);
        assert_eq!(sz(0b001, 0, 3).unwrap(), -0.5);
        assert_eq!(sz(0b001, 1, 3).unwrap(), 0.5);
        assert!(sz(0, 3, 3).is_err());
        assert!(sz(8, 0, 3).is_err());
    }

    #[test]
    fn single_spin_zeeman_energy() {
        let cfg = ChainConfig::electron(1);
        let sys = SpinSystem::from_chain(&cfg).unwrap();
        assert!(close(sys.state_energy(0).unwrap(), -cfg.omega0 / 2.0, 1e-15));
        assert!(sys.state_energy(2).is_err());
    }

    #[test]
    fn two_spin_ground_energy() {
        let cfg = ChainConfig::electron(2);
        let sys = SpinSystem::from_chain(&cfg).unwrap();
        let a3 = cfg.spacing.powi(3);
        let want = -(cfg.larmor(0) + cfg.larmor(1)) / 2.0 - cfg.coupling / (4.0 * a3);
        assert!(close(sys.state_energy(0).unwrap(), want, 1e-14));
    }

    #[test]
    fn complement_flips_zeeman_keeps_ising() {
        let cfg = ChainConfig::electron(5);
        let sys = SpinSystem::from_chain(&cfg).unwrap();
        let full = sys.dimension() - 1;
        for p in 0..sys.dimension() {
            let q = full ^ p;
            let zeeman = |p: usize| -(0..5).map(|l| sys.larmor(l) * spin_z(p, l)).sum::<f64>();
            let ising_p = sys.energy(p) - zeeman(p);
            let ising_q = sys.energy(q) - zeeman(q);
            assert!(close(ising_p, ising_q, 1e-9));
            assert!(close(zeeman(p), -zeeman(q), 1e-12));
        }
    }

    #[test]
    fn flip_energy_matches_energy_difference() {
        let cfg = ChainConfig::electron(6);
        let sys = SpinSystem::from_chain(&cfg).unwrap();
        for p in 0..sys.dimension() {
            for j in 0..6 {
                let direct = sys.energy(p ^ (1 << j)) - sys.energy(p);
                assert!(close(sys.flip_energy(p, j), direct, 1e-10));
            }
        }
    }

    #[test]
    fn electron_coupling_is_about_52_mhz() {
        let j = electron_coupling(PI / 2.0);
        assert!(j < 0.0);
        assert!((to_mhz(j).abs() - 52.0).abs() < 0.5, "{}", to_mhz(j));
    }

    #[test]
    fn coupling_angle_dependence() {
        let magic = (1.0f64 / 3.0).sqrt().acos();
        assert!(electron_coupling(magic).abs() < 1e-9);
        let perp = electron_coupling(PI / 2.0);
        assert!(close(electron_coupling(0.0), -2.0 * perp, 1e-14));
    }

    #[test]
    fn magnetization_of_reference_states() {
        for l in 1..7 {
            assert!(close(QuantumState::ground(l).magnetization(), 1.0, 1e-15));
            assert!(close(
                QuantumState::basis(l, (1 << l) - 1).magnetization(),
                -1.0,
                1e-15
            ));
        }
        for l in 2..7 {
            assert!(QuantumState::entangled(l, 0.3).magnetization().abs() < 1e-15);
        }
    }

    #[test]
    fn error_probability_reference_states() {
        assert!(QuantumState::entangled(6, 1.0).error_probability() < 1e-15);
        assert!(close(QuantumState::ground(6).error_probability(), 1.0, 1e-15));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 64];
        amps[0] = Complex64::new(h, 0.0);
        amps[0b000111] = Complex64::new(h, 0.0);
        let s = QuantumState::from_amplitudes(amps).unwrap();
        assert!(close(s.error_probability(), 0.5, 1e-15));
    }

    #[test]
    fn chain_geometry_reproduces_inverse_cubes() {
        let cfg = ChainConfig::electron(10);
        let sys = SpinSystem::from_chain(&cfg).unwrap();
        let nn = cfg.nearest_coupling();
        assert_eq!(sys.pair_coupling(0, 1), nn);
        for l in 0..10 {
            for k in l + 1..10 {
                let want = nn / ((k - l) as f64).powi(3);
                assert!(((sys.pair_coupling(l, k) - want) / want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chain_array_inter_chain_kernel() {
        let cfg = ChainConfig::electron(4);
        let d = 20.0;
        let sys = SpinSystem::chain_array(&cfg, 2, d).unwrap();
        let chi = cfg.spacing / d;
        for j in 0..4 {
            for l in 0..4 {
                let dl = (j as f64 - l as f64).powi(2);
                let want = cfg.coupling / (d.powi(3) * (1.0 + chi * chi * dl).powf(1.5));
                let got = sys.pair_coupling(j, 4 + l);
                assert!(((got - want) / want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coincident_spins_rejected() {
        let s = Spin {
            x: 0.0,
            y: 0.0,
            larmor: 1.0,
        };
        assert!(SpinSystem::new(vec![s, s], 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ChainConfig::electron(3);
        assert!(cfg.validate().is_ok());
        cfg.spacing = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ChainConfig::electron(3);
        cfg.k = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ChainConfig::electron(3);
        cfg.delta_omega = 0.0;
        assert!(cfg.validate().is_err());
        assert!(ChainConfig::electron(0).validate().is_err());
    }

    #[test]
    fn with_alpha_roundtrip() {
        let cfg = ChainConfig::electron(4).with_alpha(0.037);
        assert!(close(cfg.alpha(), 0.037, 1e-14));
        assert!(cfg.delta_omega > 0.0);
        assert!(close(cfg.omega_h(), cfg.alpha() * cfg.delta_omega, 1e-14));
    }
}
