//! Seeded Monte Carlo over chain ensembles with randomly displaced qubits and
//! per-pulse field fluctuations.
//!
//! Every chain `i` of realization `r` draws from its own ChaCha8 stream
//! `(r << 32) | i` of the master seed, so results do not depend on the order
//! or the thread on which work items run. The field fluctuation is a single
//! global field, shared by all chains of a realization; it draws from stream
//! `FLUCTUATION_STREAM | r`.
//!
//! Chains with the same displacement pattern (and, when `v̄ > 0`, the same
//! realization) evolve identically, so each distinct pattern is simulated
//! once.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_protocol, Method, RunOptions};
use crate::error::{invalid, Result};
use crate::model::{ChainConfig, Spin, SpinSystem};
use crate::protocol::{entanglement_protocol, PulseSequence};

/// Generator and stream layout, echoed into output headers.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9); seed_from_u64(seed); \
chain stream (r<<32)|i; fluctuation stream 2^63|r";

const FLUCTUATION_STREAM: u64 = 1 << 63;
const MAX_REALIZATIONS: usize = 1 << 31;
const MAX_CHAINS: usize = u32::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Per-qubit displacement probability `ξ`.
    pub xi: f64,
    /// Displacement magnitude `|v_k|` in units of the spacing.
    pub v: f64,
    /// Field-fluctuation dispersion `v̄` in units of `δω`.
    pub v_bar: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            xi: 0.0,
            v: 0.0,
            v_bar: 0.0,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(invalid(format!("ξ must lie in [0, 1], got {}", self.xi)));
        }
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(invalid(format!("v must be finite and ≥ 0, got {}", self.v)));
        }
        if !(self.v_bar >= 0.0 && self.v_bar.is_finite()) {
            return Err(invalid(format!("v̄ must be finite and ≥ 0, got {}", self.v_bar)));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        (self.xi == 0.0 || self.v == 0.0) && self.v_bar == 0.0
    }
}

/// Stream of chain `chain` in realization `realization`.
pub fn chain_stream(seed: u64, realization: usize, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((realization as u64) << 32) | chain as u64);
    rng
}

/// Stream of the global field fluctuation of `realization`.
pub fn fluctuation_stream(seed: u64, realization: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(FLUCTUATION_STREAM | realization as u64);
    rng
}

/// Signed displacement direction per qubit: `+1`, `−1` or `0` (in place).
pub fn sample_displacements<R: Rng + ?Sized>(cfg: &ChainConfig, noise: &NoiseModel, rng: &mut R) -> Vec<i8> {
    (0..cfg.qubits)
        .map(|_| {
            // Two draws per qubit keeps the stream layout independent of ξ.
            let hit = rng.random::<f64>() < noise.xi;
            let up = rng.random::<bool>();
            match (hit, up) {
                (false, _) => 0,
                (true, true) => 1,
                (true, false) => -1,
            }
        })
        .collect()
}

/// Chain with qubit `k` moved by `shifts[k]·A` along the gradient and its
/// Larmor frequency moved by `shifts[k]·δω`. Couplings follow the positions.
pub fn displaced_chain(cfg: &ChainConfig, shifts: &[f64]) -> Result<SpinSystem> {
    cfg.validate()?;
    if shifts.len() != cfg.qubits {
        return Err(invalid(format!(
            "{} displacements for {} qubits",
            shifts.len(),
            cfg.qubits
        )));
    }
    if shifts.iter().any(|v| !v.is_finite()) {
        return Err(invalid("displacements must be finite"));
    }
    let spins = shifts
        .iter()
        .enumerate()
        .map(|(l, &v)| Spin {
            x: (l as f64 + v) * cfg.spacing,
            y: 0.0,
            larmor: cfg.larmor(l) + v * cfg.delta_omega,
        })
        .collect();
    SpinSystem::new(spins, cfg.coupling)
}

fn pattern_shifts(pattern: &[i8], v: f64) -> Vec<f64> {
    pattern.iter().map(|&d| d as f64 * v).collect()
}

/// One randomly displaced chain.
pub fn sample_chain<R: Rng + ?Sized>(
    cfg: &ChainConfig,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<SpinSystem> {
    noise.validate()?;
    let pattern = sample_displacements(cfg, noise, rng);
    displaced_chain(cfg, &pattern_shifts(&pattern, noise.v))
}

/// Per-pulse uniform Larmor offsets (rad/μs): `N(0, v̄)·δω` for each pulse.
pub fn sample_fluctuations<R: Rng + ?Sized>(
    seq: &PulseSequence,
    noise: &NoiseModel,
    delta_omega: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    noise.validate()?;
    let normal =
        Normal::new(0.0, noise.v_bar).map_err(|e| invalid(format!("fluctuation distribution: {e}")))?;
    Ok((0..seq.len()).map(|_| normal.sample(rng) * delta_omega).collect())
}

/// Outcome of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub realization: usize,
    pub chain: usize,
    pub displacements: Vec<i8>,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub m_mean: f64,
    pub m_stderr: f64,
    pub p_mean: f64,
    pub p_stderr: f64,
    pub realizations: usize,
    pub chains: usize,
    /// Per-realization chain averages `(M, P)`.
    pub realization_means: Vec<(f64, f64)>,
    /// Number of distinct simulations actually run.
    pub distinct_runs: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<ChainSample>,
}

/// Ensemble settings beyond the chain and the noise.
#[derive(Debug, Clone)]
pub struct EnsembleOptions {
    pub chains: usize,
    pub realizations: usize,
    pub method: Method,
    /// Pulse sequence; the ideal-chain protocol when `None`.
    pub sequence: Option<PulseSequence>,
    pub keep_samples: bool,
}

impl EnsembleOptions {
    pub fn new(chains: usize, realizations: usize, method: Method) -> Self {
        Self {
            chains,
            realizations,
            method,
            sequence: None,
            keep_samples: false,
        }
    }
}

/// `R` chains × `realizations` with the ideal protocol.
pub fn run_ensemble(
    cfg: &ChainConfig,
    noise: &NoiseModel,
    chains: usize,
    realizations: usize,
    method: Method,
) -> Result<EnsembleResult> {
    run_ensemble_with(cfg, noise, &EnsembleOptions::new(chains, realizations, method))
}

pub fn run_ensemble_with(
    cfg: &ChainConfig,
    noise: &NoiseModel,
    opts: &EnsembleOptions,
) -> Result<EnsembleResult> {
    cfg.validate()?;
    noise.validate()?;
    if opts.chains == 0 || opts.realizations == 0 {
        return Err(invalid("ensemble needs at least one chain and one realization"));
    }
    if opts.chains > MAX_CHAINS || opts.realizations > MAX_REALIZATIONS {
        return Err(invalid(format!(
            "ensemble size {}×{} exceeds the stream layout",
            opts.chains, opts.realizations
        )));
    }
    let seq = match &opts.sequence {
        Some(s) => s.clone(),
        None => entanglement_protocol(cfg)?,
    };

    let fluctuating = noise.v_bar > 0.0;
    let offsets: Vec<Option<Vec<f64>>> = (0..opts.realizations)
        .map(|r| {
            if fluctuating {
                let mut rng = fluctuation_stream(noise.seed, r);
                sample_fluctuations(&seq, noise, cfg.delta_omega, &mut rng).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;

    let patterns: Vec<Vec<i8>> = (0..opts.realizations * opts.chains)
        .into_par_iter()
        .map(|n| {
            let (r, i) = (n / opts.chains, n % opts.chains);
            sample_displacements(cfg, noise, &mut chain_stream(noise.seed, r, i))
        })
        .collect();

    // Without fluctuations every realization shares one cache key.
    let key_of = |r: usize| if fluctuating { r } else { 0 };
    let mut jobs: BTreeMap<(usize, &[i8]), usize> = BTreeMap::new();
    for (n, pat) in patterns.iter().enumerate() {
        let next = jobs.len();
        jobs.entry((key_of(n / opts.chains), pat.as_slice()))
            .or_insert(next);
    }
    let mut ordered: Vec<((usize, &[i8]), usize)> = jobs.iter().map(|(k, &v)| (*k, v)).collect();
    ordered.sort_by_key(|&(_, id)| id);
    log::info!(
        "ensemble: {} chains × {} realizations, {} distinct runs",
        opts.chains,
        opts.realizations,
        ordered.len()
    );

    let outcomes: Vec<(f64, f64)> = ordered
        .par_iter()
        .map(|&((key, pat), _)| {
            let sys = displaced_chain(cfg, &pattern_shifts(pat, noise.v))?;
            let mut run = RunOptions::new(opts.method);
            run.offsets = offsets[key].clone();
            let res = run_protocol(&sys, &seq, &run)?;
            Ok((res.magnetization, res.error_probability))
        })
        .collect::<Result<_>>()?;

    let mut realization_means = Vec::with_capacity(opts.realizations);
    let mut samples = Vec::new();
    for r in 0..opts.realizations {
        let (mut m_sum, mut p_sum) = (0.0, 0.0);
        for i in 0..opts.chains {
            let pat = &patterns[r * opts.chains + i];
            let id = jobs[&(key_of(r), pat.as_slice())];
            let (m, p) = outcomes[id];
            m_sum += m;
            p_sum += p;
            if opts.keep_samples {
                samples.push(ChainSample {
                    realization: r,
                    chain: i,
                    displacements: pat.clone(),
                    p,
                    m,
                });
            }
        }
        let n = opts.chains as f64;
        realization_means.push((m_sum / n, p_sum / n));
    }
    let (m_mean, m_stderr) = mean_and_stderr(realization_means.iter().map(|x| x.0));
    let (p_mean, p_stderr) = mean_and_stderr(realization_means.iter().map(|x| x.1));
    Ok(EnsembleResult {
        m_mean,
        m_stderr,
        p_mean,
        p_stderr,
        realizations: opts.realizations,
        chains: opts.chains,
        realization_means,
        distinct_runs: outcomes.len(),
        samples,
    })
}

/// Sample mean and its standard error (zero for a single value).
fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
