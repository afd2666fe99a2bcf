//! Mixing sub-Gaussian noise processes with exact mixing envelopes.
//!
//! Dependence is produced by symmetric two-state (±1) Markov chains. A chain
//! that flips with probability `q` forgets its state geometrically:
//! `E[s_t | s_{t−d}] = (1 − 2q)^d · s_{t−d}`. A single chain therefore gives
//! geometric mixing with exact coefficients, and a weighted superposition of
//! chains on dyadic time scales gives algebraic decay. All chain-based outputs
//! lie in `[−1, 1]` and are 1-sub-Gaussian by Hoeffding's lemma.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sub-Gaussian scale of every generator in this module.
pub const SIGMA: f64 = 1.0;

/// Default number of lags stored by [`NoiseProcess::certified_profile`].
pub const CERTIFIED_TABLE_LEN: usize = 1 << 14;

/// Mixing coefficients `φ = (φ_d)_{d≥1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingProfile {
    /// Conditionally centred noise, `φ_d = 0`.
    None,
    /// `φ_d = C·e^{−d/τ}`.
    Geometric { c: f64, tau: f64 },
    /// `φ_d = C·d^{−r}`.
    Algebraic { c: f64, r: f64 },
    /// `values[d − 1] = φ_d`; lags past the table reuse the last entry.
    Tabulated { values: Vec<f64> },
}

impl MixingProfile {
    pub fn geometric(c: f64, tau: f64) -> Result<Self> {
        if !(c > 0.0 && tau > 0.0 && c.is_finite() && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "geometric mixing needs C > 0 and tau > 0, got C={c}, tau={tau}"
            )));
        }
        Ok(Self::Geometric { c, tau })
    }

    pub fn algebraic(c: f64, r: f64) -> Result<Self> {
        if !(c > 0.0 && r > 0.0 && c.is_finite() && r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "algebraic mixing needs C > 0 and r > 0, got C={c}, r={r}"
            )));
        }
        Ok(Self::Algebraic { c, r })
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty mixing table".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "mixing coefficients must be finite and non-negative".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "mixing coefficients must be non-increasing".into(),
            ));
        }
        Ok(Self::Tabulated { values })
    }

    /// `φ_d` for lag `d ≥ 1` (lag 0 is evaluated as lag 1).
    pub fn phi(&self, d: usize) -> f64 {
        let d = d.max(1);
        match self {
            Self::None => 0.0,
            Self::Geometric { c, tau } => c * (-(d as f64) / tau).exp(),
            Self::Algebraic { c, r } => c * (d as f64).powf(-r),
            Self::Tabulated { values } => values[(d - 1).min(values.len() - 1)],
        }
    }

    /// Whether the profile carries analytic `(C, τ)` or `(C, r)` parameters.
    pub fn has_envelope(&self) -> bool {
        matches!(self, Self::None | Self::Geometric { .. } | Self::Algebraic { .. })
    }
}

/// Configuration of a noise generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// `ε_t ≡ 0`.
    Zero,
    IidGaussian,
    /// Single ±a chain flipping with probability `flip_prob`.
    MarkovTwoState {
        amplitude: f64,
        flip_prob: f64,
    },
    /// `ε_t = Σ_k w_k·s_k(t)` over independent chains.
    SuperposedChains {
        weights: Vec<f64>,
        flip_probs: Vec<f64>,
    },
    /// Superposition with `w_k ∝ 2^{−rate·k}` (normalised to sum 1) and
    /// `q_k = 2^{−k−1}` for `k = 1..=levels`.
    Dyadic {
        levels: usize,
        rate: f64,
    },
}

impl NoiseSpec {
    /// `(weights, flip_probs)` of the chain levels.
    fn levels(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::Zero | Self::IidGaussian => (vec![], vec![]),
            Self::MarkovTwoState { amplitude, flip_prob } => (vec![*amplitude], vec![*flip_prob]),
            Self::SuperposedChains { weights, flip_probs } => (weights.clone(), flip_probs.clone()),
            Self::Dyadic { levels, rate } => {
                let raw: Vec<f64> = (1..=*levels).map(|k| 2f64.powf(-rate * k as f64)).collect();
                let z: f64 = raw.iter().sum();
                let w = raw.iter().map(|v| v / z).collect();
                let q = (1..=*levels).map(|k| 2f64.powi(-(k as i32) - 1)).collect();
                (w, q)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            Self::Zero | Self::IidGaussian => Ok(()),
            Self::MarkovTwoState { amplitude, flip_prob } => {
                if !(*amplitude > 0.0 && *amplitude <= 1.0) {
                    return bad(format!("chain amplitude must lie in (0, 1], got {amplitude}"));
                }
                if !(0.0..=0.5).contains(flip_prob) {
                    return bad(format!("flip probability must lie in [0, 1/2], got {flip_prob}"));
                }
                Ok(())
            }
            Self::SuperposedChains { weights, flip_probs } => {
                if weights.is_empty() || weights.len() != flip_probs.len() {
                    return bad("superposed chains need equally many weights and flip probabilities".into());
                }
                if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() > 1.0 + 1e-12 {
                    return bad("chain weights must be non-negative with sum at most 1".into());
                }
                if flip_probs.iter().any(|q| !(0.0..=0.5).contains(q)) {
                    return bad("flip probabilities must lie in [0, 1/2]".into());
                }
                Ok(())
            }
            Self::Dyadic { levels, rate } => {
                if *levels == 0 || *levels > 60 || !(*rate > 0.0) {
                    return bad(format!(
                        "dyadic noise needs 1..=60 levels and rate > 0, got {levels}, {rate}"
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn is_chain_based(&self) -> bool {
        !matches!(self, Self::Zero | Self::IidGaussian)
    }
}

/// A live noise process: chain states plus its private random stream.
#[derive(Debug, Clone)]
pub struct NoiseProcess {
    spec: NoiseSpec,
    weights: Vec<f64>,
    flip_probs: Vec<f64>,
    states: Vec<i8>,
    rng: ChaCha8Rng,
}

impl NoiseProcess {
    /// Builds the process and draws chain states from their stationary law.
    pub fn new(spec: NoiseSpec, mut rng: ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let (weights, flip_probs) = spec.levels();
        let states = (0..weights.len())
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Ok(Self {
            spec,
            weights,
            flip_probs,
            states,
            rng,
        })
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn states(&self) -> &[i8] {
        &self.states
    }

    /// Overrides the hidden chain states (entries must be ±1).
    pub fn set_states(&mut self, states: &[i8]) -> Result<()> {
        if states.len() != self.states.len() || states.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidParameter("chain states must be ±1, one per level".into()));
        }
        self.states.copy_from_slice(states);
        Ok(())
    }

    /// Advances the hidden state one step and emits `ε_t`.
    pub fn next_noise(&mut self) -> f64 {
        match self.spec {
            NoiseSpec::Zero => 0.0,
            NoiseSpec::IidGaussian => self.rng.sample(StandardNormal),
            _ => {
                let mut eps = 0.0;
                for ((s, &q), &w) in self.states.iter_mut().zip(&self.flip_probs).zip(&self.weights) {
                    if q > 0.0 && self.rng.random::<f64>() < q {
                        *s = -*s;
                    }
                    eps += w * f64::from(*s);
                }
                eps
            }
        }
    }

    /// Exact `φ_d = Σ_k w_k·(1 − 2q_k)^d` for `d = 1..=len`.
    pub fn certified_profile_len(&self, len: usize) -> Result<MixingProfile> {
        if !self.spec.is_chain_based() {
            return Ok(MixingProfile::None);
        }
        if self.flip_probs.contains(&0.0) {
            return Err(Error::InvalidParameter(
                "a frozen chain (flip probability 0) does not mix".into(),
            ));
        }
        let values = (1..=len.max(1)).map(|d| self.exact_phi(d)).collect();
        MixingProfile::tabulated(values)
    }

    pub fn certified_profile(&self) -> Result<MixingProfile> {
        self.certified_profile_len(CERTIFIED_TABLE_LEN)
    }

    fn exact_phi(&self, d: usize) -> f64 {
        self.weights
            .iter()
            .zip(&self.flip_probs)
            .map(|(w, q)| w * (1.0 - 2.0 * q).powi(d as i32))
            .sum()
    }

    /// Analytic envelope used for delay tuning: geometric `(a, −1/ln(1−2q))`
    /// for a single chain, algebraic `(C, rate)` for the dyadic design, `None`
    /// profile for conditionally centred noise.
    pub fn envelope(&self) -> Result<MixingProfile> {
        match &self.spec {
            NoiseSpec::Zero | NoiseSpec::IidGaussian => Ok(MixingProfile::None),
            NoiseSpec::MarkovTwoState { amplitude, flip_prob } => {
                if *flip_prob == 0.0 {
                    return Err(Error::InvalidParameter("a frozen chain does not mix".into()));
                }
                if *flip_prob >= 0.5 {
                    return Ok(MixingProfile::None);
                }
                MixingProfile::geometric(*amplitude, -1.0 / (1.0 - 2.0 * flip_prob).ln())
            }
            NoiseSpec::Dyadic { rate, .. } => MixingProfile::algebraic(
                algebraic_envelope_constant(&self.weights, &self.flip_probs, *rate),
                *rate,
            ),
            NoiseSpec::SuperposedChains { .. } => Err(Error::InvalidParameter(
                "generic superposed chains have no analytic envelope".into(),
            )),
        }
    }

    /// `E[ε_t | F_{t−d}]` when the current hidden state is the state at `t − d`.
    pub fn conditional_mean_oracle(&self, d: usize) -> f64 {
        self.weights
            .iter()
            .zip(&self.flip_probs)
            .zip(&self.states)
            .map(|((w, q), s)| w * (1.0 - 2.0 * q).powi(d as i32) * f64::from(*s))
            .sum()
    }
}

/// Smallest `C` with `Σ_k w_k (1−2q_k)^d ≤ C·d^{−r}` for every `d ≥ 1`.
///
/// Each summand `d^r (1−2q_k)^d` increases up to `d = r / (−ln(1−2q_k))` and
/// decreases afterwards, so past the largest such turning point the whole
/// weighted sum `d^r φ_d` is decreasing and a finite scan finds the supremum.
pub fn algebraic_envelope_constant(weights: &[f64], flip_probs: &[f64], r: f64) -> f64 {
    let turning = flip_probs
        .iter()
        .filter(|&&q| q > 0.0 && q < 0.5)
        .map(|&q| r / -(1.0 - 2.0 * q).ln())
        .fold(1.0_f64, f64::max);
    let last = turning.ceil() as usize + 2;
    (1..=last)
        .map(|d| {
            let phi: f64 = weights
                .iter()
                .zip(flip_probs)
                .map(|(w, q)| w * (1.0 - 2.0 * q).powi(d as i32))
                .sum();
            phi * (d as f64).powf(r)
        })
        .fold(0.0, f64::max)
}

/// Writes a noise trace as CSV with columns `t,epsilon` (1-based `t`).
pub fn write_noise_csv<W: Write>(mut out: W, eps: &[f64]) -> std::io::Result<()> {
    writeln!(out, "t,epsilon")?;
    for (i, e) in eps.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, e)?;
    }
    Ok(())
}
