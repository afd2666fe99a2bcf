//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! p = 2
//! K = 10
//! T = 2000
//! B = 1
//! delta = 0.05
//! lambda = 1            # default 1/B²
//! policy.kind = mixing_linucb
//! noise.kind = markov
//! noise.params = 1.0, 0.1
//! delay.mode = auto     # or fixed:<n>
//! ```
//!
//! See [`KEYS`] for the full list.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confidence::{MeanShiftMode, RadiusParams};
use crate::error::{Error, Result};
use crate::noise::{MixingProfile, NoiseProcess, NoiseSpec};
use crate::numerics::norm2;
use crate::policy::{choose_delay, PolicyKind, PolicySpec, ARM_NORM_SLACK};
use crate::rng::{stream_rng, Stream};

/// Recognised keys.
pub const KEYS: &[&str] = &[
    "p",
    "K",
    "T",
    "B",
    "delta",
    "lambda",
    "reps",
    "seed",
    "policy.kind",
    "noise.kind",
    "noise.params",
    "delay.mode",
    "radius.profile",
    "radius.mean_shift",
    "arms.fixed",
    "theta_star",
    "sweep.T",
    "sweep.policies",
    "verify.spa_rounds",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    MixingLinucb,
    IidOful,
    Greedy,
    UniformRandom,
    Oracle,
}

impl PolicyName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MixingLinucb => "mixing_linucb",
            Self::IidOful => "iid_oful",
            Self::Greedy => "greedy",
            Self::UniformRandom => "uniform_random",
            Self::Oracle => "oracle",
        }
    }
}

impl FromStr for PolicyName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mixing_linucb" => Self::MixingLinucb,
            "iid_oful" => Self::IidOful,
            "greedy" => Self::Greedy,
            "uniform_random" => Self::UniformRandom,
            "oracle" => Self::Oracle,
            _ => return Err(Error::Config(format!("unknown policy `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayMode {
    /// Tuned from the mixing envelope and the horizon.
    Auto,
    Fixed(usize),
}

/// Source of `φ_d` in the confidence radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileChoice {
    /// Exact coefficients of the configured noise.
    Certified,
    /// Analytic envelope of the configured noise.
    Envelope,
    /// `φ ≡ 0` regardless of the noise.
    None,
    Explicit(MixingProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub arms: usize,
    pub horizon: usize,
    pub bound: f64,
    pub delta: f64,
    /// `None` means `1/B²`.
    pub lambda: Option<f64>,
    pub policy: PolicyName,
    pub noise: NoiseSpec,
    pub delay: DelayMode,
    pub profile: ProfileChoice,
    pub mean_shift: MeanShiftMode,
    pub replications: usize,
    pub seed: u64,
    pub fixed_arms: Option<Vec<Vec<f64>>>,
    pub theta_star: Option<Vec<f64>>,
    pub sweep_horizons: Vec<usize>,
    pub sweep_policies: Vec<PolicyName>,
    /// Rounds replayed through the forecaster game by the verifier.
    pub verify_spa_rounds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            arms: 10,
            horizon: 1000,
            bound: 1.0,
            delta: 0.05,
            lambda: None,
            policy: PolicyName::MixingLinucb,
            noise: NoiseSpec::MarkovTwoState {
                amplitude: 1.0,
                flip_prob: 0.1,
            },
            delay: DelayMode::Auto,
            profile: ProfileChoice::Certified,
            mean_shift: MeanShiftMode::BPlusOne,
            replications: 100,
            seed: 0,
            fixed_arms: None,
            theta_star: None,
            sweep_horizons: vec![1000, 2000, 4000, 8000],
            sweep_policies: Vec::new(),
            verify_spa_rounds: 30,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_noise(kind: &str, params: &str) -> Result<NoiseSpec> {
    let nums = || parse_list::<f64>("noise.params", params);
    let spec = match kind {
        "zero" => NoiseSpec::Zero,
        "iid_gaussian" => NoiseSpec::IidGaussian,
        "markov" => match nums()?.as_slice() {
            [a, q] => NoiseSpec::MarkovTwoState {
                amplitude: *a,
                flip_prob: *q,
            },
            _ => return Err(Error::Config("markov noise needs `noise.params = a, q`".into())),
        },
        "superposed" => {
            let mut weights = Vec::new();
            let mut flip_probs = Vec::new();
            for pair in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (w, q) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Config("superposed noise needs `w:q` pairs".into()))?;
                weights.push(parse_num("noise.params", w)?);
                flip_probs.push(parse_num("noise.params", q)?);
            }
            NoiseSpec::SuperposedChains { weights, flip_probs }
        }
        "dyadic" => match nums()?.as_slice() {
            [k, r] if *k >= 1.0 && k.fract() == 0.0 => NoiseSpec::Dyadic {
                levels: *k as usize,
                rate: *r,
            },
            _ => return Err(Error::Config("dyadic noise needs `noise.params = K, r`".into())),
        },
        _ => return Err(Error::Config(format!("unknown noise kind `{kind}`"))),
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

fn parse_profile(v: &str) -> Result<ProfileChoice> {
    let bad = || Error::Config(format!("`radius.profile`: cannot parse `{v}`"));
    Ok(match v {
        "certified" => ProfileChoice::Certified,
        "envelope" => ProfileChoice::Envelope,
        "none" => ProfileChoice::None,
        _ => {
            let (kind, args) = v.split_once(':').ok_or_else(bad)?;
            let xs = parse_list::<f64>("radius.profile", args)?;
            let profile = match (kind, xs.as_slice()) {
                ("geometric", [c, tau]) => MixingProfile::geometric(*c, *tau),
                ("algebraic", [c, r]) => MixingProfile::algebraic(*c, *r),
                _ => return Err(bad()),
            };
            ProfileChoice::Explicit(profile.map_err(|e| Error::Config(e.to_string()))?)
        }
    })
}

fn parse_delay(v: &str) -> Result<DelayMode> {
    match v {
        "auto" => Ok(DelayMode::Auto),
        _ => match v.strip_prefix("fixed:") {
            Some(n) => Ok(DelayMode::Fixed(parse_num("delay.mode", n)?)),
            None => Err(Error::Config(format!(
                "`delay.mode` must be auto or fixed:<n>, got `{v}`"
            ))),
        },
    }
}

fn parse_vectors(key: &str, v: &str) -> Result<Vec<Vec<f64>>> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_list(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        let mut noise_kind = None;
        let mut noise_params = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            match key {
                "p" => cfg.dim = parse_num(key, value)?,
                "K" => cfg.arms = parse_num(key, value)?,
                "T" => cfg.horizon = parse_num(key, value)?,
                "B" => cfg.bound = parse_num(key, value)?,
                "delta" => cfg.delta = parse_num(key, value)?,
                "lambda" => cfg.lambda = Some(parse_num(key, value)?),
                "reps" => cfg.replications = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "policy.kind" => cfg.policy = value.parse()?,
                "noise.kind" => noise_kind = Some(value.to_string()),
                "noise.params" => noise_params = value.to_string(),
                "delay.mode" => cfg.delay = parse_delay(value)?,
                "radius.profile" => cfg.profile = parse_profile(value)?,
                "radius.mean_shift" => {
                    cfg.mean_shift = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?
                }
                "arms.fixed" => cfg.fixed_arms = Some(parse_vectors(key, value)?),
                "theta_star" => cfg.theta_star = Some(parse_list(key, value)?),
                "sweep.T" => cfg.sweep_horizons = parse_list(key, value)?,
                "sweep.policies" => {
                    cfg.sweep_policies = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
                "verify.spa_rounds" => cfg.verify_spa_rounds = parse_num(key, value)?,
                _ => unreachable!("key list checked above"),
            }
        }
        match noise_kind {
            Some(kind) => cfg.noise = parse_noise(&kind, &noise_params)?,
            None if !noise_params.is_empty() => {
                return Err(Error::Config("`noise.params` given without `noise.kind`".into()))
            }
            None => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks ranges and shapes; every failure is a [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dim == 0 || self.arms == 0 || self.horizon == 0 || self.replications == 0 {
            return bad("p, K, T and reps must be positive".into());
        }
        if !(self.bound > 0.0 && self.bound.is_finite()) {
            return bad(format!("B must be positive, got {}", self.bound));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lambda must be positive, got {l}"));
            }
        }
        if let DelayMode::Fixed(0) = self.delay {
            return bad("fixed delay must be at least 1".into());
        }
        self.noise.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(arms) = &self.fixed_arms {
            if arms.is_empty() {
                return bad("`arms.fixed` is empty".into());
            }
            for x in arms {
                if x.len() != self.dim {
                    return bad(format!("fixed arm has {} coordinates, p = {}", x.len(), self.dim));
                }
                if !(norm2(x) <= 1.0 + ARM_NORM_SLACK) {
                    return bad("fixed arms must lie in the unit ball".into());
                }
            }
        }
        if let Some(theta) = &self.theta_star {
            if theta.len() != self.dim {
                return bad(format!("theta_star has {} coordinates, p = {}", theta.len(), self.dim));
            }
            if !(norm2(theta) <= self.bound) {
                return bad("theta_star must satisfy ‖θ*‖ ≤ B".into());
            }
        }
        if self.sweep_horizons.is_empty() || self.sweep_horizons.contains(&0) {
            return bad("`sweep.T` needs positive horizons".into());
        }
        Ok(())
    }

    /// `λ`, defaulting to `1/B²`.
    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(1.0 / (self.bound * self.bound))
    }

    /// Arms per round (the fixed set's size in gap mode).
    pub fn arms_per_round(&self) -> usize {
        self.fixed_arms.as_ref().map_or(self.arms, Vec::len)
    }

    fn noise_process(&self) -> Result<NoiseProcess> {
        NoiseProcess::new(self.noise.clone(), stream_rng(self.seed, 0, Stream::Noise))
    }

    /// Analytic envelope used to tune the delay.
    pub fn envelope(&self) -> Result<MixingProfile> {
        if let ProfileChoice::Explicit(p) = &self.profile {
            return Ok(p.clone());
        }
        self.noise_process()?
            .envelope()
            .map_err(|e| Error::Config(format!("delay.mode = auto: {e}")))
    }

    /// `φ` used in the confidence radius.
    pub fn radius_profile(&self) -> Result<MixingProfile> {
        match &self.profile {
            ProfileChoice::Certified => self.noise_process()?.certified_profile(),
            ProfileChoice::Envelope => self.envelope(),
            ProfileChoice::None => Ok(MixingProfile::None),
            ProfileChoice::Explicit(p) => Ok(p.clone()),
        }
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve_delay(&self) -> Result<usize> {
        match self.delay {
            DelayMode::Fixed(d) => Ok(d),
            DelayMode::Auto => choose_delay(&self.envelope()?, self.horizon, self.bound, self.dim),
        }
    }

    pub fn radius_params(&self) -> Result<RadiusParams> {
        let params = RadiusParams::new(
            self.bound,
            self.resolve_delay()?,
            self.delta,
            self.radius_profile()?,
            self.dim,
        )?
        .with_lambda(self.lambda())
        .with_mean_shift(self.mean_shift);
        params.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(params)
    }

    pub fn policy_spec(&self, params: &RadiusParams) -> PolicySpec {
        PolicySpec::new(match self.policy {
            PolicyName::MixingLinucb => PolicyKind::MixingLinucb { params: params.clone() },
            PolicyName::IidOful => PolicyKind::IidOful {
                bound: self.bound,
                lambda: self.lambda(),
                delta: self.delta,
            },
            PolicyName::Greedy => PolicyKind::Greedy { lambda: self.lambda() },
            PolicyName::UniformRandom => PolicyKind::UniformRandom,
            PolicyName::Oracle => PolicyKind::Oracle,
        })
    }
}
