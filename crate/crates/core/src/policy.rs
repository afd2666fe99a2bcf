//! Arm-selection policies and regret accounting.
//!
//! [`PolicyKind::MixingLinucb`] plays round-robin for the first `d` rounds and
//! afterwards picks the arm maximising the UCB of the confidence set built
//! from the first `t − d` observations. The other kinds are baselines:
//! OFUL with the i.i.d. radius, greedy ridge, uniform random, and the oracle.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::confidence::{build_iid_set, DelayedDesign, EllipsoidSet, RadiusParams};
use crate::error::{Error, Result};
use crate::noise::MixingProfile;
use crate::numerics::{dot, norm2};

/// Slack allowed on `‖x‖₂ ≤ 1` for arms.
pub const ARM_NORM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    MixingLinucb { params: RadiusParams },
    IidOful { bound: f64, lambda: f64, delta: f64 },
    Greedy { lambda: f64 },
    UniformRandom,
    Oracle,
}

/// Arm played during the first `d` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmupRule {
    /// Index `(t − 1) mod K`.
    #[default]
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    #[serde(default)]
    pub warmup: WarmupRule,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            warmup: WarmupRule::RoundRobin,
        }
    }

    /// Feedback delay used by the policy (1 for the baselines).
    pub fn delay(&self) -> usize {
        match &self.kind {
            PolicyKind::MixingLinucb { params } => params.delay,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PolicyKind::MixingLinucb { .. } => "mixing_linucb",
            PolicyKind::IidOful { .. } => "iid_oful",
            PolicyKind::Greedy { .. } => "greedy",
            PolicyKind::UniformRandom => "uniform_random",
            PolicyKind::Oracle => "oracle",
        }
    }
}

/// `d` from the analytic mixing envelope and horizon `T`.
///
/// Geometric `(C, τ)`: `⌈τ·log(B·C·T/p)⌉`; algebraic `(C, r)`: `⌈C·T^{1/(1+r)}⌉`;
/// no mixing: 1. The result is clamped to `[1, T − 1]` (to 1 when `T = 1`).
pub fn choose_delay(profile: &MixingProfile, horizon: usize, bound: f64, dim: usize) -> Result<usize> {
    if horizon < 1 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let t = horizon as f64;
    let raw = match profile {
        MixingProfile::None => 1.0,
        MixingProfile::Geometric { c, tau } => tau * (bound * c * t / dim as f64).ln(),
        MixingProfile::Algebraic { c, r } => c * t.powf(1.0 / (1.0 + r)),
        MixingProfile::Tabulated { .. } => {
            return Err(Error::InvalidParameter(
                "delay tuning needs an analytic (C, tau) or (C, r) envelope".into(),
            ))
        }
    };
    let upper = (horizon.saturating_sub(1)).max(1) as f64;
    Ok(snap_ceil(raw).clamp(1.0, upper) as usize)
}

/// `⌈x⌉`, treating values within 1e-9 of an integer as that integer.
fn snap_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// One arm choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub index: usize,
    /// UCB of the chosen arm, for optimistic policies after warm-up.
    pub ucb: Option<f64>,
}

/// A live policy for one replication.
#[derive(Debug, Clone)]
pub struct Policy {
    spec: PolicySpec,
    design: DelayedDesign,
    theta_star: Vec<f64>,
    rng: ChaCha8Rng,
    current: Option<EllipsoidSet>,
}

impl Policy {
    /// `theta_star` is read only by the oracle; `rng` only by uniform random.
    pub fn new(spec: PolicySpec, dim: usize, theta_star: &[f64], rng: ChaCha8Rng) -> Result<Self> {
        let ridge = match &spec.kind {
            PolicyKind::MixingLinucb { params } => {
                params.validate()?;
                if params.dim != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: params.dim,
                    });
                }
                params.lambda
            }
            PolicyKind::IidOful { lambda, .. } | PolicyKind::Greedy { lambda } => *lambda,
            PolicyKind::UniformRandom | PolicyKind::Oracle => 1.0,
        };
        Ok(Self {
            design: DelayedDesign::new(dim, ridge, spec.delay())?,
            spec,
            theta_star: theta_star.to_vec(),
            rng,
            current: None,
        })
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    pub fn delay(&self) -> usize {
        self.design.delay()
    }

    /// Confidence set used at the most recent optimistic decision.
    pub fn current_set(&self) -> Option<&EllipsoidSet> {
        self.current.as_ref()
    }

    /// Lagged design statistics (the `t − d` prefix at decision time `t`).
    pub fn design(&self) -> &DelayedDesign {
        &self.design
    }

    /// Chooses an arm at round `t` (1-based). Ties go to the lowest index.
    pub fn select_arm(&mut self, t: usize, arms: &[Vec<f64>]) -> Result<Decision> {
        validate_arms(arms)?;
        if t <= self.delay() && !matches!(self.spec.kind, PolicyKind::Oracle | PolicyKind::UniformRandom) {
            return Ok(Decision {
                index: match self.spec.warmup {
                    WarmupRule::RoundRobin => (t - 1) % arms.len(),
                },
                ucb: None,
            });
        }
        match &self.spec.kind {
            PolicyKind::MixingLinucb { params } => {
                let stale = self.current.as_ref().is_none_or(|s| s.t != t - params.delay);
                if stale {
                    self.current = Some(self.design.delayed_view(params, t)?);
                }
                let set = self.current.as_ref().expect("set built above");
                optimistic_choice(set, arms)
            }
            PolicyKind::IidOful { bound, delta, .. } => {
                let set = build_iid_set(self.design.stats(), *bound, *delta)?;
                let decision = optimistic_choice(&set, arms)?;
                self.current = Some(set);
                Ok(decision)
            }
            PolicyKind::Greedy { .. } => {
                let est = self.design.stats().ridge_estimate()?;
                Ok(Decision {
                    index: argmax(arms.iter().map(|x| dot(&est, x))),
                    ucb: None,
                })
            }
            PolicyKind::UniformRandom => Ok(Decision {
                index: self.rng.random_range(0..arms.len()),
                ucb: None,
            }),
            PolicyKind::Oracle => Ok(Decision {
                index: argmax(arms.iter().map(|x| dot(&self.theta_star, x))),
                ucb: None,
            }),
        }
    }

    /// Feeds back the reward of the round just played.
    pub fn observe(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.design.push(x, y)
    }
}

fn validate_arms(arms: &[Vec<f64>]) -> Result<()> {
    if arms.is_empty() {
        return Err(Error::InvalidParameter("empty arm set".into()));
    }
    for (i, x) in arms.iter().enumerate() {
        let n = norm2(x);
        if !n.is_finite() || n > 1.0 + ARM_NORM_SLACK {
            return Err(Error::InvalidParameter(format!("arm {i} has norm {n} > 1")));
        }
    }
    Ok(())
}

fn optimistic_choice(set: &EllipsoidSet, arms: &[Vec<f64>]) -> Result<Decision> {
    let values = arms.iter().map(|x| set.ucb_value(x)).collect::<Result<Vec<_>>>()?;
    let index = argmax(values.iter().copied());
    Ok(Decision {
        index,
        ucb: Some(values[index]),
    })
}

/// First index of the maximum.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Per-round and cumulative regret of one replication.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    /// `R_t = max_x ⟨θ*, x⟩ − ⟨θ*, X_t⟩`.
    pub instantaneous: Vec<f64>,
    /// `Reg(t) = Σ_{s≤t} R_s`.
    pub cumulative: Vec<f64>,
    /// `⟨θ*, X_t*⟩`.
    pub optimal_values: Vec<f64>,
    /// Per-round minimum gap over arms different from `X_t*` (∞ if none).
    pub gaps: Vec<f64>,
}

impl RegretTrace {
    pub fn record_round(&mut self, theta_star: &[f64], arms: &[Vec<f64>], chosen: usize) -> f64 {
        let values: Vec<f64> = arms.iter().map(|x| dot(theta_star, x)).collect();
        let best = argmax(values.iter().copied());
        let r = values[best] - values[chosen];
        let gap = arms
            .iter()
            .zip(&values)
            .filter(|(x, _)| *x != &arms[best])
            .map(|(_, v)| values[best] - v)
            .fold(f64::INFINITY, f64::min);
        let total = self.total() + r;
        self.instantaneous.push(r);
        self.cumulative.push(total);
        self.optimal_values.push(values[best]);
        self.gaps.push(gap);
        r
    }

    pub fn len(&self) -> usize {
        self.instantaneous.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instantaneous.is_empty()
    }

    /// `Reg(T)` for the rounds recorded so far.
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// `Δ = min_t gap_t`, when at least one round had two distinct arms.
    pub fn min_gap(&self) -> Option<f64> {
        let g = self.gaps.iter().copied().fold(f64::INFINITY, f64::min);
        g.is_finite().then_some(g)
    }
}

fn check_horizon(params: &RadiusParams, horizon: usize) -> Result<()> {
    params.validate()?;
    if horizon <= params.delay {
        return Err(Error::InvalidParameter(format!(
            "bound needs T > d (T = {horizon}, d = {})",
            params.delay
        )));
    }
    Ok(())
}

fn bound_parts(params: &RadiusParams, horizon: usize) -> Result<(f64, f64)> {
    check_horizon(params, horizon)?;
    let (d, p, b, t) = (params.delay as f64, params.dim as f64, params.bound, horizon as f64);
    let warmup = 2.0 * d * b;
    let scale = 8.0 * d * p * (b * b).max(params.radius_sq(horizon)?) * (1.0 + b * b * t / (d * p)).ln();
    Ok((warmup, scale))
}

/// `2dB + sqrt(8·d·p·T·max(B², β_T²)·log(1 + B²T/(dp)))`.
pub fn worst_case_bound(params: &RadiusParams, horizon: usize) -> Result<f64> {
    let (warmup, scale) = bound_parts(params, horizon)?;
    Ok(warmup + (scale * horizon as f64).sqrt())
}

/// `2dB + (8dp/Δ)·max(B², β_T²)·log(1 + B²T/(dp))`.
pub fn gap_bound(params: &RadiusParams, horizon: usize, gap: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::InvalidParameter(format!("gap must be positive, got {gap}")));
    }
    let (warmup, scale) = bound_parts(params, horizon)?;
    Ok(warmup + scale / gap)
}

/// One row of the per-round decision log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub t: usize,
    pub chosen: usize,
    pub ucb: Option<f64>,
    pub regret: f64,
    pub cumulative: f64,
}

/// CSV with columns `t,chosen_index,ucb_of_chosen,R_t,Reg_t` (empty UCB during warm-up).
pub fn write_decisions_csv<W: Write>(mut out: W, rows: &[DecisionRow]) -> std::io::Result<()> {
    writeln!(out, "t,chosen_index,ucb_of_chosen,R_t,Reg_t")?;
    for r in rows {
        let ucb = r.ucb.map(|u| u.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.t, r.chosen, ucb, r.regret, r.cumulative)?;
    }
    Ok(())
}
