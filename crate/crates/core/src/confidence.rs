//! Anytime-valid ellipsoidal confidence sequence under mixing noise.
//!
//! `C_t = {θ ∈ B(B) : ‖θ − θ̂_t‖²_{V_t} ≤ β_t²}` with `θ̂_t` the ball-constrained
//! least-squares estimate, `V_t = Λ_t + λ·Id`, and
//!
//! ```text
//! β_t² = d·p·log((B+1)²·e·max(dp, t+d)/(dp)) + 4λB² + 2·t·φ_d·M + 2·d·log(d/δ)
//! ```
//!
//! where `M` is the mean-shift multiplier (default `B + 1`).

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::MixingProfile;
use crate::numerics::{dot, norm2, DesignStats, SpdMatrix};

/// Multiplier of `t·φ_d` in the mixing term of the radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanShiftMode {
    /// `M = B`.
    B,
    /// `M = B + 1` (default).
    #[default]
    BPlusOne,
    /// `M = 2B + 1`.
    TwoBPlusOne,
}

impl MeanShiftMode {
    pub fn multiplier(self, bound: f64) -> f64 {
        match self {
            Self::B => bound,
            Self::BPlusOne => bound + 1.0,
            Self::TwoBPlusOne => 2.0 * bound + 1.0,
        }
    }
}

impl std::str::FromStr for MeanShiftMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" | "b" => Ok(Self::B),
            "B_plus_1" | "b_plus_one" | "B+1" => Ok(Self::BPlusOne),
            "twoB_plus_1" | "two_b_plus_one" | "2B+1" => Ok(Self::TwoBPlusOne),
            _ => Err(Error::Config(format!("unknown mean shift mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusParams {
    /// Norm bound `B` on the unknown parameter.
    pub bound: f64,
    /// Ridge `λ`.
    pub lambda: f64,
    pub delay: usize,
    pub delta: f64,
    pub profile: MixingProfile,
    pub dim: usize,
    pub mean_shift: MeanShiftMode,
}

impl RadiusParams {
    /// Parameters with the defaults `λ = 1/B²` and `M = B + 1`.
    pub fn new(bound: f64, delay: usize, delta: f64, profile: MixingProfile, dim: usize) -> Result<Self> {
        let params = Self {
            bound,
            lambda: 1.0 / (bound * bound),
            delay,
            delta,
            profile,
            dim,
            mean_shift: MeanShiftMode::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_mean_shift(mut self, mode: MeanShiftMode) -> Self {
        self.mean_shift = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bound > 0.0 && self.bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "B must be positive, got {}",
                self.bound
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.delay < 1 {
            return Err(Error::InvalidParameter("delay must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(())
    }

    /// Squared radius `β_t²` for `t ≥ 1` absorbed observations.
    pub fn radius_sq(&self, t: usize) -> Result<f64> {
        self.validate()?;
        if t < 1 {
            return Err(Error::InvalidParameter("radius needs t >= 1".into()));
        }
        let (d, p, b) = (self.delay as f64, self.dim as f64, self.bound);
        let dp = d * p;
        let t = t as f64;
        let regret = dp * ((b + 1.0).powi(2) * std::f64::consts::E * dp.max(t + d) / dp).ln();
        let ridge = 4.0 * self.lambda * b * b;
        let mixing = 2.0 * t * self.profile.phi(self.delay) * self.mean_shift.multiplier(b);
        let union = 2.0 * d * (d / self.delta).ln();
        Ok(regret + ridge + mixing + union)
    }
}

pub fn radius_sq(params: &RadiusParams, t: usize) -> Result<f64> {
    params.radius_sq(t)
}

/// `{θ : ‖θ − center‖²_shape ≤ radius_sq}`, optionally intersected with `B(B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSet {
    pub center: Vec<f64>,
    pub shape: SpdMatrix,
    pub radius_sq: f64,
    pub t: usize,
}

impl EllipsoidSet {
    /// `‖θ − center‖²_V`.
    pub fn mahalanobis_sq(&self, theta: &[f64]) -> Result<f64> {
        let diff: Vec<f64> = theta.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.shape.quad_form(&diff)
    }

    /// `θ ∈ C_t`: inside the ball of radius `bound` and inside the ellipsoid.
    pub fn contains(&self, theta: &[f64], bound: f64) -> bool {
        norm2(theta) <= bound && self.contains_relaxed(theta)
    }

    /// Membership in the pure ellipsoid (ball constraint dropped).
    pub fn contains_relaxed(&self, theta: &[f64]) -> bool {
        matches!(self.mahalanobis_sq(theta), Ok(m) if m <= self.radius_sq)
    }

    /// `max ⟨θ, x⟩` over the pure ellipsoid: `⟨θ̂, x⟩ + β·‖x‖_{V⁻¹}`.
    pub fn ucb_value(&self, x: &[f64]) -> Result<f64> {
        let width = self.shape.quad_form_inv(x)?.sqrt();
        Ok(dot(&self.center, x) + self.radius_sq.sqrt() * width)
    }
}

/// Builds `C_t` from design statistics with `count ≥ 1`.
pub fn build_set(stats: &DesignStats, params: &RadiusParams) -> Result<EllipsoidSet> {
    if stats.count() == 0 {
        return Err(Error::InvalidParameter(
            "confidence set needs at least one observation".into(),
        ));
    }
    if stats.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            got: stats.dim(),
        });
    }
    Ok(EllipsoidSet {
        center: stats.constrained_least_squares(params.bound)?,
        shape: stats.gram().clone(),
        radius_sq: params.radius_sq(stats.count())?,
        t: stats.count(),
    })
}

/// `log det(Λ_t/λ + Id) + λB² + 2·log(1/δ)`: the radius for conditionally
/// centred noise, paired with the ridge estimate as centre.
pub fn iid_baseline_radius_sq(stats: &DesignStats, bound: f64, lambda: f64, delta: f64) -> f64 {
    let log_det = stats.gram().log_det() - stats.dim() as f64 * lambda.ln();
    log_det + lambda * bound * bound + 2.0 * (1.0 / delta).ln()
}

/// Baseline OFUL set: ridge centre, `V_t` shape, i.i.d. radius. Valid for `count = 0`.
pub fn build_iid_set(stats: &DesignStats, bound: f64, delta: f64) -> Result<EllipsoidSet> {
    Ok(EllipsoidSet {
        center: stats.ridge_estimate()?,
        shape: stats.gram().clone(),
        radius_sq: iid_baseline_radius_sq(stats, bound, stats.ridge(), delta),
        t: stats.count(),
    })
}

/// Design statistics fed with a lag of `delay` rounds.
///
/// After `n` calls to [`DelayedDesign::push`] the live statistics hold the
/// first `n + 1 − delay` observations, which is exactly the `t − d` prefix
/// visible when acting at round `t = n + 1`.
#[derive(Debug, Clone)]
pub struct DelayedDesign {
    stats: DesignStats,
    pending: VecDeque<(Vec<f64>, f64)>,
    delay: usize,
    pushed: usize,
}

impl DelayedDesign {
    pub fn new(dim: usize, ridge: f64, delay: usize) -> Result<Self> {
        if delay < 1 {
            return Err(Error::InvalidParameter("delay must be at least 1".into()));
        }
        Ok(Self {
            stats: DesignStats::new(dim, ridge)?,
            pending: VecDeque::with_capacity(delay),
            delay,
            pushed: 0,
        })
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    /// Observations recorded so far (visible or not).
    pub fn pushed(&self) -> usize {
        self.pushed
    }

    /// The lagged statistics.
    pub fn stats(&self) -> &DesignStats {
        &self.stats
    }

    /// Records the observation of the round just played.
    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.pending.push_back((x.to_vec(), y));
        self.pushed += 1;
        while self.pending.len() >= self.delay {
            let (x, y) = self.pending.pop_front().expect("non-empty queue");
            self.stats.update(&x, y)?;
        }
        Ok(())
    }

    /// `C_{t−d}` for acting at round `now = t`; requires `t > d` and `t − 1` pushes.
    pub fn delayed_view(&self, params: &RadiusParams, now: usize) -> Result<EllipsoidSet> {
        if now <= self.delay {
            return Err(Error::InvalidParameter(format!(
                "round {now} is inside the warm-up of delay {}",
                self.delay
            )));
        }
        if self.stats.count() != now - self.delay {
            return Err(Error::InvalidParameter(format!(
                "statistics hold {} observations, round {now} needs {}",
                self.stats.count(),
                now - self.delay
            )));
        }
        build_set(&self.stats, params)
    }
}

/// One row of the per-round confidence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRow {
    pub t: usize,
    pub beta_sq: f64,
    pub covered: bool,
    pub center_norm: f64,
}

/// CSV with columns `t,beta_sq,coverage_indicator,center_norm`.
pub fn write_confidence_csv<W: Write>(mut out: W, rows: &[ConfidenceRow]) -> std::io::Result<()> {
    writeln!(out, "t,beta_sq,coverage_indicator,center_norm")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.t, r.beta_sq, u8::from(r.covered), r.center_norm)?;
    }
    Ok(())
}
