//! Sequential probability assignment with squared loss.
//!
//! An EWA forecaster with a uniform prior on the ball of radius `B + 1`
//! predicts each reward; its mixture log-loss is computed from normalising
//! constants by quadrature, so this module is limited to `p ≤ 3`. The
//! blocked variant runs `d` forecasters over interleaved rounds, which is
//! the delayed-feedback game behind the confidence radius.

pub mod quadrature;

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::confidence::MeanShiftMode;
use crate::error::{Error, Result};
use crate::noise::{MixingProfile, NoiseProcess};
use crate::numerics::{self, dot, norm2};
use quadrature::{ball_integral, ball_volume, Tolerance};

/// Largest dimension handled by the quadrature.
pub const MAX_DIM: usize = 3;
/// Relative accuracy requested for each normalising constant.
pub const QUAD_REL_TARGET: f64 = 1e-6;
/// A normalising constant whose error estimate exceeds this is rejected.
pub const QUAD_REL_FAIL: f64 = 1e-4;

/// A recorded sequence of contexts and rewards, with the parameter that
/// generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub theta_star: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl Trajectory {
    pub fn new(theta_star: Vec<f64>, xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        let dim = theta_star.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        numerics::check_finite(&theta_star, "theta_star")?;
        numerics::check_finite(&ys, "rewards")?;
        for x in &xs {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            numerics::check_finite(x, "context")?;
            if norm2(x) > 1.0 + 1e-9 {
                return Err(Error::InvalidParameter("context norm exceeds 1".into()));
            }
        }
        Ok(Self { theta_star, xs, ys })
    }

    /// Contexts uniform in the unit ball, rewards `⟨θ*, X⟩ + ε`.
    pub fn simulate<R: Rng>(theta_star: &[f64], rounds: usize, noise: &mut NoiseProcess, rng: &mut R) -> Result<Self> {
        let dim = theta_star.len();
        let mut xs = Vec::with_capacity(rounds);
        let mut ys = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            let x = uniform_in_ball(dim, rng);
            ys.push(dot(theta_star, &x) + noise.next_noise());
            xs.push(x);
        }
        Self::new(theta_star.to_vec(), xs, ys)
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }
}

fn uniform_in_ball<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm2(&g);
        if n > 0.0 {
            let r = rng.random::<f64>().powf(1.0 / dim as f64);
            return g.into_iter().map(|v| v * r / n).collect();
        }
    }
}

/// `½θᵀAθ − bᵀθ + c = Σ_s ½(⟨θ, X_s⟩ − Y_s)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticLossSum {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: f64,
    n: usize,
}

impl QuadraticLossSum {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            a: vec![0.0; dim * dim],
            b: vec![0.0; dim],
            c: 0.0,
            n: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `A = Σ X_s X_sᵀ`.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, x: &[f64], y: f64) {
        let p = self.dim;
        for i in 0..p {
            for j in 0..p {
                self.a[i * p + j] += x[i] * x[j];
            }
            self.b[i] += y * x[i];
        }
        self.c += 0.5 * y * y;
        self.n += 1;
    }

    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        let p = self.dim;
        let mut quad = 0.0;
        for i in 0..p {
            quad += theta[i] * dot(&self.a[i * p..(i + 1) * p], theta);
        }
        0.5 * quad - dot(&self.b, theta) + self.c
    }

    /// Minimiser over the ball of radius `radius`.
    pub fn minimizer(&self, radius: f64) -> Result<Vec<f64>> {
        numerics::constrained_least_squares(self.dim, &self.a, &self.b, radius)
    }
}

/// `ℓ(θ) = ½(⟨θ, x⟩ − y)²`.
pub fn squared_loss(theta: &[f64], x: &[f64], y: f64) -> f64 {
    let r = dot(theta, x) - y;
    0.5 * r * r
}

/// One EWA forecaster: density `∝ exp(−accumulated(θ))` on the ball of radius `B + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterState {
    pub prior_radius: f64,
    pub accumulated: QuadraticLossSum,
    /// 1-based.
    pub block_index: usize,
    log_z: f64,
    log_z_error: f64,
}

/// Value of `L_s(Q_s)` and the normalising constant after absorbing round `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureLoss {
    pub value: f64,
    /// Bound on `|value − exact|`.
    pub error: f64,
    pub log_z: f64,
    pub log_z_error: f64,
}

impl ForecasterState {
    pub fn new(dim: usize, bound: f64, block_index: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "quadrature supports 1 ≤ p ≤ {MAX_DIM}, got {dim}"
            )));
        }
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bound must be non-negative, got {bound}"
            )));
        }
        let prior_radius = bound + 1.0;
        Ok(Self {
            prior_radius,
            accumulated: QuadraticLossSum::new(dim),
            block_index,
            log_z: ball_volume(dim, prior_radius).ln(),
            log_z_error: 0.0,
        })
    }

    /// `log Z` for the losses absorbed so far.
    pub fn log_normaliser(&self) -> (f64, f64) {
        (self.log_z, self.log_z_error)
    }

    /// Plays one round: returns `L_s(Q_s)` and absorbs `(x, y)`.
    pub fn play(&mut self, x: &[f64], y: f64) -> Result<MixtureLoss> {
        let out = mixture_log_loss(self, x, y)?;
        self.accumulated.add(x, y);
        self.log_z = out.log_z;
        self.log_z_error = out.log_z_error;
        Ok(out)
    }
}

/// `log ∫_{‖θ‖≤R} exp(−q(θ)) dθ` with its error.
fn log_partition(q: &QuadraticLossSum, radius: f64) -> Result<(f64, f64)> {
    let dim = q.dim();
    if q.a().iter().all(|&v| v == 0.0) {
        return Ok((ball_volume(dim, radius).ln() - q.c(), 0.0));
    }
    let peak = q.minimizer(radius)?;
    let floor = q.evaluate(&peak);
    let g = |theta: &[f64]| (floor - q.evaluate(theta)).min(0.0).exp();
    let tol = Tolerance {
        rel: QUAD_REL_TARGET,
        abs: 0.0,
    };
    let est = ball_integral(dim, radius, &peak, tol, &g)?;
    let rel_err = est.error / est.value;
    if !(est.value > 0.0) || !(rel_err <= QUAD_REL_FAIL) {
        return Err(Error::Quadrature { rel_err });
    }
    Ok((est.value.ln() - floor, rel_err))
}

/// `L_s(Q_s) = −log ∫ exp(−ℓ_s) dQ_s = log Z_old − log Z_new`.
///
/// A zero context gives the exact value `½y²` without quadrature.
pub fn mixture_log_loss(state: &ForecasterState, x: &[f64], y: f64) -> Result<MixtureLoss> {
    let dim = state.accumulated.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    numerics::check_finite(x, "context")?;
    numerics::check_finite(&[y], "reward")?;
    let (log_z, log_z_error) = if x.iter().all(|&v| v == 0.0) {
        (state.log_z - 0.5 * y * y, state.log_z_error)
    } else {
        let mut next = state.accumulated.clone();
        next.add(x, y);
        log_partition(&next, state.prior_radius)?
    };
    Ok(MixtureLoss {
        value: state.log_z - log_z,
        error: state.log_z_error + log_z_error,
        log_z,
        log_z_error,
    })
}

/// Per-round record of the (blocked) forecasting game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLossLedger {
    pub dim: usize,
    pub delay: usize,
    pub bound: f64,
    pub trajectory: Trajectory,
    /// `L_s(Q_s)`.
    pub logloss: Vec<f64>,
    pub quadrature_error: Vec<f64>,
    /// 1-based forecaster acting at round `s`.
    pub block_index: Vec<usize>,
    /// `ℓ_s(θ*)` for the trajectory's own `θ*`.
    pub loss_at_star: Vec<f64>,
    /// `D_s = ℓ_s(θ*) − L_s(Q_s)`.
    pub d_terms: Vec<f64>,
    /// `Σ_{u≤s} D_u`.
    pub running_d: Vec<f64>,
    /// `S_k^{(i)}`: partial sums of `D` over forecaster `i`'s first `k` rounds.
    pub blocked_sums: Vec<Vec<f64>>,
}

impl LogLossLedger {
    pub fn len(&self) -> usize {
        self.logloss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logloss.is_empty()
    }

    pub fn total_log_loss(&self) -> f64 {
        self.logloss.iter().sum()
    }

    pub fn total_quadrature_error(&self) -> f64 {
        self.quadrature_error.iter().sum()
    }

    /// `ℓ_s(θ)` for every round.
    pub fn losses_at(&self, theta: &[f64]) -> Vec<f64> {
        let tr = &self.trajectory;
        tr.xs
            .iter()
            .zip(&tr.ys)
            .map(|(x, &y)| squared_loss(theta, x, y))
            .collect()
    }

    /// `Σ L_s(Q_s) − Σ ℓ_s(θ̄)`.
    pub fn regret(&self, comparator: &[f64]) -> f64 {
        self.total_log_loss() - self.losses_at(comparator).iter().sum::<f64>()
    }

    /// Number of rounds each forecaster acted.
    pub fn forecaster_rounds(&self) -> Vec<usize> {
        self.blocked_sums.iter().map(Vec::len).collect()
    }

    /// CSV with columns `s,logloss,loss_at_star,D_s,block_index,quadrature_error`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,logloss,loss_at_star,D_s,block_index,quadrature_error")?;
        for s in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s + 1,
                self.logloss[s],
                self.loss_at_star[s],
                self.d_terms[s],
                self.block_index[s],
                self.quadrature_error[s]
            )?;
        }
        Ok(())
    }
}

/// Runs `d` independent forecasters; forecaster `i` acts at rounds
/// `i, i + d, …` and, at round `s`, has absorbed exactly its rounds `≤ s − d`.
pub fn blocked_forecaster(trajectory: &Trajectory, delay: usize, bound: f64) -> Result<LogLossLedger> {
    if delay == 0 {
        return Err(Error::InvalidParameter("delay must be at least 1".into()));
    }
    let dim = trajectory.dim();
    let mut states = (1..=delay.min(trajectory.len()).max(1))
        .map(|i| ForecasterState::new(dim, bound, i))
        .collect::<Result<Vec<_>>>()?;
    let n = trajectory.len();
    let mut ledger = LogLossLedger {
        dim,
        delay,
        bound,
        trajectory: trajectory.clone(),
        logloss: Vec::with_capacity(n),
        quadrature_error: Vec::with_capacity(n),
        block_index: Vec::with_capacity(n),
        loss_at_star: Vec::with_capacity(n),
        d_terms: Vec::with_capacity(n),
        running_d: Vec::with_capacity(n),
        blocked_sums: vec![Vec::new(); delay],
    };
    let mut running = 0.0;
    for (s, (x, &y)) in trajectory.xs.iter().zip(&trajectory.ys).enumerate() {
        let i = s % delay;
        let out = states[i].play(x, y).map_err(|e| e.at_round(s + 1))?;
        let star = squared_loss(&trajectory.theta_star, x, y);
        let d = star - out.value;
        running += d;
        let block = &mut ledger.blocked_sums[i];
        block.push(block.last().copied().unwrap_or(0.0) + d);
        ledger.logloss.push(out.value);
        ledger.quadrature_error.push(out.error);
        ledger.block_index.push(i + 1);
        ledger.loss_at_star.push(star);
        ledger.d_terms.push(d);
        ledger.running_d.push(running);
    }
    Ok(ledger)
}

/// `Regret_t(θ̄)` of the undelayed EWA forecaster.
pub fn ewa_regret(trajectory: &Trajectory, comparator: &[f64], bound: f64) -> Result<f64> {
    if comparator.len() != trajectory.dim() {
        return Err(Error::DimensionMismatch {
            expected: trajectory.dim(),
            got: comparator.len(),
        });
    }
    if norm2(comparator) > bound * (1.0 + 2.0 * numerics::NORM_RELATIVE_TOL) {
        return Err(Error::InvalidParameter(
            "comparator outside the ball of radius B".into(),
        ));
    }
    Ok(blocked_forecaster(trajectory, 1, bound)?.regret(comparator))
}

/// `(p/2)·log((B+1)²·e·max(p, t)/p)`.
pub fn forecaster_regret_bound(t: usize, bound: f64, dim: usize) -> f64 {
    let p = dim as f64;
    let b1 = bound + 1.0;
    0.5 * p * (b1 * b1 * std::f64::consts::E * p.max(t as f64) / p).ln()
}

/// `(dp/2)·log((B+1)²·e·max(dp, t + d)/(dp))`.
pub fn blocked_regret_bound(t: usize, delay: usize, bound: f64, dim: usize) -> f64 {
    let dp = (delay * dim) as f64;
    let b1 = bound + 1.0;
    0.5 * dp * (b1 * b1 * std::f64::consts::E * dp.max((t + delay) as f64) / dp).ln()
}

/// `t_i = ⌈(t − i + 1)/d⌉` rounds for forecaster `i = 1..d`.
pub fn forecaster_counts(t: usize, delay: usize) -> Vec<usize> {
    (1..=delay)
        .map(|i| if i > t { 0 } else { (t - i + 1).div_ceil(delay) })
        .collect()
}

/// `|Σℓ(θ*) − Σℓ(θ̄) − [Regret_t(θ̄) + Σ(ℓ_s(θ*) − L_s(Q_s))]|`.
pub fn decomposition_check(ledger: &LogLossLedger, theta_star: &[f64], comparator: &[f64]) -> f64 {
    let star: f64 = ledger.losses_at(theta_star).iter().sum();
    let bar: f64 = ledger.losses_at(comparator).iter().sum();
    let regret = ledger.regret(comparator);
    let excess: f64 = ledger
        .losses_at(theta_star)
        .iter()
        .zip(&ledger.logloss)
        .map(|(l, big)| l - big)
        .sum();
    ((star - bar) - (regret + excess)).abs()
}

/// `t·φ_d·M + d·log(d/δ)`.
pub fn concentration_bound(t: usize, phi_d: f64, multiplier: f64, delay: usize, delta: f64) -> f64 {
    let d = delay as f64;
    t as f64 * phi_d * multiplier + d * (d / delta).ln()
}

/// `Σ_{s≤t} D_s` against its high-probability bound for every `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub statistic: Vec<f64>,
    pub bound: Vec<f64>,
    pub exceeded: Vec<bool>,
}

impl ConcentrationReport {
    pub fn any_exceeded(&self) -> bool {
        self.exceeded.iter().any(|&e| e)
    }
}

pub fn concentration_statistic(
    ledger: &LogLossLedger,
    profile: &MixingProfile,
    delta: f64,
    mode: MeanShiftMode,
) -> Result<ConcentrationReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let phi = profile.phi(ledger.delay);
    let m = mode.multiplier(ledger.bound);
    let bound: Vec<f64> = (1..=ledger.len())
        .map(|t| concentration_bound(t, phi, m, ledger.delay, delta))
        .collect();
    let exceeded = ledger.running_d.iter().zip(&bound).map(|(s, b)| s > b).collect();
    Ok(ConcentrationReport {
        statistic: ledger.running_d.clone(),
        bound,
        exceeded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::function::erf::erf;
    use std::f64::consts::{E, PI, SQRT_2};

    fn random_trajectory(dim: usize, n: usize, bound: f64, seed: u64) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir = uniform_in_ball(dim, &mut rng);
        let theta: Vec<f64> = dir.iter().map(|v| v * bound).collect();
        let mut noise = NoiseProcess::new(NoiseSpec::IidGaussian, ChaCha8Rng::seed_from_u64(seed + 1)).unwrap();
        Trajectory::simulate(&theta, n, &mut noise, &mut rng).unwrap()
    }

    /// `log ∫_{−R}^{R} exp(−½(θx − y)²) dθ` for one observation in one dimension.
    fn log_z_one_round(r: f64, x: f64, y: f64) -> f64 {
        let hi = (r * x - y) / SQRT_2;
        let lo = (-r * x - y) / SQRT_2;
        ((PI / 2.0).sqrt() * (erf(hi) - erf(lo)).abs() / x.abs()).ln()
    }

    #[test]
    fn loss_sum_matches_direct_summation() {
        let tr = random_trajectory(3, 200, 1.0, 4);
        let mut q = QuadraticLossSum::new(3);
        for (x, &y) in tr.xs.iter().zip(&tr.ys) {
            q.add(x, y);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let th: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let direct: f64 = tr.xs.iter().zip(&tr.ys).map(|(x, &y)| squared_loss(&th, x, y)).sum();
            assert!((q.evaluate(&th) - direct).abs() <= 1e-10 * direct);
        }
    }

    #[test]
    fn zero_loss_round_costs_nothing() {
        let st = ForecasterState::new(2, 1.0, 1).unwrap();
        let out = mixture_log_loss(&st, &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.error, 0.0);
    }

    #[test]
    fn zero_context_gives_exact_loss() {
        let mut st = ForecasterState::new(1, 1.0, 1).unwrap();
        st.play(&[0.7], 0.2).unwrap();
        let out = mixture_log_loss(&st, &[0.0], 1.5).unwrap();
        assert_eq!(out.value, 0.5 * 1.5 * 1.5);
    }

    #[test]
    fn one_dimensional_gaussian_round() {
        // B = 0: prior uniform on [−1, 1]; ℓ(θ) = ½θ².
        let st = ForecasterState::new(1, 0.0, 1).unwrap();
        let out = mixture_log_loss(&st, &[1.0], 0.0).unwrap();
        let closed = -((PI / 2.0).sqrt() * erf(1.0 / SQRT_2)).ln();
        let n = 10_000_000;
        let h = 2.0 / n as f64;
        let riemann: f64 = (0..n)
            .map(|k| {
                let t = -1.0 + (k as f64 + 0.5) * h;
                (-0.5 * t * t).exp()
            })
            .sum::<f64>()
            * h
            / 2.0;
        assert!((out.value - closed).abs() < 1e-9, "{} vs {}", out.value, closed);
        assert!((out.value + riemann.ln()).abs() < 1e-9);
        assert!(out.error < 1e-5);
    }

    #[test]
    fn prior_rounds_match_erf_oracle() {
        // d ≥ t: every forecaster sees the prior only.
        let tr = random_trajectory(1, 12, 1.0, 21);
        let ledger = blocked_forecaster(&tr, 20, 1.0).unwrap();
        let r: f64 = 2.0;
        for s in 0..tr.len() {
            let want = (2.0 * r).ln() - log_z_one_round(r, tr.xs[s][0], tr.ys[s]);
            assert!((ledger.logloss[s] - want).abs() < 1e-9, "round {s}");
        }
    }

    #[test]
    fn disc_round_matches_polar_riemann_sum() {
        let tr = random_trajectory(2, 3, 1.0, 5);
        let mut st = ForecasterState::new(2, 1.0, 1).unwrap();
        let mut total = 0.0;
        for (x, &y) in tr.xs.iter().zip(&tr.ys) {
            total += st.play(x, y).unwrap().value;
        }
        let mut q = QuadraticLossSum::new(2);
        for (x, &y) in tr.xs.iter().zip(&tr.ys) {
            q.add(x, y);
        }
        let (nr, na) = (2000, 2000);
        let r = 2.0;
        let mut z = 0.0;
        for i in 0..nr {
            let rho = (i as f64 + 0.5) * r / nr as f64;
            for j in 0..na {
                let a = (j as f64 + 0.5) * 2.0 * PI / na as f64;
                z += (-q.evaluate(&[rho * a.cos(), rho * a.sin()])).exp() * rho;
            }
        }
        z *= (r / nr as f64) * (2.0 * PI / na as f64);
        let want = (PI * r * r).ln() - z.ln();
        assert!((total - want).abs() < 1e-5, "{total} vs {want}");
    }

    #[test]
    fn ball_round_matches_slab_oracle() {
        // x = e1, y = 0 in three dimensions: Z = ∫ exp(−s²/2)·π(R² − s²) ds.
        let st = ForecasterState::new(3, 0.5, 1).unwrap();
        let out = mixture_log_loss(&st, &[1.0, 0.0, 0.0], 0.0).unwrap();
        let r: f64 = 1.5;
        let n = 1_000_000;
        let h = 2.0 * r / n as f64;
        let z: f64 = (0..n)
            .map(|k| {
                let s = -r + (k as f64 + 0.5) * h;
                (-0.5 * s * s).exp() * PI * (r * r - s * s)
            })
            .sum::<f64>()
            * h;
        let want = (4.0 / 3.0 * PI * r.powi(3)).ln() - z.ln();
        assert!((out.value - want).abs() < 1e-8, "{} vs {}", out.value, want);
    }

    #[test]
    fn log_losses_are_nonnegative() {
        for dim in 1..=2 {
            let tr = random_trajectory(dim, 40, 1.0, 30 + dim as u64);
            let ledger = blocked_forecaster(&tr, 1, 1.0).unwrap();
            for (l, e) in ledger.logloss.iter().zip(&ledger.quadrature_error) {
                assert!(*l >= -e, "{l} < -{e}");
            }
        }
    }

    #[test]
    fn rejects_unsupported_dimension() {
        assert!(ForecasterState::new(4, 1.0, 1).is_err());
        assert!(ForecasterState::new(0, 1.0, 1).is_err());
        let tr = Trajectory::new(vec![0.0; 4], vec![vec![0.0; 4]], vec![0.0]).unwrap();
        assert!(blocked_forecaster(&tr, 1, 1.0).is_err());
    }

    #[test]
    fn forecaster_bound_values() {
        assert!((forecaster_regret_bound(8, 1.0, 2) - (16.0 * E).ln()).abs() < 1e-12);
        assert!(((16.0f64 * E).ln() - 3.7726).abs() < 1e-4);
        assert_eq!(forecaster_regret_bound(1, 1.0, 3), forecaster_regret_bound(3, 1.0, 3));
        assert!(forecaster_regret_bound(4, 1.0, 3) > forecaster_regret_bound(3, 1.0, 3));
        assert!((forecaster_regret_bound(50, 1.0, 1) - 0.5 * (4.0 * E * 50.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_game_has_zero_regret() {
        let tr = Trajectory::new(vec![0.5], vec![], vec![]).unwrap();
        assert_eq!(ewa_regret(&tr, &[0.3], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn ewa_regret_within_forecaster_bound() {
        for seed in 0..5 {
            let tr = random_trajectory(1, 50, 1.0, 100 + seed);
            let mut q = QuadraticLossSum::new(1);
            for (x, &y) in tr.xs.iter().zip(&tr.ys) {
                q.add(x, y);
            }
            let ls = q.minimizer(1.0).unwrap();
            let reg = ewa_regret(&tr, &ls, 1.0).unwrap();
            assert!(reg <= forecaster_regret_bound(50, 1.0, 1) + 1e-3, "seed {seed}: {reg}");
        }
        let tr = random_trajectory(1, 5, 1.0, 3);
        assert!(ewa_regret(&tr, &[1.5], 1.0).is_err());
    }

    #[test]
    fn single_delay_matches_undelayed() {
        let tr = random_trajectory(2, 15, 1.0, 8);
        let ledger = blocked_forecaster(&tr, 1, 1.0).unwrap();
        let reg = ewa_regret(&tr, &tr.theta_star, 1.0).unwrap();
        assert_eq!(ledger.regret(&tr.theta_star), reg);
    }

    #[test]
    fn blocked_regret_within_its_bound() {
        for &d in &[2, 3, 5] {
            for seed in 0..3 {
                let tr = random_trajectory(1, 60, 1.0, 200 + seed);
                let ledger = blocked_forecaster(&tr, d, 1.0).unwrap();
                for t in [10usize, 30, 60] {
                    let reg: f64 = ledger.logloss[..t].iter().sum::<f64>()
                        - ledger.losses_at(&tr.theta_star)[..t].iter().sum::<f64>();
                    assert!(reg <= blocked_regret_bound(t, d, 1.0, 1) + 1e-3);
                }
            }
        }
    }

    #[test]
    fn forecaster_count_identity() {
        for t in 0..40 {
            for d in 1..9 {
                let counts = forecaster_counts(t, d);
                assert_eq!(counts.iter().sum::<usize>(), t);
            }
        }
        let tr = random_trajectory(1, 23, 1.0, 1);
        for d in 1..7 {
            let ledger = blocked_forecaster(&tr, d, 1.0).unwrap();
            assert_eq!(ledger.forecaster_rounds(), forecaster_counts(23, d));
            for s in 0..23 {
                assert_eq!(ledger.block_index[s], s % d + 1);
            }
        }
    }

    #[test]
    fn decomposition_residual() {
        let tr = random_trajectory(1, 30, 1.0, 77);
        let ledger = blocked_forecaster(&tr, 3, 1.0).unwrap();
        let bar = vec![-0.4];
        assert!(decomposition_check(&ledger, &tr.theta_star, &bar) <= 1e-8);
        assert!(decomposition_check(&ledger, &tr.theta_star, &tr.theta_star) <= 1e-12);
    }

    #[test]
    fn concentration_bound_value() {
        let b = concentration_bound(100, 0.25, 2.0, 4, 0.05);
        assert!((b - (50.0 + 4.0 * 80f64.ln())).abs() < 1e-12);
        assert!((b - 67.53).abs() < 5e-3);
    }

    #[test]
    fn concentration_holds_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut noise = NoiseProcess::new(NoiseSpec::Zero, ChaCha8Rng::seed_from_u64(0)).unwrap();
        let tr = Trajectory::simulate(&[0.8], 80, &mut noise, &mut rng).unwrap();
        let ledger = blocked_forecaster(&tr, 2, 1.0).unwrap();
        let rep = concentration_statistic(&ledger, &MixingProfile::None, 0.05, MeanShiftMode::BPlusOne).unwrap();
        assert!(!rep.any_exceeded());
        assert!(ledger.loss_at_star.iter().all(|&l| l < 1e-24));
        assert!(concentration_statistic(&ledger, &MixingProfile::None, 1.0, MeanShiftMode::B).is_err());
    }

    #[test]
    fn ledger_csv_format() {
        let tr = Trajectory::new(vec![0.0], vec![vec![0.0], vec![0.0]], vec![1.0, 0.0]).unwrap();
        let ledger = blocked_forecaster(&tr, 2, 1.0).unwrap();
        let mut buf = Vec::new();
        ledger.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "s,logloss,loss_at_star,D_s,block_index,quadrature_error\n1,0.5,0.5,0,1,0\n2,0,0,0,2,0\n"
        );
    }
}
