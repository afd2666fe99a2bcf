//! Adaptive Gauss–Kronrod quadrature over intervals and low-dimensional balls.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::Result;

// 15-point Kronrod abscissae on [0, 1]; odd entries are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Cap on subintervals per adaptive call.
const MAX_INTERVALS: usize = 4000;

/// An integral value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

/// Stopping rule `error ≤ max(rel·|value|, abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

/// One 15-point rule. The integrand may carry its own error (nested
/// integrals); that error is integrated with the Kronrod weights and added.
fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<Estimate>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mid = f(c)?;
    let mut kronrod = WGK[7] * mid.value;
    let mut gauss = WG[3] * mid.value;
    let mut inner = WGK[7] * mid.error;
    for j in 0..7 {
        let lo = f(c - h * XGK[j])?;
        let hi = f(c + h * XGK[j])?;
        kronrod += WGK[j] * (lo.value + hi.value);
        inner += WGK[j] * (lo.error + hi.error);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo.value + hi.value);
        }
    }
    Ok(Estimate {
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs() + inner * h.abs(),
    })
}

struct Piece {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`, starting from the
/// partition given by `breaks` (points outside `(a, b)` are ignored).
///
/// Returns the best estimate even when the interval cap is hit; callers
/// decide whether the reported error is acceptable.
pub fn integrate<F>(mut f: F, a: f64, b: f64, breaks: &[f64], tol: Tolerance) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<Estimate>,
{
    if b <= a {
        return Ok(Estimate::exact(0.0));
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut heap = BinaryHeap::new();
    let mut lo = a;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        heap.push(Piece {
            a: lo,
            b: hi,
            est: gk15(&mut f, lo, hi)?,
        });
        lo = hi;
    }
    let total = |heap: &BinaryHeap<Piece>| {
        heap.iter().fold(Estimate::exact(0.0), |acc, p| Estimate {
            value: acc.value + p.est.value,
            error: acc.error + p.est.error,
        })
    };
    let mut run = total(&heap);
    while run.error > (tol.rel * run.value.abs()).max(tol.abs) && heap.len() < MAX_INTERVALS {
        let worst = heap.pop().expect("non-empty partition");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Interval at floating-point resolution.
            heap.push(worst);
            break;
        }
        let left = gk15(&mut f, worst.a, m)?;
        let right = gk15(&mut f, m, worst.b)?;
        run.value += left.value + right.value - worst.est.value;
        run.error += left.error + right.error - worst.est.error;
        heap.push(Piece {
            a: worst.a,
            b: m,
            est: left,
        });
        heap.push(Piece {
            a: m,
            b: worst.b,
            est: right,
        });
    }
    Ok(total(&heap))
}

/// `∫_{‖θ‖≤R} g(θ) dθ` for `0 ≤ g ≤ 1`, by nested one-dimensional rules.
///
/// All but the last coordinate use `θ_k = r·sin u`, which turns the
/// square-root edge of the ball into a smooth integrand. `hint` (e.g. the
/// location of the peak of `g`) seeds the initial partitions.
pub fn ball_integral<G>(dim: usize, radius: f64, hint: &[f64], tol: Tolerance, g: &G) -> Result<Estimate>
where
    G: Fn(&[f64]) -> f64,
{
    let mut point = vec![0.0; dim];
    let inner = Tolerance {
        rel: tol.rel * 1e-2,
        abs: tol.abs * 1e-2,
    };
    level(0, radius, &mut point, hint, tol, inner, g)
}

fn level<G>(
    k: usize,
    r: f64,
    point: &mut [f64],
    hint: &[f64],
    tol: Tolerance,
    inner: Tolerance,
    g: &G,
) -> Result<Estimate>
where
    G: Fn(&[f64]) -> f64,
{
    let dim = point.len();
    if r <= 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let h = hint.get(k).copied().unwrap_or(0.0);
    if k + 1 == dim {
        let breaks = [h, -0.5 * r, 0.5 * r];
        return integrate(
            |x| {
                point[k] = x;
                Ok(Estimate::exact(g(point)))
            },
            -r,
            r,
            &breaks,
            tol,
        );
    }
    let u0 = (h / r).clamp(-1.0, 1.0).asin();
    let breaks = [u0, -FRAC_PI_2 / 2.0, FRAC_PI_2 / 2.0];
    integrate(
        |u| {
            let (s, c) = u.sin_cos();
            point[k] = r * s;
            let rc = r * c.max(0.0);
            let sub = level(k + 1, rc, point, hint, inner, inner, g)?;
            Ok(Estimate {
                value: rc * sub.value,
                error: rc * sub.error,
            })
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        &breaks,
        tol,
    )
}

/// Volume of the Euclidean ball of radius `r` in `dim` dimensions.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    // V_0 = 1, V_1 = 2, V_n = (2π/n)·V_{n−2}.
    let mut v = if dim.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut n = if dim.is_multiple_of(2) { 2 } else { 3 };
    while n <= dim {
        v *= 2.0 * std::f64::consts::PI / n as f64;
        n += 2;
    }
    v * r.powi(dim as i32)
}
