//! Dense symmetric positive-definite linear algebra.
//!
//! Matrices are small (`p` up to a few hundred) and stored row-major in plain
//! `Vec<f64>`. The Gram matrix `V = Λ + λ·Id` is kept as its lower Cholesky
//! factor and grown by rank-one updates; the raw `Λ` is kept densely for the
//! ball-constrained least-squares solver, whose ridge path needs `Λ + μ·Id`
//! for many `μ`.

use crate::error::{Error, Result};

/// Lower limit of the ridge path; solutions at this multiplier count as interior.
pub const RIDGE_PATH_FLOOR: f64 = 1e-10;
/// Relative tolerance on `‖θ(μ)‖ − B` when the norm constraint is active.
pub const NORM_RELATIVE_TOL: f64 = 1e-8;
/// Bisection (and bracket doubling) iteration cap.
pub const MAX_BISECTION_STEPS: usize = 200;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// In-place Cholesky factorisation of a row-major `dim × dim` matrix. On
/// success the lower triangle holds `L` and the strict upper triangle is zeroed.
pub fn cholesky_in_place(dim: usize, a: &mut [f64]) -> Result<()> {
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for k in 0..j {
            d -= a[j * dim + k] * a[j * dim + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        a[j * dim + j] = ljj;
        for i in (j + 1)..dim {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= a[i * dim + k] * a[j * dim + k];
            }
            a[i * dim + j] = s / ljj;
        }
        for i in 0..j {
            a[i * dim + j] = 0.0;
        }
    }
    Ok(())
}

fn forward_solve(dim: usize, l: &[f64], b: &mut [f64]) {
    for i in 0..dim {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * dim + k] * b[k];
        }
        b[i] = s / l[i * dim + i];
    }
}

fn backward_solve_transpose(dim: usize, l: &[f64], b: &mut [f64]) {
    for i in (0..dim).rev() {
        let mut s = b[i];
        for k in (i + 1)..dim {
            s -= l[k * dim + i] * b[k];
        }
        b[i] = s / l[i * dim + i];
    }
}

/// A symmetric positive-definite matrix held as its Cholesky factor `L`, `V = L·Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    dim: usize,
    factor: Vec<f64>,
}

impl SpdMatrix {
    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "identity scale must be positive and finite, got {scale}"
            )));
        }
        let mut factor = vec![0.0; dim * dim];
        let s = scale.sqrt();
        for i in 0..dim {
            factor[i * dim + i] = s;
        }
        Ok(Self { dim, factor })
    }

    /// Factorises a dense row-major matrix (only the lower triangle is read).
    pub fn from_dense(dim: usize, dense: &[f64]) -> Result<Self> {
        check_dim(dim * dim, dense.len())?;
        check_finite(dense, "dense matrix")?;
        let mut factor = dense.to_vec();
        cholesky_in_place(dim, &mut factor)?;
        Ok(Self { dim, factor })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major lower-triangular factor.
    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    /// `L·Lᵀ ← L·Lᵀ + x·xᵀ` (LINPACK `dchud` recurrence, O(p²)).
    pub fn rank_one_update(&mut self, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        check_finite(x, "update vector")?;
        let n = self.dim;
        let mut v = x.to_vec();
        let l = &mut self.factor;
        for j in 0..n {
            let ljj = l[j * n + j];
            let vj = v[j];
            if vj == 0.0 {
                continue;
            }
            let r = ljj.hypot(vj);
            let c = r / ljj;
            let s = vj / ljj;
            l[j * n + j] = r;
            for i in (j + 1)..n {
                let lij = (l[i * n + j] + s * v[i]) / c;
                l[i * n + j] = lij;
                v[i] = c * v[i] - s * lij;
            }
        }
        Ok(())
    }

    /// Dense `L·Lᵀ`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.dim;
        let l = &self.factor;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| l[i * n + k] * l[j * n + k]).sum();
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
        out
    }

    /// `V⁻¹·b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, b.len())?;
        let mut out = b.to_vec();
        forward_solve(self.dim, &self.factor, &mut out);
        backward_solve_transpose(self.dim, &self.factor, &mut out);
        Ok(out)
    }

    /// `xᵀ·V⁻¹·x` via one triangular solve: `‖L⁻¹x‖²`.
    pub fn quad_form_inv(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        check_finite(x, "quadratic form argument")?;
        let mut z = x.to_vec();
        forward_solve(self.dim, &self.factor, &mut z);
        Ok(dot(&z, &z))
    }

    /// `xᵀ·V·x = ‖Lᵀx‖²`.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let n = self.dim;
        let mut acc = 0.0;
        for k in 0..n {
            let s: f64 = (k..n).map(|i| self.factor[i * n + k] * x[i]).sum();
            acc += s * s;
        }
        Ok(acc)
    }

    /// `log det V = 2·Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim).map(|i| self.factor[i * self.dim + i].ln()).sum::<f64>() * 2.0
    }
}

/// Sufficient statistics of a least-squares problem with ridge `λ`.
///
/// `gram` is the factored `V_t = Λ_t + λ·Id`; `lambda_mat` is the dense `Λ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignStats {
    gram: SpdMatrix,
    lambda_mat: Vec<f64>,
    cross: Vec<f64>,
    sum_y2: f64,
    count: usize,
    ridge: f64,
}

impl DesignStats {
    pub fn new(dim: usize, ridge: f64) -> Result<Self> {
        Ok(Self {
            gram: SpdMatrix::scaled_identity(dim, ridge)?,
            lambda_mat: vec![0.0; dim * dim],
            cross: vec![0.0; dim],
            sum_y2: 0.0,
            count: 0,
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.gram.dim
    }
    pub fn gram(&self) -> &SpdMatrix {
        &self.gram
    }
    /// Dense unregularised `Λ_t = Σ X_s X_sᵀ`.
    pub fn lambda_mat(&self) -> &[f64] {
        &self.lambda_mat
    }
    pub fn cross(&self) -> &[f64] {
        &self.cross
    }
    pub fn count(&self) -> usize {
        self.count
    }
    pub fn ridge(&self) -> f64 {
        self.ridge
    }
    pub fn sum_y2(&self) -> f64 {
        self.sum_y2
    }

    /// Absorbs one observation `(x, y)`; requires `‖x‖₂ ≤ 1`.
    pub fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        let n = self.dim();
        check_dim(n, x.len())?;
        check_finite(x, "design vector")?;
        if !y.is_finite() {
            return Err(Error::NonFinite("response"));
        }
        if norm2(x) > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "design vector norm {} exceeds 1",
                norm2(x)
            )));
        }
        self.gram.rank_one_update(x)?;
        for i in 0..n {
            for j in 0..n {
                self.lambda_mat[i * n + j] += x[i] * x[j];
            }
            self.cross[i] += y * x[i];
        }
        self.sum_y2 += y * y;
        self.count += 1;
        Ok(())
    }

    /// `Σ_s (⟨θ, X_s⟩ − Y_s)²`, evaluated from the sufficient statistics.
    pub fn objective(&self, theta: &[f64]) -> f64 {
        let n = self.dim();
        let mut quad = 0.0;
        for i in 0..n {
            let row: f64 = (0..n).map(|j| self.lambda_mat[i * n + j] * theta[j]).sum();
            quad += theta[i] * row;
        }
        quad - 2.0 * dot(&self.cross, theta) + self.sum_y2
    }

    /// Regularised estimate `V_t⁻¹·b_t`.
    pub fn ridge_estimate(&self) -> Result<Vec<f64>> {
        self.gram.solve(&self.cross)
    }

    pub fn constrained_least_squares(&self, radius: f64) -> Result<Vec<f64>> {
        constrained_least_squares(self.dim(), &self.lambda_mat, &self.cross, radius)
    }
}

/// Solves `(A + μ·Id)·θ = b`; `None` when the shifted matrix is not positive definite.
fn ridge_path_point(dim: usize, a: &[f64], b: &[f64], mu: f64, work: &mut Vec<f64>) -> Option<Vec<f64>> {
    work.clear();
    work.extend_from_slice(a);
    for i in 0..dim {
        work[i * dim + i] += mu;
    }
    cholesky_in_place(dim, work).ok()?;
    let mut theta = b.to_vec();
    forward_solve(dim, work, &mut theta);
    backward_solve_transpose(dim, work, &mut theta);
    Some(theta)
}

/// Minimiser of `½θᵀAθ − bᵀθ` over the closed ball of radius `radius`, for PSD `A`.
///
/// With `A = Λ_t`, `b = Σ X_s Y_s` this is `argmin_{‖θ‖≤B} Σ_s (⟨θ,X_s⟩ − Y_s)²`.
/// The minimiser lies on the ridge path `θ(μ) = (A + μ·Id)⁻¹·b`; the
/// multiplier is bracketed by doubling and then bisected until the norm
/// matches the radius to [`NORM_RELATIVE_TOL`].
pub fn constrained_least_squares(dim: usize, a: &[f64], b: &[f64], radius: f64) -> Result<Vec<f64>> {
    check_dim(dim * dim, a.len())?;
    check_dim(dim, b.len())?;
    check_finite(a, "quadratic term")?;
    check_finite(b, "linear term")?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    if b.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; dim]);
    }

    let mut work = Vec::with_capacity(dim * dim);
    let norm_at = |mu: f64, work: &mut Vec<f64>| -> (f64, Option<Vec<f64>>) {
        match ridge_path_point(dim, a, b, mu, work) {
            Some(th) => (norm2(&th), Some(th)),
            None => (f64::INFINITY, None),
        }
    };

    let (n0, th0) = norm_at(RIDGE_PATH_FLOOR, &mut work);
    if n0 <= radius {
        return Ok(th0.expect("finite norm implies a solution"));
    }

    let mut lo = RIDGE_PATH_FLOOR;
    let mut hi = 1.0_f64;
    let mut hi_theta = None;
    for _ in 0..MAX_BISECTION_STEPS {
        let (n, th) = norm_at(hi, &mut work);
        if n < radius {
            hi_theta = th;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    let mut hi_theta = hi_theta.ok_or(Error::SolverDiverged {
        iterations: MAX_BISECTION_STEPS,
    })?;

    for _ in 0..MAX_BISECTION_STEPS {
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            // Bracket exhausted at double precision; the upper end is feasible.
            return Ok(hi_theta);
        }
        let (n, th) = norm_at(mid, &mut work);
        if (n - radius).abs() <= NORM_RELATIVE_TOL * radius {
            return Ok(th.expect("finite norm implies a solution"));
        }
        if n > radius {
            lo = mid;
        } else {
            hi = mid;
            hi_theta = th.expect("finite norm implies a solution");
        }
    }
    Err(Error::SolverDiverged {
        iterations: MAX_BISECTION_STEPS,
    })
}
