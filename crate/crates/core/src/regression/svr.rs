//! Linear ε-SVR trained in the dual.
//!
//! With `β = α − α̂` the dual reads
//!
//! ```text
//! min  ½ βᵀKβ − yᵀβ + ε‖β‖₁   s.t.  Σβ = 0,  −C ≤ β ≤ C
//! ```
//!
//! which keeps `α·α̂ = 0` by construction. The equality constraint couples the
//! coordinates, so each step moves a maximally violating pair `(β_i, β_j)` by
//! `(+t, −t)` and minimizes the resulting one-dimensional piecewise quadratic
//! exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// Relative duality-gap tolerance.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-6,
            max_iterations: 2_000_000,
        }
    }
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Config(format!(
                "SVR C must be positive, got {}",
                self.c
            )));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!(
                "SVR epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("SVR tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrSolution {
    pub w: Vec<f64>,
    pub b: f64,
    pub alpha: Vec<f64>,
    pub alpha_hat: Vec<f64>,
    pub primal: f64,
    /// Dual objective in minimization form; `primal + dual` is the gap.
    pub dual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `½‖w‖² + C Σ max(0, |y − w·x − b| − ε)`.
pub fn svr_primal(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, c: f64, epsilon: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - dot(w, xi) - b).abs() - epsilon)
        .map(|v| v.max(0.0))
        .sum();
    reg + c * loss
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Feasible bias interval `[lo, hi]` implied by the KKT conditions at `β_i`.
fn bias_interval(beta: f64, residual: f64, c: f64, epsilon: f64) -> (f64, f64) {
    let (below, above) = (residual - epsilon, residual + epsilon);
    if beta == 0.0 {
        (below, above)
    } else if beta >= c {
        (f64::NEG_INFINITY, below)
    } else if beta > 0.0 {
        (below, below)
    } else if beta <= -c {
        (above, f64::INFINITY)
    } else {
        (above, above)
    }
}

/// Minimizes `½ηt² + gt + ε(|p + t| + |q − t|)` over `t ∈ [lo, hi]`.
fn pair_step(eta: f64, g: f64, epsilon: f64, p: f64, q: f64, lo: f64, hi: f64) -> f64 {
    let f = |t: f64| 0.5 * eta * t * t + g * t + epsilon * ((p + t).abs() + (q - t).abs());
    let mut knots = vec![lo, hi];
    for k in [-p, q] {
        if k > lo && k < hi {
            knots.push(k);
        }
    }
    knots.sort_by(f64::total_cmp);
    let mut candidates = knots.clone();
    if eta > 0.0 {
        for w in knots.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let s1 = if p + mid >= 0.0 { 1.0 } else { -1.0 };
            let s2 = if q - mid >= 0.0 { 1.0 } else { -1.0 };
            let t = -(g + epsilon * (s1 - s2)) / eta;
            if t > w[0] && t < w[1] {
                candidates.push(t);
            }
        }
    }
    let mut best = 0.0f64.clamp(lo, hi);
    let mut best_f = f(best);
    for t in candidates {
        let ft = f(t);
        if ft < best_f {
            best = t;
            best_f = ft;
        }
    }
    best
}

/// Newton step on the free coefficients (strictly inside `(0, C)` in
/// magnitude) with every other coefficient and every sign held fixed, cut
/// short at the first coefficient to reach a bound. Returns whether the step
/// was cut short, in which case another step may make further progress.
#[allow(clippy::too_many_arguments)]
fn polish(
    k: &[f64],
    x: &[Vec<f64>],
    y: &[f64],
    beta: &mut [f64],
    grad: &mut [f64],
    w: &mut [f64],
    c: f64,
    eps: f64,
) -> bool {
    let n = beta.len();
    let free: Vec<usize> = (0..n)
        .filter(|&i| beta[i] != 0.0 && beta[i].abs() < c)
        .collect();
    let m = free.len();
    if m < 2 {
        return false;
    }
    let width = m + 2;
    let mut a = vec![0.0; (m + 1) * width];
    let trace: f64 = free.iter().map(|&i| k[i * n + i]).sum();
    for (p, &i) in free.iter().enumerate() {
        for (q, &j) in free.iter().enumerate() {
            a[p * width + q] = k[i * n + j];
        }
        a[p * width + p] += 1e-10 * trace / m as f64;
        a[p * width + m] = 1.0;
        a[p * width + m + 1] = -(grad[i] + eps * beta[i].signum());
        a[m * width + p] = 1.0;
    }
    let Some(sol) = gauss_solve(a, m + 1) else {
        return false;
    };
    let step = &sol[..m];
    let mut t: f64 = 1.0;
    let mut stop = None;
    for (p, &i) in free.iter().enumerate() {
        let (b, d) = (beta[i], step[p]);
        let room = if b > 0.0 {
            if d > 0.0 {
                c - b
            } else {
                b
            }
        } else if d < 0.0 {
            c + b
        } else {
            -b
        };
        if d != 0.0 && room / d.abs() < t {
            t = room / d.abs();
            stop = Some(p);
        }
    }
    let dual = |w: &[f64], beta: &[f64]| {
        0.5 * dot(w, w) - dot(y, beta) + eps * beta.iter().map(|v| v.abs()).sum::<f64>()
    };
    let before = dual(w, beta);
    let saved = (beta.to_vec(), w.to_vec());
    let mut moved = vec![0.0; m];
    for (p, &i) in free.iter().enumerate() {
        let old = beta[i];
        beta[i] = if stop == Some(p) {
            if step[p] > 0.0 && old > 0.0 {
                c
            } else if step[p] < 0.0 && old < 0.0 {
                -c
            } else {
                0.0
            }
        } else {
            old + t * step[p]
        };
        moved[p] = beta[i] - old;
        for (wk, v) in w.iter_mut().zip(&x[i]) {
            *wk += moved[p] * v;
        }
    }
    if !(dual(w, beta) <= before) {
        beta.copy_from_slice(&saved.0);
        w.copy_from_slice(&saved.1);
        return false;
    }
    for (r, g) in grad.iter_mut().enumerate() {
        *g += free
            .iter()
            .zip(&moved)
            .map(|(&i, dm)| k[r * n + i] * dm)
            .sum::<f64>();
    }
    stop.is_some()
}

/// Solves an `m × m` system stored row-major with the right-hand side as an
/// extra column, using partial pivoting.
fn gauss_solve(mut a: Vec<f64>, m: usize) -> Option<Vec<f64>> {
    let width = m + 1;
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| {
            a[i * width + col]
                .abs()
                .total_cmp(&a[j * width + col].abs())
        })?;
        if a[piv * width + col] == 0.0 {
            return None;
        }
        if piv != col {
            for q in 0..width {
                a.swap(piv * width + q, col * width + q);
            }
        }
        for r in col + 1..m {
            let f = a[r * width + col] / a[col * width + col];
            if f != 0.0 {
                for q in col..width {
                    a[r * width + q] -= f * a[col * width + q];
                }
            }
        }
    }
    let mut z = vec![0.0; m];
    for r in (0..m).rev() {
        let tail: f64 = (r + 1..m).map(|q| a[r * width + q] * z[q]).sum();
        z[r] = (a[r * width + m] - tail) / a[r * width + r];
    }
    z.iter().all(|v| v.is_finite()).then_some(z)
}

/// Trains a linear ε-SVR on the rows of `x`.
pub fn svr_solve(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrSolution> {
    params.validate()?;
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Dimension(format!(
            "SVR needs at least 2 rows and one target per row, got {n} rows and {} targets",
            y.len()
        )));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension("ragged design matrix".into()));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SVR training data".into()));
    }
    let (c, eps) = (params.c, params.epsilon);

    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = dot(&x[i], &x[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }

    let mut beta = vec![0.0; n];
    let mut w = vec![0.0; d];
    // Gradient of the smooth part, Kβ − y.
    let mut grad: Vec<f64> = y.iter().map(|v| -v).collect();

    let bias = |beta: &[f64], grad: &[f64]| -> (f64, f64, usize, usize) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut ilo, mut ihi) = (0, 0);
        for i in 0..n {
            let (l, u) = bias_interval(beta[i], -grad[i], c, eps);
            if l > lo {
                lo = l;
                ilo = i;
            }
            if u < hi {
                hi = u;
                ihi = i;
            }
        }
        (lo, hi, ilo, ihi)
    };
    let midpoint = |lo: f64, hi: f64| match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    };
    let objectives = |beta: &[f64], w: &[f64], b: f64| {
        let primal = svr_primal(x, y, w, b, c, eps);
        let dual = 0.5 * dot(w, w) - dot(y, beta) + eps * beta.iter().map(|v| v.abs()).sum::<f64>();
        (primal, dual)
    };

    let check_every = n.max(10);
    let mut iterations = 0;
    let mut converged = false;
    let mut polished = None;
    loop {
        let (lo, hi, i, j) = bias(&beta, &grad);
        if iterations % check_every == 0 || lo <= hi {
            let b = midpoint(lo, hi);
            let (p, dl) = objectives(&beta, &w, b);
            if p + dl <= params.tol * (1.0 + p.abs()) {
                converged = true;
                break;
            }
            if polished != Some(iterations) {
                polished = Some(iterations);
                for _ in 0..=n {
                    if !polish(&k, x, y, &mut beta, &mut grad, &mut w, c, eps) {
                        break;
                    }
                }
                continue;
            }
        }
        if iterations >= params.max_iterations {
            break;
        }
        iterations += 1;
        if i == j {
            break;
        }

        let eta = k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j];
        let g = grad[i] - grad[j];
        let t_lo = (-c - beta[i]).max(beta[j] - c);
        let t_hi = (c - beta[i]).min(beta[j] + c);
        let t = pair_step(eta.max(0.0), g, eps, beta[i], beta[j], t_lo, t_hi);
        if t == 0.0 {
            // No progress along the most violating pair: numerically optimal.
            converged = lo - hi <= params.tol;
            break;
        }
        let snap = |v: f64| {
            if (v - c).abs() <= 1e-15 * c {
                c
            } else if (v + c).abs() <= 1e-15 * c {
                -c
            } else if v.abs() <= 1e-15 * c {
                0.0
            } else {
                v
            }
        };
        beta[i] = snap(beta[i] + t);
        beta[j] = snap(beta[j] - t);
        for (wk, (xi, xj)) in w.iter_mut().zip(x[i].iter().zip(&x[j])) {
            *wk += t * (xi - xj);
        }
        for r in 0..n {
            grad[r] += t * (k[r * n + i] - k[r * n + j]);
        }
    }

    // Recompute from β to shed accumulated drift.
    let mut w = vec![0.0; d];
    for (bi, xi) in beta.iter().zip(x) {
        for (wk, v) in w.iter_mut().zip(xi) {
            *wk += bi * v;
        }
    }
    for r in 0..n {
        grad[r] = dot(&w, &x[r]) - y[r];
    }
    let (lo, hi, _, _) = bias(&beta, &grad);
    let b = midpoint(lo, hi);
    let (primal, dual) = objectives(&beta, &w, b);
    if !converged {
        log::warn!(
            "SVR stopped after {iterations} pair updates with duality gap {:.3e}",
            primal + dual
        );
    }
    Ok(SvrSolution {
        w,
        b,
        alpha: beta.iter().map(|v| v.max(0.0)).collect(),
        alpha_hat: beta.iter().map(|v| (-v).max(0.0)).collect(),
        primal,
        dual,
        iterations,
        converged,
    })
}
