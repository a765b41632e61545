//! Lasso by cyclic coordinate descent with soft-thresholding.
//!
//! Objective: `Σ (y_i − w·x_i − b)² + α‖w‖₁`, intercept unpenalized. The
//! constrained form `‖w‖₁ ≤ λ` has the same solution path; each budget λ
//! corresponds to some penalty α.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoParams {
    /// Fixed penalty; `None` selects it by cross-validation.
    pub alpha: Option<f64>,
    pub cv_folds: usize,
    /// Candidate penalties are `2^k` for `k` in this inclusive range.
    pub grid_exponents: (i32, i32),
    /// Largest coordinate change at convergence.
    pub tol: f64,
    /// Largest KKT violation at convergence.
    pub kkt_tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoParams {
    fn default() -> Self {
        LassoParams {
            alpha: None,
            cv_folds: 5,
            grid_exponents: (-10, 10),
            tol: 1e-8,
            kkt_tol: 1e-7,
            max_sweeps: 100_000,
        }
    }
}

impl LassoParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.alpha {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::Config(format!(
                    "Lasso alpha must be non-negative, got {a}"
                )));
            }
        }
        if self.cv_folds < 2 {
            return Err(Error::Config(
                "cross-validation needs at least 2 folds".into(),
            ));
        }
        if self.grid_exponents.0 > self.grid_exponents.1 {
            return Err(Error::Config("empty Lasso penalty grid".into()));
        }
        Ok(())
    }

    /// Penalty grid in decreasing order.
    pub fn grid(&self) -> Vec<f64> {
        (self.grid_exponents.0..=self.grid_exponents.1)
            .rev()
            .map(|k| 2f64.powi(k))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoSolution {
    pub w: Vec<f64>,
    pub b: f64,
    pub alpha: f64,
    /// Largest violation of the optimality conditions at the returned point.
    pub kkt_certificate: f64,
    pub sweeps: usize,
    pub converged: bool,
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Column-major copy of a row-major design with the cross-products the
/// solver needs: squared column norms, column sums and the Gram matrix.
#[derive(Debug, Clone)]
pub struct Columns {
    pub n: usize,
    pub cols: Vec<Vec<f64>>,
    pub sq_norms: Vec<f64>,
    sums: Vec<f64>,
    /// Row-major `d × d` matrix of `X_jᵀX_k`.
    gram: Vec<f64>,
}

impl Columns {
    pub fn from_rows(x: &[Vec<f64>]) -> Result<Self> {
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        if x.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension("ragged design matrix".into()));
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Lasso design matrix".into()));
        }
        let cols: Vec<Vec<f64>> = (0..d).map(|j| x.iter().map(|r| r[j]).collect()).collect();
        let mut gram = vec![0.0; d * d];
        for j in 0..d {
            for k in j..d {
                let v = dot(&cols[j], &cols[k]);
                gram[j * d + k] = v;
                gram[k * d + j] = v;
            }
        }
        let sq_norms = (0..d).map(|j| gram[j * d + j]).collect();
        let sums = cols.iter().map(|c| c.iter().sum()).collect();
        Ok(Columns {
            n,
            cols,
            sq_norms,
            sums,
            gram,
        })
    }

    fn dim(&self) -> usize {
        self.cols.len()
    }

    fn residual(&self, y: &[f64], w: &[f64], b: f64) -> Vec<f64> {
        let mut r: Vec<f64> = y.iter().map(|v| v - b).collect();
        for (col, wj) in self.cols.iter().zip(w) {
            if *wj != 0.0 {
                for (ri, a) in r.iter_mut().zip(col) {
                    *ri -= wj * a;
                }
            }
        }
        r
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Largest violation of: `2X_jᵀr ∈ α·∂|w_j|` for every j, and `Σr = 0`.
pub fn kkt_violation(cols: &Columns, residual: &[f64], w: &[f64], alpha: f64) -> f64 {
    let mut worst = 2.0 * residual.iter().sum::<f64>().abs();
    for (col, wj) in cols.cols.iter().zip(w) {
        let g = 2.0 * dot(col, residual);
        let v = if *wj == 0.0 {
            (g.abs() - alpha).max(0.0)
        } else {
            (g - alpha * wj.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Coordinate descent state in covariance form: `c = Xᵀr` and `Σr` are
/// updated in O(d) per coordinate instead of touching every row.
struct State<'a> {
    cols: &'a Columns,
    y: &'a [f64],
    w: Vec<f64>,
    b: f64,
    c: Vec<f64>,
    sum_r: f64,
}

impl State<'_> {
    fn refresh(&mut self) -> Vec<f64> {
        let r = self.cols.residual(self.y, &self.w, self.b);
        self.c = self.cols.cols.iter().map(|col| dot(col, &r)).collect();
        self.sum_r = r.iter().sum();
        r
    }

    fn objective(&self, alpha: f64) -> f64 {
        let r = self.cols.residual(self.y, &self.w, self.b);
        r.iter().map(|v| v * v).sum::<f64>() + alpha * self.w.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Newton step on the nonzero coefficients with their signs held fixed,
    /// cut short where the first coefficient reaches zero. A small ridge keeps
    /// the reduced system solvable when active columns are collinear; along
    /// such directions the step runs to a sign boundary.
    fn newton(&mut self, alpha: f64) -> Step {
        let d = self.cols.dim();
        let n = self.cols.n as f64;
        let active: Vec<usize> = (0..d).filter(|&j| self.w[j] != 0.0).collect();
        let m = active.len();
        if m == 0 {
            return Step::Full;
        }
        let mean_r = self.sum_r / n;
        let mut h = vec![0.0; m * m];
        for (p, &j) in active.iter().enumerate() {
            for (q, &k) in active.iter().enumerate() {
                h[p * m + q] =
                    self.cols.gram[j * d + k] - self.cols.sums[j] * self.cols.sums[k] / n;
            }
        }
        let trace: f64 = (0..m).map(|p| h[p * m + p]).sum();
        for p in 0..m {
            h[p * m + p] += 1e-10 * trace / m as f64;
        }
        let g: Vec<f64> = active
            .iter()
            .map(|&j| self.c[j] - self.cols.sums[j] * mean_r - alpha / 2.0 * self.w[j].signum())
            .collect();
        let Some(step) = cholesky_solve(&mut h, m, g) else {
            return Step::Failed;
        };
        let mut t = 1.0;
        let mut stop = None;
        for (p, &j) in active.iter().enumerate() {
            let wj = self.w[j];
            if step[p] * wj < 0.0 {
                let tj = -wj / step[p];
                if tj < t {
                    t = tj;
                    stop = Some(j);
                }
            }
        }
        let before = self.objective(alpha);
        let (w_old, b_old) = (self.w.clone(), self.b);
        let mut shift = 0.0;
        for (p, &j) in active.iter().enumerate() {
            let new = self.w[j] + t * step[p];
            shift += self.cols.sums[j] * t * step[p];
            self.w[j] = if new * self.w[j] > 0.0 { new } else { 0.0 };
        }
        if let Some(j) = stop {
            self.w[j] = 0.0;
        }
        self.b += (self.sum_r - shift) / n;
        if !(self.objective(alpha) <= before) {
            self.w = w_old;
            self.b = b_old;
            self.refresh();
            return Step::Failed;
        }
        self.refresh();
        if stop.is_some() {
            Step::Clipped
        } else {
            Step::Full
        }
    }

    /// One cyclic pass over `coords` followed by the intercept update;
    /// returns the largest change.
    fn sweep(&mut self, coords: &[usize], alpha: f64) -> f64 {
        let d = self.cols.dim();
        let mut max_change: f64 = 0.0;
        for &j in coords {
            let nj = self.cols.sq_norms[j];
            if nj == 0.0 {
                self.w[j] = 0.0;
                continue;
            }
            let rho = self.c[j] + nj * self.w[j];
            let new = soft_threshold(rho, alpha / 2.0) / nj;
            let delta = new - self.w[j];
            if delta != 0.0 {
                let g = &self.cols.gram[j * d..(j + 1) * d];
                for (ck, gk) in self.c.iter_mut().zip(g) {
                    *ck -= delta * gk;
                }
                self.sum_r -= delta * self.cols.sums[j];
                self.w[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        let shift = self.sum_r / self.cols.n as f64;
        if shift != 0.0 {
            self.b += shift;
            for (ck, sk) in self.c.iter_mut().zip(&self.cols.sums) {
                *ck -= shift * sk;
            }
            self.sum_r -= shift * self.cols.n as f64;
            max_change = max_change.max(shift.abs());
        }
        max_change
    }
}

enum Step {
    Full,
    Clipped,
    Failed,
}

/// Solves `H x = g` in place for a symmetric positive definite `m × m` matrix.
fn cholesky_solve(h: &mut [f64], m: usize, mut g: Vec<f64>) -> Option<Vec<f64>> {
    for j in 0..m {
        let mut diag = h[j * m + j];
        for k in 0..j {
            diag -= h[j * m + k] * h[j * m + k];
        }
        if !(diag > 0.0) {
            return None;
        }
        let diag = diag.sqrt();
        h[j * m + j] = diag;
        for i in j + 1..m {
            let mut v = h[i * m + j];
            for k in 0..j {
                v -= h[i * m + k] * h[j * m + k];
            }
            h[i * m + j] = v / diag;
        }
    }
    for i in 0..m {
        for k in 0..i {
            g[i] -= h[i * m + k] * g[k];
        }
        g[i] /= h[i * m + i];
    }
    for i in (0..m).rev() {
        for k in i + 1..m {
            g[i] -= h[k * m + i] * g[k];
        }
        g[i] /= h[i * m + i];
    }
    Some(g)
}

/// Coordinate descent from a warm start `(w, b)`. Between full sweeps the
/// nonzero coefficients are refined by sign-constrained Newton steps;
/// convergence is declared on a full sweep whose largest change is below
/// `tol` and whose exact KKT violation is within `kkt_tol`.
pub fn lasso_solve_from(
    cols: &Columns,
    y: &[f64],
    alpha: f64,
    params: &LassoParams,
    w: Vec<f64>,
    b: f64,
) -> Result<LassoSolution> {
    if y.len() != cols.n || w.len() != cols.dim() {
        return Err(Error::Dimension(
            "Lasso target or warm start has the wrong length".into(),
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Lasso targets".into()));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Config(format!(
            "Lasso alpha must be non-negative, got {alpha}"
        )));
    }
    let mut st = State {
        cols,
        y,
        w,
        b,
        c: vec![],
        sum_r: 0.0,
    };
    st.refresh();
    let all: Vec<usize> = (0..cols.dim()).collect();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < params.max_sweeps {
        sweeps += 1;
        if st.sweep(&all, alpha) < params.tol {
            let r = st.refresh();
            if kkt_violation(cols, &r, &st.w, alpha) <= params.kkt_tol {
                converged = true;
                break;
            }
        }
        for _ in 0..cols.dim() + 1 {
            match st.newton(alpha) {
                Step::Full => break,
                Step::Clipped => continue,
                Step::Failed => {
                    let active: Vec<usize> =
                        all.iter().copied().filter(|&j| st.w[j] != 0.0).collect();
                    while sweeps < params.max_sweeps {
                        sweeps += 1;
                        if st.sweep(&active, alpha) < params.tol {
                            break;
                        }
                    }
                    break;
                }
            }
        }
    }
    let r = st.refresh();
    let kkt = kkt_violation(cols, &r, &st.w, alpha);
    if !converged {
        log::warn!("Lasso stopped after {sweeps} sweeps with KKT violation {kkt:.3e}");
    }
    Ok(LassoSolution {
        w: st.w,
        b: st.b,
        alpha,
        kkt_certificate: kkt,
        sweeps,
        converged,
    })
}

pub fn lasso_solve(
    x: &[Vec<f64>],
    y: &[f64],
    alpha: f64,
    params: &LassoParams,
) -> Result<LassoSolution> {
    let cols = Columns::from_rows(x)?;
    let b = y.iter().sum::<f64>() / y.len().max(1) as f64;
    lasso_solve_from(&cols, y, alpha, params, vec![0.0; cols.dim()], b)
}

/// Warm-started fits along `alphas`, which should be decreasing.
pub fn lasso_path(
    x: &[Vec<f64>],
    y: &[f64],
    alphas: &[f64],
    params: &LassoParams,
) -> Result<Vec<LassoSolution>> {
    let cols = Columns::from_rows(x)?;
    let mut w = vec![0.0; cols.dim()];
    let mut b = y.iter().sum::<f64>() / y.len().max(1) as f64;
    let mut out = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let s = lasso_solve_from(&cols, y, a, params, w, b)?;
        w = s.w.clone();
        b = s.b;
        out.push(s);
    }
    Ok(out)
}
