//! Reference computations written independently of the library, used as
//! oracles by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Plain alternating updates until nothing moves.
pub fn em_reference(rows: &[Vec<Option<f64>>], floor: f64) -> (Vec<Option<f64>>, Vec<f64>) {
    let k = rows[0].len();
    let mut lam = vec![1.0; k];
    let mut y: Vec<Option<f64>> = vec![None; rows.len()];
    for it in 0..200_000 {
        let mut change: f64 = 0.0;
        for (i, row) in rows.iter().enumerate() {
            let present: Vec<(f64, f64)> = row
                .iter()
                .zip(&lam)
                .filter_map(|(v, l)| v.map(|v| (v, *l)))
                .collect();
            let den: f64 = present.iter().map(|p| p.1).sum();
            let next = (den > 0.0).then(|| present.iter().map(|p| p.0 * p.1).sum::<f64>() / den);
            if let (Some(a), Some(b)) = (y[i], next) {
                change = change.max((a - b).abs());
            }
            y[i] = next;
        }
        for (j, l) in lam.iter_mut().enumerate() {
            let res: Vec<f64> = rows
                .iter()
                .zip(&y)
                .filter_map(|(r, yi)| Some(r[j]? - (*yi)?))
                .collect();
            let n = res.len() as f64;
            *l = n / res.iter().map(|e| e * e).sum::<f64>().max(n * floor);
        }
        if it > 0 && change < 1e-15 {
            break;
        }
    }
    (y, lam)
}

/// Random integer rating matrix where every rater has at least two ratings
/// and every item at least one.
pub fn random_ratings(
    rng: &mut ChaCha8Rng,
    max_items: usize,
    max_raters: usize,
) -> Vec<Vec<Option<f64>>> {
    loop {
        let n = rng.random_range(3..=max_items);
        let k = rng.random_range(2..=max_raters);
        let rows: Vec<Vec<Option<f64>>> = (0..n)
            .map(|_| {
                (0..k)
                    .map(|_| {
                        rng.random_bool(0.85)
                            .then(|| rng.random_range(1..=7) as f64)
                    })
                    .collect()
            })
            .collect();
        let rater_ok = (0..k).all(|j| rows.iter().filter(|r| r[j].is_some()).count() >= 2);
        let item_ok = rows.iter().all(|r| r.iter().any(Option::is_some));
        if rater_ok && item_ok {
            return rows;
        }
    }
}

/// Krippendorff's alpha from pairable values: observed disagreement within
/// units against expected disagreement over all pairs of pairable values.
pub fn krippendorff_reference(rows: &[Vec<Option<f64>>], ordinal: bool) -> f64 {
    let units: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().flatten().copied().collect::<Vec<f64>>())
        .filter(|u| u.len() >= 2)
        .collect();
    let pooled: Vec<f64> = units.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let count = |v: f64| pooled.iter().filter(|&&p| p == v).count() as f64;
    let delta2 = |a: f64, b: f64| -> f64 {
        if !ordinal {
            return (a - b) * (a - b);
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let mut seen: Vec<f64> = pooled
            .iter()
            .copied()
            .filter(|&v| v >= lo && v <= hi)
            .collect();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        let between: f64 = seen.iter().map(|&v| count(v)).sum();
        (between - (count(lo) + count(hi)) / 2.0).powi(2)
    };
    let mut d_o = 0.0;
    for u in &units {
        let m = u.len() as f64;
        for (i, &a) in u.iter().enumerate() {
            for (j, &b) in u.iter().enumerate() {
                if i != j {
                    d_o += delta2(a, b) / (m - 1.0);
                }
            }
        }
    }
    d_o /= n;
    let mut d_e = 0.0;
    for (i, &a) in pooled.iter().enumerate() {
        for (j, &b) in pooled.iter().enumerate() {
            if i != j {
                d_e += delta2(a, b);
            }
        }
    }
    d_e /= n * (n - 1.0);
    1.0 - d_o / d_e
}

/// Positive-negative pairs won by the positive, ties counting half.
pub fn auc_brute(labels: &[bool], scores: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (lp, sp) in labels.iter().zip(scores) {
        for (ln, sn) in labels.iter().zip(scores) {
            if *lp && !*ln {
                pairs += 1.0;
                if sp > sn {
                    wins += 1.0;
                } else if sp == sn {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

pub fn pearson_textbook(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let saa: f64 = a.iter().map(|x| x * x).sum();
    let sbb: f64 = b.iter().map(|x| x * x).sum();
    (n * sab - sa * sb) / ((n * saa - sa * sa).sqrt() * (n * sbb - sb * sb).sqrt())
}

/// Solves `A z = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut z = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|k| a[r][k] * z[k]).sum();
        z[r] = (b[r] - tail) / a[r][r];
    }
    z
}

/// Least squares with an intercept through the centered normal equations.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let (n, d) = (x.len() as f64, x[0].len());
    let mx: Vec<f64> = (0..d)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let my = y.iter().sum::<f64>() / n;
    let gram: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            (0..d)
                .map(|k| x.iter().map(|r| (r[j] - mx[j]) * (r[k] - mx[k])).sum())
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = (0..d)
        .map(|j| {
            x.iter()
                .zip(y)
                .map(|(r, v)| (r[j] - mx[j]) * (v - my))
                .sum()
        })
        .collect();
    let w = solve(gram, rhs);
    let b = my - w.iter().zip(&mx).map(|(a, m)| a * m).sum::<f64>();
    (w, b)
}

/// Centered columns made orthonormal by Gram-Schmidt, returned as rows.
pub fn orthonormal_design(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < d {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|e| *e -= m);
        for _ in 0..2 {
            for c in &cols {
                let p: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(e, ce)| *e -= p * ce);
            }
        }
        let norm = v.iter().map(|e| e * e).sum::<f64>().sqrt();
        if norm > 1e-3 {
            cols.push(v.into_iter().map(|e| e / norm).collect());
        }
    }
    (0..n)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

/// Largest violation of the Lasso optimality conditions for
/// `Σ r² + α‖w‖₁`, computed from scratch.
pub fn lasso_kkt(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, alpha: f64) -> f64 {
    let r: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(row, v)| v - b - row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>())
        .collect();
    let mut worst = 2.0 * r.iter().sum::<f64>().abs();
    for (j, wj) in w.iter().enumerate() {
        let g = 2.0 * x.iter().zip(&r).map(|(row, e)| row[j] * e).sum::<f64>();
        let v = if *wj == 0.0 {
            (g.abs() - alpha).max(0.0)
        } else {
            (g - alpha * wj.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// ε-SVR dual in minimization form over `(α, α̂)`.
pub fn svr_dual(x: &[Vec<f64>], y: &[f64], a: &[f64], ah: &[f64], eps: f64) -> f64 {
    let n = y.len();
    let beta: Vec<f64> = (0..n).map(|i| a[i] - ah[i]).collect();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            let k: f64 = x[i].iter().zip(&x[j]).map(|(p, q)| p * q).sum();
            quad += beta[i] * beta[j] * k;
        }
    }
    0.5 * quad + eps * (a.iter().sum::<f64>() + ah.iter().sum::<f64>())
        - y.iter().zip(&beta).map(|(v, b)| v * b).sum::<f64>()
}

/// Minimum of the ε-SVR dual by accelerated projected gradient over
/// `[0, C]^{2n}` intersected with `Σα = Σα̂`. Returns the objective value.
pub fn svr_qp_oracle(x: &[Vec<f64>], y: &[f64], c: f64, eps: f64, iterations: usize) -> f64 {
    let n = y.len();
    let k: Vec<Vec<f64>> = x
        .iter()
        .map(|a| {
            x.iter()
                .map(|b| a.iter().zip(b).map(|(p, q)| p * q).sum())
                .collect()
        })
        .collect();
    let trace: f64 = (0..n).map(|i| k[i][i]).sum();
    let step = 1.0 / (2.0 * trace + 1e-12);
    let sign = |i: usize| if i < n { 1.0 } else { -1.0 };

    let project = |z: &[f64]| -> Vec<f64> {
        let at = |tau: f64| -> Vec<f64> {
            (0..2 * n)
                .map(|i| (z[i] - tau * sign(i)).clamp(0.0, c))
                .collect()
        };
        let bal = |v: &[f64]| (0..2 * n).map(|i| sign(i) * v[i]).sum::<f64>();
        let span = z.iter().fold(0.0f64, |m, v| m.max(v.abs())) + c + 1.0;
        let (mut lo, mut hi) = (-span, span);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if bal(&at(mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi))
    };
    let grad = |v: &[f64]| -> Vec<f64> {
        let beta: Vec<f64> = (0..n).map(|i| v[i] - v[n + i]).collect();
        let kb: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum())
            .collect();
        (0..2 * n)
            .map(|i| sign(i) * (kb[i % n] - y[i % n]) + eps)
            .collect()
    };
    let objective = |v: &[f64]| svr_dual(x, y, &v[..n], &v[n..], eps);

    let mut v = vec![0.0; 2 * n];
    let mut z = v.clone();
    let mut t = 1.0f64;
    let mut best = objective(&v);
    for _ in 0..iterations {
        let g = grad(&z);
        let step_to: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let next = project(&step_to);
        let f = objective(&next);
        if f > best {
            // Restart the momentum when the objective goes up.
            t = 1.0;
            z = v.clone();
            continue;
        }
        best = f;
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = (0..2 * n)
            .map(|i| next[i] + (t - 1.0) / tn * (next[i] - v[i]))
            .collect();
        v = next;
        t = tn;
    }
    best
}

pub fn random_svr_instance(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = rng.random_range(3..=10);
    let d = rng.random_range(1..=3);
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let y = x
        .iter()
        .map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-0.8..0.8))
        .collect();
    (x, y)
}
