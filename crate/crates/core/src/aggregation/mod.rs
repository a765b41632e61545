//! Consensus ratings with per-rater reliability, and agreement diagnostics.
//!
//! Each rater's score is modeled as the latent true score plus zero-mean
//! Gaussian noise with rater-specific precision λ. Maximizing the
//! log-likelihood
//!
//! ```text
//! L = Σ_j Σ_{i rated by j} [ ½ log λ_j − ½ λ_j (y_ij − y_i)² ]
//! ```
//!
//! alternates two closed-form updates: the consensus becomes the
//! precision-weighted mean of present ratings, and each precision becomes the
//! inverse of the rater's mean squared residual, `λ_j = N_j / Σ_i (y_ij − y_i)²`.
//! The residual sum is floored at `N_j · variance_floor` so a rater who matches
//! the consensus exactly keeps a finite precision.

mod agreement;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{RatingGrid, RatingMatrix};
use crate::error::{Error, Result};
use crate::traits::TraitId;

pub use agreement::{
    agreement_report, krippendorff_alpha, krippendorff_alpha_grid, one_vs_rest_correlation,
    one_vs_rest_grid, AgreementRow, DistanceMetric,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub max_iterations: usize,
    /// Stop once the largest absolute change of any consensus value in a sweep
    /// falls below this.
    pub convergence_tol: f64,
    pub variance_floor: f64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            max_iterations: 500,
            convergence_tol: 1e-8,
            variance_floor: 1e-4,
        }
    }
}

impl AggregationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Config("convergence_tol must be positive".into()));
        }
        if !(self.variance_floor > 0.0) || !self.variance_floor.is_finite() {
            return Err(Error::Config("variance_floor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    /// Log-likelihood after the sweep's precision update.
    pub log_likelihood: f64,
    pub max_change: f64,
    /// Whether any precision was capped by the variance floor in this sweep.
    pub clamped: bool,
}

/// Consensus for one trait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitConsensus {
    pub items: Vec<String>,
    pub raters: Vec<String>,
    /// `None` for items without any rating from an eligible rater.
    pub y: Vec<Option<f64>>,
    /// `None` for raters excluded for having fewer than two ratings.
    pub lambda: Vec<Option<f64>>,
    pub excluded: Vec<String>,
    pub iterations_run: usize,
    pub converged: bool,
    pub final_log_likelihood: f64,
    pub trace: Vec<SweepTrace>,
}

impl TraitConsensus {
    pub fn value(&self, item: &str) -> Option<f64> {
        self.items
            .iter()
            .position(|i| i == item)
            .and_then(|k| self.y[k])
    }

    pub fn precision(&self, rater: &str) -> Option<f64> {
        self.raters
            .iter()
            .position(|r| r == rater)
            .and_then(|k| self.lambda[k])
    }
}

fn log_likelihood(grid: &RatingGrid, eligible: &[bool], y: &[Option<f64>], lambda: &[f64]) -> f64 {
    let mut ll = 0.0;
    for i in 0..grid.n_items() {
        let Some(yi) = y[i] else { continue };
        for j in 0..grid.n_raters() {
            if !eligible[j] {
                continue;
            }
            if let Some(v) = grid.get(i, j) {
                ll += 0.5 * lambda[j].ln() - 0.5 * lambda[j] * (v - yi) * (v - yi);
            }
        }
    }
    ll
}

/// Runs the alternating updates on a single trait's grid.
pub fn em_aggregate_grid(grid: &RatingGrid, config: &AggregationConfig) -> Result<TraitConsensus> {
    config.validate()?;
    let (n, k) = (grid.n_items(), grid.n_raters());
    if grid.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("rating grid".into()));
    }

    let counts: Vec<usize> = (0..k)
        .map(|j| (0..n).filter(|&i| grid.get(i, j).is_some()).count())
        .collect();
    let eligible: Vec<bool> = counts.iter().map(|&c| c >= 2).collect();
    let excluded: Vec<String> = (0..k)
        .filter(|&j| !eligible[j])
        .map(|j| grid.raters[j].clone())
        .collect();
    for r in &excluded {
        log::warn!("rater {r} has fewer than two ratings; excluded from aggregation");
    }
    let n_eligible = eligible.iter().filter(|&&e| e).count();
    if n_eligible < 2 {
        return Err(Error::Aggregation(format!(
            "{n_eligible} rater(s) with at least two ratings; need two"
        )));
    }

    let mut lambda = vec![1.0; k];
    let mut y: Vec<Option<f64>> = vec![None; n];
    let mut trace = Vec::new();
    let mut converged = false;

    for sweep in 1..=config.max_iterations {
        // Consensus update: precision-weighted mean of present ratings.
        let mut max_change: f64 = 0.0;
        for i in 0..n {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..k {
                if let (true, Some(v)) = (eligible[j], grid.get(i, j)) {
                    num += lambda[j] * v;
                    den += lambda[j];
                }
            }
            let next = (den > 0.0).then(|| num / den);
            if let (Some(a), Some(b)) = (y[i], next) {
                max_change = max_change.max((a - b).abs());
            }
            y[i] = next;
        }

        // Precision update.
        let mut clamped = false;
        for j in 0..k {
            if !eligible[j] {
                continue;
            }
            let mut ss = 0.0;
            let mut nj = 0usize;
            for i in 0..n {
                if let (Some(v), Some(yi)) = (grid.get(i, j), y[i]) {
                    ss += (v - yi) * (v - yi);
                    nj += 1;
                }
            }
            let floor = nj as f64 * config.variance_floor;
            if ss < floor {
                clamped = true;
            }
            lambda[j] = nj as f64 / ss.max(floor);
        }

        let ll = log_likelihood(grid, &eligible, &y, &lambda);
        trace.push(SweepTrace {
            log_likelihood: ll,
            max_change: if sweep == 1 {
                f64::INFINITY
            } else {
                max_change
            },
            clamped,
        });
        if sweep > 1 && max_change < config.convergence_tol {
            converged = true;
            break;
        }
    }

    let final_ll = trace.last().map_or(f64::NAN, |t| t.log_likelihood);
    Ok(TraitConsensus {
        items: grid.items.clone(),
        raters: grid.raters.clone(),
        y,
        lambda: (0..k).map(|j| eligible[j].then_some(lambda[j])).collect(),
        excluded,
        iterations_run: trace.len(),
        converged,
        final_log_likelihood: final_ll,
        trace,
    })
}

pub fn em_aggregate(
    matrix: &RatingMatrix,
    t: TraitId,
    config: &AggregationConfig,
) -> Result<TraitConsensus> {
    em_aggregate_grid(&matrix.grid(t), config).map_err(|e| match e {
        Error::Aggregation(m) => Error::Aggregation(format!("{t}: {m}")),
        other => other,
    })
}

/// Arithmetic mean of present scores per item; `None` where an item has none.
pub fn simple_mean_grid(grid: &RatingGrid) -> Vec<Option<f64>> {
    (0..grid.n_items())
        .map(|i| {
            let v: Vec<f64> = grid.row(i).iter().flatten().copied().collect();
            crate::stats::mean(&v)
        })
        .collect()
}

pub fn simple_mean(matrix: &RatingMatrix, t: TraitId) -> Vec<Option<f64>> {
    simple_mean_grid(&matrix.grid(t))
}

/// Consensus for every trait that could be aggregated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub traits: BTreeMap<TraitId, TraitConsensus>,
    /// Traits that failed aggregation, with the reason.
    pub failures: BTreeMap<TraitId, String>,
}

impl GroundTruth {
    pub fn get(&self, t: TraitId) -> Option<&TraitConsensus> {
        self.traits.get(&t)
    }

    /// Consensus values aligned to `ids`.
    pub fn series(&self, t: TraitId, ids: &[String]) -> Vec<Option<f64>> {
        match self.traits.get(&t) {
            None => vec![None; ids.len()],
            Some(c) => {
                let index: BTreeMap<&str, usize> = c
                    .items
                    .iter()
                    .enumerate()
                    .map(|(k, s)| (s.as_str(), k))
                    .collect();
                ids.iter()
                    .map(|id| index.get(id.as_str()).and_then(|&k| c.y[k]))
                    .collect()
            }
        }
    }
}

/// Aggregates all sixteen traits independently, in parallel.
pub fn aggregate_all(matrix: &RatingMatrix, config: &AggregationConfig) -> Result<GroundTruth> {
    config.validate()?;
    let results: Vec<(TraitId, Result<TraitConsensus>)> = TraitId::ALL
        .par_iter()
        .map(|&t| (t, em_aggregate(matrix, t, config)))
        .collect();
    let mut truth = GroundTruth::default();
    for (t, r) in results {
        match r {
            Ok(c) => {
                truth.traits.insert(t, c);
            }
            Err(e) => {
                log::warn!("aggregation failed for {t}: {e}");
                truth.failures.insert(t, e.to_string());
            }
        }
    }
    if truth.traits.is_empty() {
        return Err(Error::Aggregation("no trait could be aggregated".into()));
    }
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&[Option<f64>]]) -> RatingGrid {
        RatingGrid::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identical_raters_give_common_rating_and_capped_precision() {
        let rows: Vec<Vec<Option<f64>>> = [3.0, 5.0, 2.0, 6.0, 4.0]
            .iter()
            .map(|&v| vec![Some(v); 9])
            .collect();
        let g = RatingGrid::from_rows(&rows).unwrap();
        let cfg = AggregationConfig::default();
        let c = em_aggregate_grid(&g, &cfg).unwrap();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(c.y[i], row[0]);
        }
        let cap = 1.0 / cfg.variance_floor;
        for l in &c.lambda {
            assert_eq!(l.unwrap(), cap);
        }
        assert!(c.converged);
    }

    #[test]
    fn single_sweep_reproduces_plain_mean() {
        let g = grid(&[
            &[Some(3.0), Some(5.0), Some(7.0)],
            &[Some(1.0), None, Some(7.0)],
            &[Some(4.0), Some(4.0), Some(2.0)],
        ]);
        let cfg = AggregationConfig {
            max_iterations: 1,
            ..Default::default()
        };
        let c = em_aggregate_grid(&g, &cfg).unwrap();
        assert_eq!(c.y, simple_mean_grid(&g));
        assert_eq!(c.iterations_run, 1);
    }

    #[test]
    fn simple_mean_examples() {
        let g = grid(&[
            &[Some(3.0), Some(5.0), Some(7.0)],
            &[Some(4.0), None, None],
            &[Some(1.0), Some(7.0), None],
            &[None, None, None],
        ]);
        assert_eq!(
            simple_mean_grid(&g),
            vec![Some(5.0), Some(4.0), Some(4.0), None]
        );
    }

    #[test]
    fn sparse_rater_excluded_and_all_excluded_errors() {
        let g = grid(&[
            &[Some(3.0), Some(5.0), Some(6.0)],
            &[Some(4.0), Some(4.0), None],
            &[Some(2.0), Some(3.0), None],
        ]);
        let c = em_aggregate_grid(&g, &AggregationConfig::default()).unwrap();
        assert_eq!(c.excluded, vec!["rater002".to_string()]);
        assert_eq!(c.lambda[2], None);

        let lonely = grid(&[&[Some(3.0), None], &[None, Some(4.0)]]);
        assert!(matches!(
            em_aggregate_grid(&lonely, &AggregationConfig::default()),
            Err(Error::Aggregation(_))
        ));
    }

    #[test]
    fn reliable_rater_gets_higher_precision() {
        // Rater A reports the truth, B adds alternating ±2, C small noise.
        // With only A and B the plain mean is itself a (unstable) fixed point.
        let truth = [2.0, 3.0, 4.0, 5.0, 6.0, 3.0, 4.0, 5.0, 4.0, 3.0];
        let rows: Vec<Vec<Option<f64>>> = truth
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let noise = if i % 2 == 0 { 2.0 } else { -2.0 };
                let small = [0.5, -0.5, 0.0][i % 3];
                vec![Some(t), Some(t + noise), Some(t + small)]
            })
            .collect();
        let g = RatingGrid::from_rows(&rows).unwrap();
        let c = em_aggregate_grid(&g, &AggregationConfig::default()).unwrap();
        let (la, lb) = (c.lambda[0].unwrap(), c.lambda[1].unwrap());
        assert!(la > lb);
        let mean = simple_mean_grid(&g);
        for i in 0..truth.len() {
            let y = c.y[i].unwrap();
            assert!((y - truth[i]).abs() < (mean[i].unwrap() - truth[i]).abs());
        }
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = AggregationConfig {
            variance_floor: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
