//! Comparison of pipeline outputs against a synthetic corpus's ground truth.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::aggregation::{aggregate_all, AggregationConfig, GroundTruth};
use crate::corpus::RatingMatrix;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::regression::{lasso_train, LassoParams, RegressionModel};
use crate::stats;
use crate::traits::TraitId;

use super::{is_closed_form, SynthTruth};

pub const FEATURE_TOL: f64 = 1e-6;
pub const MIN_SPEARMAN: f64 = 0.9;
pub const INVARIANCE_TOL: f64 = 1e-9;
const PLANTED_TOP: usize = 5;
const LEARNED_TOP: usize = 10;

pub struct OracleInputs<'a> {
    /// Extracted features, before or after imputation.
    pub features: &'a FeatureMatrix,
    pub ratings: Option<&'a RatingMatrix>,
    pub consensus: Option<&'a GroundTruth>,
    pub models: &'a [RegressionModel],
    pub aggregation: &'a AggregationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl fmt::Display for OracleCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: value {:.3e}, tolerance {:.3e}; {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&OracleCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn feature_recovery(truth: &SynthTruth, x: &FeatureMatrix) -> OracleCheck {
    let mut worst = (0.0f64, String::from("none"), String::new());
    let mut missing = Vec::new();
    for (j, col) in truth.features.columns.iter().enumerate() {
        if !is_closed_form(col) {
            continue;
        }
        let Some(xj) = x.column_index(col) else {
            missing.push(col.clone());
            continue;
        };
        for (i, id) in truth.interviews.iter().enumerate() {
            let (Some(want), Some(xi)) = (truth.features.rows[i][j], x.row_index(id)) else {
                continue;
            };
            let err = (x.get(xi, xj) - want).abs();
            if !(err <= worst.0) {
                worst = (
                    if err.is_nan() { f64::INFINITY } else { err },
                    col.clone(),
                    id.clone(),
                );
            }
        }
    }
    let passed = missing.is_empty() && worst.0 <= FEATURE_TOL;
    let detail = if missing.is_empty() {
        format!("worst column {} (interview {})", worst.1, worst.2)
    } else {
        format!("columns absent from the extraction: {}", missing.join(", "))
    };
    OracleCheck {
        name: "feature_recovery".into(),
        passed,
        value: worst.0,
        tolerance: FEATURE_TOL,
        detail,
    }
}

fn lambda_ranking(truth: &SynthTruth, consensus: &GroundTruth) -> OracleCheck {
    let mut worst: Option<(f64, TraitId)> = None;
    for (t, c) in &consensus.traits {
        let (mut lam, mut inv_var) = (Vec::new(), Vec::new());
        for (r, s) in truth.raters.iter().zip(&truth.true_sigmas) {
            if let Some(l) = c.precision(r) {
                lam.push(l);
                inv_var.push(1.0 / (s * s));
            }
        }
        let rho = stats::spearman(&lam, &inv_var).unwrap_or(f64::NAN);
        if worst.is_none_or(|(w, _)| !(rho >= w)) {
            worst = Some((rho, *t));
        }
    }
    let (value, detail) = match worst {
        Some((v, t)) => (v, format!("lowest for {t}")),
        None => (f64::NAN, "no consensus traits".into()),
    };
    OracleCheck {
        name: "lambda_ranking".into(),
        passed: value >= MIN_SPEARMAN,
        value,
        tolerance: MIN_SPEARMAN,
        detail,
    }
}

fn support(truth: &SynthTruth, model: &RegressionModel, t: TraitId) -> OracleCheck {
    let planted: Vec<String> = truth
        .planted_ranking(t)
        .into_iter()
        .take(PLANTED_TOP)
        .map(|(n, _)| n)
        .collect();
    let mut learned: Vec<(usize, f64)> = model.w.iter().copied().enumerate().collect();
    learned.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    let top: Vec<&str> = learned
        .iter()
        .take(LEARNED_TOP)
        .filter(|(_, w)| *w != 0.0)
        .map(|(j, _)| model.columns[*j].as_str())
        .collect();
    let found = planted.iter().filter(|p| top.contains(&p.as_str())).count();
    let need = planted.len().min(PLANTED_TOP - 1);
    OracleCheck {
        name: format!("support:{t}:{}", model.kind),
        passed: found >= need,
        value: found as f64,
        tolerance: need as f64,
        detail: format!(
            "{found} of {} planted features in the learned top {LEARNED_TOP}",
            planted.len()
        ),
    }
}

fn normalization_equivariance(truth: &SynthTruth, x: &FeatureMatrix) -> Result<OracleCheck> {
    let t = truth
        .planted_weights
        .keys()
        .next()
        .copied()
        .unwrap_or(TraitId::Overall);
    let y_all = &truth.true_y[&t];
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (i, id) in truth.interviews.iter().enumerate() {
        if let Some(r) = x.row_index(id) {
            rows.push(r);
            y.push(y_all[i]);
        }
    }
    let doubled = FeatureMatrix::new(
        x.ids().to_vec(),
        x.columns().to_vec(),
        x.modalities().to_vec(),
        (0..x.n_rows())
            .flat_map(|i| x.row(i).iter().map(|v| 2.0 * v))
            .collect(),
    )?;
    let params = LassoParams {
        alpha: Some(0.01),
        ..LassoParams::default()
    };
    let a = lasso_train(x, &rows, &y, &params, Some(t))?;
    let b = lasso_train(&doubled, &rows, &y, &params, Some(t))?;
    let pa = a.predict_rows(x, &rows)?;
    let pb = b.predict_rows(&doubled, &rows)?;
    let dev = pa
        .iter()
        .zip(&pb)
        .map(|(p, q)| (p.raw - q.raw).abs())
        .fold(0.0, f64::max);
    Ok(OracleCheck {
        name: "normalization_equivariance".into(),
        passed: dev <= INVARIANCE_TOL,
        value: dev,
        tolerance: INVARIANCE_TOL,
        detail: format!("every column doubled, {t} predictions compared"),
    })
}

fn permutation_invariance(
    ratings: &RatingMatrix,
    config: &AggregationConfig,
) -> Result<OracleCheck> {
    let raters = ratings.raters();
    let renamed: BTreeMap<&str, String> = raters
        .iter()
        .enumerate()
        .map(|(j, r)| (r.as_str(), format!("p{:04}", raters.len() - j)))
        .collect();
    let permuted = RatingMatrix::from_records(
        ratings
            .records()
            .map(|(i, r, t, s)| (i.to_owned(), renamed[r].clone(), t, s)),
    )?;
    let a = aggregate_all(ratings, config)?;
    let b = aggregate_all(&permuted, config)?;
    let mut dev: f64 = 0.0;
    for (t, ca) in &a.traits {
        let cb = b
            .traits
            .get(t)
            .ok_or_else(|| Error::Aggregation(format!("{t} missing after rater permutation")))?;
        for item in &ca.items {
            if let (Some(u), Some(v)) = (ca.value(item), cb.value(item)) {
                dev = dev.max((u - v).abs());
            }
        }
        for r in raters {
            if let (Some(u), Some(v)) = (ca.precision(r), cb.precision(&renamed[r.as_str()])) {
                dev = dev.max((u - v).abs() / u.abs().max(1.0));
            }
        }
    }
    Ok(OracleCheck {
        name: "em_permutation_invariance".into(),
        passed: dev <= INVARIANCE_TOL,
        value: dev,
        tolerance: INVARIANCE_TOL,
        detail: "rater ids reversed".into(),
    })
}

/// Runs every check whose inputs are present.
pub fn oracle_check(truth: &SynthTruth, inputs: &OracleInputs) -> Result<OracleReport> {
    let mut checks = vec![feature_recovery(truth, inputs.features)];
    if let Some(c) = inputs.consensus {
        checks.push(lambda_ranking(truth, c));
    }
    for m in inputs.models {
        if let Some(t) = m.trait_id.filter(|t| truth.planted_weights.contains_key(t)) {
            checks.push(support(truth, m, t));
        }
    }
    checks.push(normalization_equivariance(truth, inputs.features)?);
    if let Some(r) = inputs.ratings {
        checks.push(permutation_invariance(r, inputs.aggregation)?);
    }
    Ok(OracleReport { checks })
}
