//! Feature normalization, linear ε-SVR and Lasso regressors, and the model
//! file that carries everything needed to predict from raw features.

mod lasso;
mod svr;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Modality};
use crate::traits::TraitId;

pub use lasso::{
    kkt_violation, lasso_path, lasso_solve, lasso_solve_from, soft_threshold, Columns, LassoParams,
    LassoSolution,
};
pub use svr::{svr_primal, svr_solve, SvrParams, SvrSolution};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const MIN_SIGMA: f64 = 1e-12;

/// Column standardization fitted on training rows. Columns whose standard
/// deviation falls below [`MIN_SIGMA`] are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mu: Vec<f64>,
    /// Population standard deviation; zero for dropped columns.
    pub sigma: Vec<f64>,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

impl Normalizer {
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .map(|&j| (x[j] - self.mu[j]) / self.sigma[j])
            .collect()
    }

    pub fn transform_rows(&self, m: &FeatureMatrix, rows: &[usize]) -> Vec<Vec<f64>> {
        rows.iter().map(|&i| self.transform(m.row(i))).collect()
    }
}

pub fn fit_normalizer(x: &FeatureMatrix, rows: &[usize]) -> Result<Normalizer> {
    if rows.len() < 2 {
        return Err(Error::Degenerate(format!(
            "normalizer needs at least 2 training rows, got {}",
            rows.len()
        )));
    }
    let n = rows.len() as f64;
    let d = x.n_cols();
    let mut mu = vec![0.0; d];
    let mut sigma = vec![0.0; d];
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for j in 0..d {
        let m = rows.iter().map(|&i| x.get(i, j)).sum::<f64>() / n;
        let var = rows.iter().map(|&i| (x.get(i, j) - m).powi(2)).sum::<f64>() / n;
        let s = var.sqrt();
        mu[j] = m;
        if s < MIN_SIGMA {
            dropped.push(j);
        } else {
            sigma[j] = s;
            kept.push(j);
        }
    }
    if !dropped.is_empty() {
        let names: Vec<&str> = dropped.iter().map(|&j| x.columns()[j].as_str()).collect();
        log::debug!(
            "dropping {} constant column(s): {}",
            names.len(),
            names.join(", ")
        );
    }
    Ok(Normalizer {
        mu,
        sigma,
        kept,
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svr,
    Lasso,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Svr, ModelKind::Lasso];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Svr => "svr",
            ModelKind::Lasso => "lasso",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svr" | "svm" => Ok(ModelKind::Svr),
            "lasso" => Ok(ModelKind::Lasso),
            _ => Err(Error::Config(format!("unknown model kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Hyperparameters {
    Svr { c: f64, epsilon: f64 },
    Lasso { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub version: u32,
    pub kind: ModelKind,
    #[serde(rename = "trait")]
    pub trait_id: Option<TraitId>,
    /// Input census; predictions take raw vectors in this column order.
    pub columns: Vec<String>,
    pub modalities: Vec<Modality>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// One weight per input column, on the standardized scale. Dropped
    /// constant columns carry weight zero.
    pub w: Vec<f64>,
    pub b: f64,
    pub hyperparameters: Hyperparameters,
    pub kkt_certificate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub raw: f64,
    /// `raw` clamped to the 1–7 rating scale.
    pub clamped: f64,
}

impl RegressionModel {
    fn assemble(
        kind: ModelKind,
        trait_id: Option<TraitId>,
        x: &FeatureMatrix,
        norm: &Normalizer,
        w_kept: &[f64],
        b: f64,
        hyperparameters: Hyperparameters,
        kkt_certificate: Option<f64>,
    ) -> Result<Self> {
        let mut w = vec![0.0; x.n_cols()];
        for (&j, v) in norm.kept.iter().zip(w_kept) {
            w[j] = *v;
        }
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::NonFinite("trained model parameters".into()));
        }
        Ok(RegressionModel {
            version: MODEL_FORMAT_VERSION,
            kind,
            trait_id,
            columns: x.columns().to_vec(),
            modalities: x.modalities().to_vec(),
            mu: norm.mu.clone(),
            sigma: norm.sigma.clone(),
            w,
            b,
            hyperparameters,
            kkt_certificate,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.columns.len() {
            return Err(Error::Dimension(format!(
                "feature vector has {} values, model expects {}",
                x.len(),
                self.columns.len()
            )));
        }
        let mut raw = self.b;
        for j in 0..x.len() {
            if self.sigma[j] > 0.0 && self.w[j] != 0.0 {
                raw += self.w[j] * (x[j] - self.mu[j]) / self.sigma[j];
            }
        }
        if !raw.is_finite() {
            return Err(Error::NonFinite("prediction".into()));
        }
        Ok(Prediction {
            raw,
            clamped: raw.clamp(1.0, 7.0),
        })
    }

    /// Predicts every listed row of a matrix whose columns match the model's.
    pub fn predict_rows(&self, m: &FeatureMatrix, rows: &[usize]) -> Result<Vec<Prediction>> {
        if m.columns() != self.columns.as_slice() {
            return Err(Error::Dimension(
                "feature census differs from the model's".into(),
            ));
        }
        rows.iter().map(|&i| self.predict(m.row(i))).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse(path.display().to_string(), e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self =
            serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(Error::parse(
                path.display().to_string(),
                format!("unsupported model format version {}", m.version),
            ));
        }
        let d = m.columns.len();
        if [m.modalities.len(), m.mu.len(), m.sigma.len(), m.w.len()]
            .iter()
            .any(|&l| l != d)
        {
            return Err(Error::parse(
                path.display().to_string(),
                "model vectors disagree in length",
            ));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub name: String,
    pub weight: f64,
    pub modality: Modality,
}

/// Nonzero weights by decreasing magnitude, ties in column order.
pub fn feature_weights(model: &RegressionModel, top_k: usize) -> Vec<WeightEntry> {
    let mut idx: Vec<usize> = (0..model.w.len()).filter(|&j| model.w[j] != 0.0).collect();
    idx.sort_by(|&a, &b| {
        model.w[b]
            .abs()
            .total_cmp(&model.w[a].abs())
            .then(a.cmp(&b))
    });
    idx.into_iter()
        .take(top_k)
        .map(|j| WeightEntry {
            name: model.columns[j].clone(),
            weight: model.w[j],
            modality: model.modalities[j],
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub svr: SvrParams,
    pub lasso: LassoParams,
}

fn check_targets(rows: &[usize], y: &[f64]) -> Result<()> {
    if rows.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} targets",
            rows.len(),
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training targets".into()));
    }
    Ok(())
}

/// Fits the normalizer on `rows` and trains an ε-SVR; `y[k]` is the target of
/// `rows[k]`.
pub fn svr_train(
    x: &FeatureMatrix,
    rows: &[usize],
    y: &[f64],
    params: &SvrParams,
    trait_id: Option<TraitId>,
) -> Result<RegressionModel> {
    check_targets(rows, y)?;
    let norm = fit_normalizer(x, rows)?;
    let z = norm.transform_rows(x, rows);
    let s = svr_solve(&z, y, params)?;
    RegressionModel::assemble(
        ModelKind::Svr,
        trait_id,
        x,
        &norm,
        &s.w,
        s.b,
        Hyperparameters::Svr {
            c: params.c,
            epsilon: params.epsilon,
        },
        None,
    )
}

/// Cross-validated penalty: the grid value with the lowest mean held-out
/// squared error, preferring the larger penalty on ties.
pub fn lasso_cv_alpha(
    x: &FeatureMatrix,
    rows: &[usize],
    y: &[f64],
    params: &LassoParams,
) -> Result<f64> {
    check_targets(rows, y)?;
    params.validate()?;
    let k = params.cv_folds.min(rows.len());
    if k < 2 {
        return Err(Error::Degenerate(
            "too few rows for cross-validation".into(),
        ));
    }
    let grid = params.grid();
    let mut sse = vec![0.0; grid.len()];
    for fold in 0..k {
        let (mut tr, mut ytr, mut va, mut yva) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (pos, (&r, &t)) in rows.iter().zip(y).enumerate() {
            if pos % k == fold {
                va.push(r);
                yva.push(t);
            } else {
                tr.push(r);
                ytr.push(t);
            }
        }
        let norm = fit_normalizer(x, &tr)?;
        let path = lasso_path(&norm.transform_rows(x, &tr), &ytr, &grid, params)?;
        let zva = norm.transform_rows(x, &va);
        for (g, s) in path.iter().enumerate() {
            sse[g] += zva
                .iter()
                .zip(&yva)
                .map(|(z, t)| {
                    let p = s.b + z.iter().zip(&s.w).map(|(a, w)| a * w).sum::<f64>();
                    (t - p).powi(2)
                })
                .sum::<f64>();
        }
    }
    let mut best = 0;
    for g in 1..grid.len() {
        if sse[g] < sse[best] {
            best = g;
        }
    }
    Ok(grid[best])
}

pub fn lasso_train(
    x: &FeatureMatrix,
    rows: &[usize],
    y: &[f64],
    params: &LassoParams,
    trait_id: Option<TraitId>,
) -> Result<RegressionModel> {
    check_targets(rows, y)?;
    params.validate()?;
    let alpha = match params.alpha {
        Some(a) => a,
        None => lasso_cv_alpha(x, rows, y, params)?,
    };
    let norm = fit_normalizer(x, rows)?;
    let s = lasso_solve(&norm.transform_rows(x, rows), y, alpha, params)?;
    RegressionModel::assemble(
        ModelKind::Lasso,
        trait_id,
        x,
        &norm,
        &s.w,
        s.b,
        Hyperparameters::Lasso { alpha },
        Some(s.kkt_certificate),
    )
}

pub fn train(
    kind: ModelKind,
    x: &FeatureMatrix,
    rows: &[usize],
    y: &[f64],
    config: &TrainConfig,
    trait_id: Option<TraitId>,
) -> Result<RegressionModel> {
    match kind {
        ModelKind::Svr => svr_train(x, rows, y, &config.svr, trait_id),
        ModelKind::Lasso => lasso_train(x, rows, y, &config.lasso, trait_id),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cols: &[&[f64]]) -> FeatureMatrix {
        let n = cols[0].len();
        let d = cols.len();
        let data = (0..n)
            .flat_map(|i| cols.iter().map(move |c| c[i]))
            .collect();
        FeatureMatrix::new(
            (0..n).map(|i| format!("i{i}")).collect(),
            (0..d).map(|j| format!("c{j}")).collect(),
            vec![Modality::Prosodic; d],
            data,
        )
        .unwrap()
    }

    #[test]
    fn normalizer_basics() {
        let m = matrix(&[&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]]);
        let n = fit_normalizer(&m, &[0, 1, 2]).unwrap();
        assert_eq!(n.mu[0], 2.0);
        assert!((n.sigma[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(n.dropped, vec![1]);
        assert!(fit_normalizer(&m, &[0]).is_err());
    }

    #[test]
    fn constant_model_predicts_bias() {
        let m = RegressionModel {
            version: MODEL_FORMAT_VERSION,
            kind: ModelKind::Svr,
            trait_id: None,
            columns: vec!["a".into()],
            modalities: vec![Modality::Facial],
            mu: vec![0.0],
            sigma: vec![1.0],
            w: vec![0.0],
            b: 4.2,
            hyperparameters: Hyperparameters::Svr {
                c: 1.0,
                epsilon: 0.1,
            },
            kkt_certificate: None,
        };
        assert_eq!(m.predict(&[123.0]).unwrap().raw, 4.2);
        assert!(m.predict(&[1.0, 2.0]).is_err());
        assert!(feature_weights(&m, 5).is_empty());
    }

    #[test]
    fn weights_ranked_by_magnitude() {
        let mut m = RegressionModel {
            version: MODEL_FORMAT_VERSION,
            kind: ModelKind::Lasso,
            trait_id: None,
            columns: vec!["a".into(), "b".into(), "c".into()],
            modalities: vec![Modality::Facial, Modality::Lexical, Modality::Prosodic],
            mu: vec![0.0; 3],
            sigma: vec![1.0; 3],
            w: vec![0.3, -0.5, 0.1],
            b: 0.0,
            hyperparameters: Hyperparameters::Lasso { alpha: 1.0 },
            kkt_certificate: Some(0.0),
        };
        let top: Vec<(String, f64)> = feature_weights(&m, 2)
            .into_iter()
            .map(|e| (e.name, e.weight))
            .collect();
        assert_eq!(top, vec![("b".to_string(), -0.5), ("a".to_string(), 0.3)]);
        m.w = vec![0.2, -0.2, 0.0];
        assert_eq!(feature_weights(&m, 3)[0].name, "a");
    }

    #[test]
    fn model_file_round_trip() {
        let x = matrix(&[&[1.0, 2.0, 3.0, 4.0], &[0.5, -1.0, 2.0, 0.0]]);
        let m = lasso_train(
            &x,
            &[0, 1, 2, 3],
            &[1.0, 2.0, 3.5, 4.0],
            &LassoParams {
                alpha: Some(0.1),
                ..Default::default()
            },
            Some(TraitId::Calm),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        m.save(&p).unwrap();
        assert_eq!(RegressionModel::load(&p).unwrap(), m);
    }
}
