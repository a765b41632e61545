//! Evaluation: the repeated random-split trial protocol, correlation and
//! median-split AUC, mutual information, trait and per-question correlation
//! tables, modality weight shares and ablations.

mod metrics;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{em_aggregate, AggregationConfig, GroundTruth};
use crate::corpus::PerQuestionRatings;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Modality};
use crate::regression::{feature_weights, train, ModelKind, RegressionModel, TrainConfig};
use crate::seed::{indexed_seed, sub_seed};
use crate::traits::TraitId;

pub use metrics::{
    auc_exact, auc_median_split, auc_sweep, entropy, median_split, mutual_information, pearson,
    AucMode, AucResult,
};
pub use report::{
    recommendations, write_ablation_csv, write_evaluation_csv, write_modality_csv,
    write_recommendations_csv, write_temporal_csv, write_trait_correlation_csv, write_trials_json,
    Recommendation,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialProtocol {
    pub n_trials: usize,
    pub train_fraction: f64,
    /// Master seed; trial `t` shuffles with a stream derived from it and `t`.
    pub seed: u64,
    pub traits: Vec<TraitId>,
    pub kinds: Vec<ModelKind>,
    /// Features kept per model for the modality decomposition.
    pub top_k: usize,
}

impl Default for TrialProtocol {
    fn default() -> Self {
        TrialProtocol {
            n_trials: 1000,
            train_fraction: 0.8,
            seed: 0,
            traits: TraitId::ALL.to_vec(),
            kinds: ModelKind::ALL.to_vec(),
            top_k: 20,
        }
    }
}

impl TrialProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials < 1 {
            return Err(Error::Config("at least one trial is required".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if self.traits.is_empty() || self.kinds.is_empty() {
            return Err(Error::Config(
                "trial protocol needs at least one trait and one model kind".into(),
            ));
        }
        if self.top_k < 1 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }

    /// Shuffled row order for trial `t`; the first `n_train` rows train.
    pub fn split(&self, n: usize, t: usize) -> (Vec<usize>, Vec<usize>) {
        let mut rng =
            ChaCha8Rng::seed_from_u64(indexed_seed(sub_seed(self.seed, "trial"), t as u64));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let n_train = ((n as f64 * self.train_fraction).round() as usize)
            .clamp(1, n.saturating_sub(1).max(1));
        let test = order.split_off(n_train.min(n));
        (order, test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    #[serde(rename = "trait")]
    pub trait_id: TraitId,
    pub kind: ModelKind,
    pub n_train: usize,
    pub n_test: usize,
    pub r: Option<f64>,
    pub r_clamped: Option<f64>,
    pub auc_exact: Option<f64>,
    pub auc_sweep: Option<f64>,
    /// Why the trial was excluded from the means, if it was.
    pub degenerate: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    #[serde(rename = "trait")]
    pub trait_id: TraitId,
    pub kind: ModelKind,
    pub mean_r: Option<f64>,
    pub mean_r_clamped: Option<f64>,
    pub mean_auc: Option<f64>,
    pub mean_auc_sweep: Option<f64>,
    pub n_valid: usize,
    pub n_degenerate: usize,
    /// Per-column weights averaged over the trials that trained.
    pub mean_weights: Vec<f64>,
    /// Trial-averaged share of top-k weight mass per modality.
    pub modality_proportions: BTreeMap<Modality, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub columns: Vec<String>,
    pub modalities: Vec<Modality>,
    pub summaries: Vec<TrialSummary>,
    pub trials: Vec<TrialRecord>,
}

impl EvaluationReport {
    pub fn summary(&self, t: TraitId, kind: ModelKind) -> Option<&TrialSummary> {
        self.summaries
            .iter()
            .find(|s| s.trait_id == t && s.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityShare {
    pub proportions: BTreeMap<Modality, f64>,
    /// Nonzero weights actually used (at most `top_k`).
    pub used: usize,
}

/// Share of weight magnitude per modality among the `top_k` largest weights.
pub fn modality_proportions(
    w: &[f64],
    modalities: &[Modality],
    top_k: usize,
) -> Result<ModalityShare> {
    let mut idx: Vec<usize> = (0..w.len()).filter(|&j| w[j] != 0.0).collect();
    idx.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    idx.truncate(top_k);
    if idx.is_empty() {
        return Err(Error::Degenerate("model has no nonzero weights".into()));
    }
    let total: f64 = idx.iter().map(|&j| w[j].abs()).sum();
    let mut proportions: BTreeMap<Modality, f64> =
        Modality::ALL.iter().map(|m| (*m, 0.0)).collect();
    for &j in &idx {
        *proportions.entry(modalities[j]).or_default() += w[j].abs() / total;
    }
    Ok(ModalityShare {
        proportions,
        used: idx.len(),
    })
}

/// Modality shares for each trained model, keyed by (trait, kind).
pub fn modality_weight_report(
    models: &[RegressionModel],
    top_k: usize,
) -> Vec<(Option<TraitId>, ModelKind, Result<ModalityShare>)> {
    models
        .iter()
        .map(|m| {
            let share = modality_proportions(&m.w, &m.modalities, top_k);
            if let Ok(s) = &share {
                if s.used < top_k {
                    log::info!(
                        "{:?} {}: only {} nonzero weights",
                        m.trait_id,
                        m.kind,
                        s.used
                    );
                }
            }
            (m.trait_id, m.kind, share)
        })
        .collect()
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::Degenerate(_) | Error::EmptyTranscript)
}

struct Outcome {
    record: TrialRecord,
    weights: Option<Vec<f64>>,
    share: Option<ModalityShare>,
}

fn run_one(
    x: &FeatureMatrix,
    targets: &[Option<f64>],
    train_rows: &[usize],
    test_rows: &[usize],
    t: TraitId,
    kind: ModelKind,
    trial: usize,
    train_cfg: &TrainConfig,
    top_k: usize,
) -> Result<Outcome> {
    let keep = |rows: &[usize]| -> (Vec<usize>, Vec<f64>) {
        rows.iter()
            .filter_map(|&i| targets[i].map(|v| (i, v)))
            .unzip()
    };
    let (tr, ytr) = keep(train_rows);
    let (te, yte) = keep(test_rows);
    let mut record = TrialRecord {
        trial,
        trait_id: t,
        kind,
        n_train: tr.len(),
        n_test: te.len(),
        r: None,
        r_clamped: None,
        auc_exact: None,
        auc_sweep: None,
        degenerate: None,
    };
    let model = match train(kind, x, &tr, &ytr, train_cfg, Some(t)) {
        Ok(m) => m,
        Err(e) if is_degenerate(&e) => {
            record.degenerate = Some(e.to_string());
            return Ok(Outcome {
                record,
                weights: None,
                share: None,
            });
        }
        Err(e) => return Err(e),
    };
    let share = modality_proportions(&model.w, &model.modalities, top_k).ok();
    let preds = model.predict_rows(x, &te)?;
    let raw: Vec<f64> = preds.iter().map(|p| p.raw).collect();
    let clamped: Vec<f64> = preds.iter().map(|p| p.clamped).collect();
    let scored = (|| -> Result<()> {
        record.r = Some(pearson(&yte, &raw)?);
        record.r_clamped = pearson(&yte, &clamped).ok();
        let auc = auc_median_split(&yte, &raw)?;
        record.auc_exact = Some(auc.exact);
        record.auc_sweep = Some(auc.sweep);
        Ok(())
    })();
    match scored {
        Ok(()) => {}
        Err(e) if is_degenerate(&e) => {
            record.degenerate = Some(e.to_string());
            record.r = None;
            record.r_clamped = None;
        }
        Err(e) => return Err(e),
    }
    Ok(Outcome {
        record,
        weights: Some(model.w),
        share,
    })
}

fn mean_of(vals: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = vals.flatten().collect();
    crate::stats::mean(&v)
}

/// Repeated random train/test splits. Trials run in parallel; results are
/// merged in trial order so the report does not depend on scheduling.
pub fn run_trials(
    x: &FeatureMatrix,
    truth: &GroundTruth,
    protocol: &TrialProtocol,
    train_cfg: &TrainConfig,
) -> Result<EvaluationReport> {
    protocol.validate()?;
    let n = x.n_rows();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "{n} interviews are too few for a train/test split"
        )));
    }
    let targets: BTreeMap<TraitId, Vec<Option<f64>>> = protocol
        .traits
        .iter()
        .map(|&t| (t, truth.series(t, x.ids())))
        .collect();
    for (t, s) in &targets {
        if s.iter().all(Option::is_none) {
            return Err(Error::Aggregation(format!(
                "no consensus values for {t} cover the feature rows"
            )));
        }
    }

    let per_trial: Vec<Vec<Outcome>> = (0..protocol.n_trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<Outcome>> {
            let (train_rows, test_rows) = protocol.split(n, trial);
            let mut out = Vec::new();
            for &t in &protocol.traits {
                for &kind in &protocol.kinds {
                    out.push(run_one(
                        x,
                        &targets[&t],
                        &train_rows,
                        &test_rows,
                        t,
                        kind,
                        trial,
                        train_cfg,
                        protocol.top_k,
                    )?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut summaries = Vec::new();
    for &t in &protocol.traits {
        for &kind in &protocol.kinds {
            let rows: Vec<&Outcome> = per_trial
                .iter()
                .flatten()
                .filter(|o| o.record.trait_id == t && o.record.kind == kind)
                .collect();
            let valid: Vec<&TrialRecord> = rows
                .iter()
                .map(|o| &o.record)
                .filter(|r| r.degenerate.is_none())
                .collect();
            let trained: Vec<&Vec<f64>> = rows.iter().filter_map(|o| o.weights.as_ref()).collect();
            let mut mean_weights = vec![0.0; x.n_cols()];
            for w in &trained {
                for (m, v) in mean_weights.iter_mut().zip(w.iter()) {
                    *m += v;
                }
            }
            if !trained.is_empty() {
                for m in &mut mean_weights {
                    *m /= trained.len() as f64;
                }
            }
            let shares: Vec<&ModalityShare> =
                rows.iter().filter_map(|o| o.share.as_ref()).collect();
            let modality_proportions = Modality::ALL
                .iter()
                .map(|m| {
                    let total: f64 = shares.iter().map(|s| s.proportions[m]).sum();
                    (
                        *m,
                        if shares.is_empty() {
                            0.0
                        } else {
                            total / shares.len() as f64
                        },
                    )
                })
                .collect();
            summaries.push(TrialSummary {
                trait_id: t,
                kind,
                mean_r: mean_of(valid.iter().map(|r| r.r)),
                mean_r_clamped: mean_of(valid.iter().map(|r| r.r_clamped)),
                mean_auc: mean_of(valid.iter().map(|r| r.auc_exact)),
                mean_auc_sweep: mean_of(valid.iter().map(|r| r.auc_sweep)),
                n_valid: valid.len(),
                n_degenerate: rows.len() - valid.len(),
                mean_weights,
                modality_proportions,
            });
        }
    }
    Ok(EvaluationReport {
        columns: x.columns().to_vec(),
        modalities: x.modalities().to_vec(),
        summaries,
        trials: per_trial.into_iter().flatten().map(|o| o.record).collect(),
    })
}

/// A non-empty set of modalities, written in F, P, L order ("FP", "FPL").
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModalitySubset(Vec<Modality>);

impl ModalitySubset {
    const ORDER: [Modality; 3] = [Modality::Facial, Modality::Prosodic, Modality::Lexical];

    pub fn new(mods: &[Modality]) -> Result<Self> {
        let v: Vec<Modality> = Self::ORDER
            .into_iter()
            .filter(|m| mods.contains(m))
            .collect();
        if v.is_empty() {
            return Err(Error::Config("empty modality subset".into()));
        }
        Ok(ModalitySubset(v))
    }

    pub fn modalities(&self) -> &[Modality] {
        &self.0
    }

    /// F, P, L, FP, FL, PL, FPL.
    pub fn standard() -> Vec<ModalitySubset> {
        ["F", "P", "L", "FP", "FL", "PL", "FPL"]
            .iter()
            .map(|s| s.parse().expect("standard subset"))
            .collect()
    }
}

impl fmt::Display for ModalitySubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.0 {
            write!(f, "{}", m.letter())?;
        }
        Ok(())
    }
}

impl FromStr for ModalitySubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut mods = Vec::new();
        for c in s.trim().chars() {
            let m: Modality = c.to_string().parse()?;
            if mods.contains(&m) {
                return Err(Error::Config(format!(
                    "modality {c} repeated in subset {s:?}"
                )));
            }
            mods.push(m);
        }
        Self::new(&mods)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    #[serde(rename = "trait")]
    pub trait_id: TraitId,
    pub subset: ModalitySubset,
    pub kind: ModelKind,
    pub mean_r: Option<f64>,
    pub n_degenerate: usize,
}

/// Trial protocol restricted to each subset's columns.
pub fn modality_ablation(
    x: &FeatureMatrix,
    truth: &GroundTruth,
    protocol: &TrialProtocol,
    train_cfg: &TrainConfig,
    subsets: &[ModalitySubset],
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for subset in subsets {
        let cols = x.columns_of(subset.modalities());
        if cols.is_empty() {
            return Err(Error::Config(format!(
                "feature matrix has no {subset} columns"
            )));
        }
        let report = run_trials(&x.select_columns(&cols), truth, protocol, train_cfg)?;
        for s in report.summaries {
            rows.push(AblationRow {
                trait_id: s.trait_id,
                subset: subset.clone(),
                kind: s.kind,
                mean_r: s.mean_r,
                n_degenerate: s.n_degenerate,
            });
        }
    }
    rows.sort_by_key(|r| (r.trait_id, r.kind));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitCorrelation {
    #[serde(rename = "trait")]
    pub trait_id: TraitId,
    pub r: Option<f64>,
    pub mi: Option<f64>,
}

/// Correlation and mutual information of each trait's consensus with Overall,
/// over the interviews where both exist.
pub fn trait_correlation_report(truth: &GroundTruth) -> Result<Vec<TraitCorrelation>> {
    let overall = truth
        .get(TraitId::Overall)
        .ok_or_else(|| Error::Aggregation("no Overall consensus".into()))?;
    let ids = overall.items.clone();
    let base = truth.series(TraitId::Overall, &ids);
    Ok(TraitId::ALL
        .iter()
        .filter(|&&t| t != TraitId::Overall)
        .map(|&t| {
            let (a, b): (Vec<f64>, Vec<f64>) = base
                .iter()
                .zip(truth.series(t, &ids))
                .filter_map(|(x, y)| Some(((*x)?, y?)))
                .unzip();
            TraitCorrelation {
                trait_id: t,
                r: pearson(&a, &b).ok(),
                mi: mutual_information(&a, &b).ok(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalRow {
    #[serde(rename = "trait")]
    pub trait_id: TraitId,
    pub question: u8,
    pub r: Option<f64>,
    pub mi: Option<f64>,
}

/// Per-question consensus (same aggregation as the whole interview) correlated
/// with the whole-interview consensus. Questions or traits that cannot be
/// aggregated are left out.
pub fn temporal_correlation(
    per_question: &PerQuestionRatings,
    truth: &GroundTruth,
    config: &AggregationConfig,
) -> Vec<TemporalRow> {
    let mut rows = Vec::new();
    for (&t, whole) in &truth.traits {
        for (&q, matrix) in &per_question.questions {
            let Ok(c) = em_aggregate(matrix, t, config) else {
                continue;
            };
            let (a, b): (Vec<f64>, Vec<f64>) = c
                .items
                .iter()
                .zip(&c.y)
                .filter_map(|(id, y)| Some(((*y)?, whole.value(id)?)))
                .unzip();
            if a.is_empty() {
                continue;
            }
            rows.push(TemporalRow {
                trait_id: t,
                question: q,
                r: pearson(&a, &b).ok(),
                mi: mutual_information(&a, &b).ok(),
            });
        }
    }
    rows
}

/// Top weights of a trained model, for reports.
pub fn top_weights(model: &RegressionModel, top_k: usize) -> Vec<(String, f64)> {
    feature_weights(model, top_k)
        .into_iter()
        .map(|e| (e.name, e.weight))
        .collect()
}
