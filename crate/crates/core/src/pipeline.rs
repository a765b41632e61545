//! Stage orchestration shared by the command-line tool. Each stage returns
//! errors tagged with its name so a failed run says where it stopped.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::aggregation::{
    aggregate_all, agreement_report, AgreementRow, GroundTruth, TraitConsensus,
};
use crate::config::Settings;
use crate::corpus::{
    load_media, load_ratings, validate_dataset, Dataset, Severity, ValidationReport,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    modality_ablation, recommendations, run_trials, temporal_correlation, trait_correlation_report,
    write_ablation_csv, write_evaluation_csv, write_modality_csv, write_recommendations_csv,
    write_temporal_csv, write_trait_correlation_csv, write_trials_json, AblationRow,
    EvaluationReport, ModalitySubset, TemporalRow, TraitCorrelation, TrialProtocol,
};
use crate::features::{assemble, Extraction, FeatureMatrix, Modality};
use crate::regression::{train, ModelKind, RegressionModel};
use crate::traits::TraitId;

pub const FEATURES_FILE: &str = "features.csv";
pub const IMPUTATION_FILE: &str = "imputation.csv";
pub const CONSENSUS_FILE: &str = "consensus.csv";
pub const LAMBDA_FILE: &str = "lambda.csv";
pub const AGREEMENT_FILE: &str = "agreement.csv";
pub const TRAIT_CORRELATION_FILE: &str = "trait_correlation.csv";
pub const TEMPORAL_FILE: &str = "temporal.csv";
pub const EVALUATION_FILE: &str = "evaluation.csv";
pub const TRIALS_FILE: &str = "trials.json";
pub const RECOMMENDATIONS_FILE: &str = "recommendations.csv";
pub const MODELS_DIR: &str = "models";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Validate,
    Extract,
    Aggregate,
    Train,
    Evaluate,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Validate => "validate",
            Stage::Extract => "extract",
            Stage::Aggregate => "aggregate",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

pub type StageResult<T> = std::result::Result<T, StageError>;

pub trait InStage<T> {
    fn in_stage(self, stage: Stage) -> StageResult<T>;
}

impl<T> InStage<T> for Result<T> {
    fn in_stage(self, stage: Stage) -> StageResult<T> {
        self.map_err(|source| StageError { stage, source })
    }
}

fn write_lines(path: &Path, header: &str, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{header}").map_err(io)?;
    for l in lines {
        writeln!(w, "{l}").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Transcripts and tracks only; ratings are read by the aggregate stage.
pub fn load(manifest: &Path) -> StageResult<Dataset> {
    load_media(manifest).in_stage(Stage::Load)
}

/// Logs every finding and fails if any is an error.
pub fn require_valid(report: &ValidationReport, stage: Stage) -> StageResult<()> {
    for f in &report.findings {
        match f.severity {
            Severity::Warn => log::warn!("{f}"),
            Severity::Error => log::error!("{f}"),
        }
    }
    if report.has_errors() {
        return Err(Error::Validation(report.error_count())).in_stage(stage);
    }
    Ok(())
}

pub fn validate(ds: &Dataset) -> StageResult<ValidationReport> {
    let report = validate_dataset(ds);
    require_valid(&report, Stage::Validate)?;
    Ok(report)
}

pub fn extract(ds: &Dataset, settings: &Settings) -> StageResult<Extraction> {
    let ex = assemble(ds, &settings.extraction).in_stage(Stage::Extract)?;
    for m in Modality::ALL {
        let n = ex.matrix.modalities().iter().filter(|&&x| x == m).count();
        log::info!("{m}: {n} features");
    }
    for r in ex.imputed_columns() {
        log::warn!(
            "{}: {} of {} values imputed with {}",
            r.column,
            r.missing,
            ex.matrix.n_rows(),
            r.fill_value
        );
    }
    Ok(ex)
}

pub fn write_extraction(dir: &Path, ex: &Extraction) -> Result<()> {
    create_dir(dir)?;
    ex.matrix.write_csv(&dir.join(FEATURES_FILE))?;
    ex.write_imputation_csv(&dir.join(IMPUTATION_FILE))
}

#[derive(Debug, Clone)]
pub struct Aggregated {
    pub truth: GroundTruth,
    pub agreement: Vec<AgreementRow>,
    pub correlations: Vec<TraitCorrelation>,
    pub temporal: Vec<TemporalRow>,
}

/// Reads the ratings named by the manifest, checks them and aggregates every
/// trait.
pub fn aggregate(ds: &mut Dataset, settings: &Settings) -> StageResult<Aggregated> {
    let stage = Stage::Aggregate;
    if ds.manifest.ratings.is_none() {
        return Err(Error::Aggregation(
            "the manifest names no ratings file".into(),
        ))
        .in_stage(stage);
    }
    let (ratings, per_question) = load_ratings(ds).in_stage(stage)?;
    ds.ratings = ratings;
    ds.per_question = per_question;
    require_valid(&validate_dataset(ds), stage)?;
    let matrix = ds
        .rating_matrix()
        .ok_or_else(|| Error::Aggregation("no ratings loaded".into()))
        .in_stage(stage)?;
    let truth = aggregate_all(matrix, &settings.aggregation).in_stage(stage)?;
    let agreement = agreement_report(matrix, settings.metric);
    let correlations = trait_correlation_report(&truth).in_stage(stage)?;
    let temporal = ds
        .per_question_ratings()
        .map(|pq| temporal_correlation(pq, &truth, &settings.aggregation))
        .unwrap_or_default();
    Ok(Aggregated {
        truth,
        agreement,
        correlations,
        temporal,
    })
}

pub fn write_aggregation(dir: &Path, agg: &Aggregated) -> Result<()> {
    create_dir(dir)?;
    write_consensus_csv(&dir.join(CONSENSUS_FILE), &agg.truth)?;
    write_lines(
        &dir.join(LAMBDA_FILE),
        "trait,rater,lambda",
        agg.truth.traits.iter().flat_map(|(t, c)| {
            c.raters
                .iter()
                .zip(&c.lambda)
                .map(move |(r, l)| format!("{t},{r},{}", cell(*l)))
        }),
    )?;
    write_lines(
        &dir.join(AGREEMENT_FILE),
        "trait,alpha,mean_one_vs_rest_r",
        agg.agreement.iter().map(|a| {
            format!(
                "{},{},{}",
                a.trait_id,
                cell(a.alpha),
                cell(a.mean_one_vs_rest_r)
            )
        }),
    )?;
    write_trait_correlation_csv(&dir.join(TRAIT_CORRELATION_FILE), &agg.correlations)?;
    write_temporal_csv(&dir.join(TEMPORAL_FILE), &agg.temporal)
}

/// Wide table: one row per interview, one column per aggregated trait.
pub fn write_consensus_csv(path: &Path, truth: &GroundTruth) -> Result<()> {
    let mut ids: Vec<&String> = truth.traits.values().flat_map(|c| &c.items).collect();
    ids.sort();
    ids.dedup();
    let ids: Vec<String> = ids.into_iter().cloned().collect();
    let series: Vec<Vec<Option<f64>>> = truth
        .traits
        .keys()
        .map(|&t| truth.series(t, &ids))
        .collect();
    let header = std::iter::once("interview_id".to_string())
        .chain(truth.traits.keys().map(|t| t.to_string()))
        .collect::<Vec<_>>()
        .join(",");
    write_lines(
        path,
        &header,
        ids.iter().enumerate().map(|(i, id)| {
            std::iter::once(id.clone())
                .chain(series.iter().map(|s| cell(s[i])))
                .collect::<Vec<_>>()
                .join(",")
        }),
    )
}

/// Reads consensus values written by [`write_consensus_csv`]. Rater
/// precisions are not part of the file and come back empty.
pub fn read_consensus_csv(path: &Path) -> Result<GroundTruth> {
    let locate = |row: usize| format!("{}:{}", path.display(), row + 1);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(locate(0), e))?
        .clone();
    if headers.get(0) != Some("interview_id") {
        return Err(Error::parse(locate(0), "first column must be interview_id"));
    }
    let traits: Vec<TraitId> = headers
        .iter()
        .skip(1)
        .map(|h| h.parse())
        .collect::<std::result::Result<_, String>>()
        .map_err(|e| Error::parse(locate(0), e))?;
    let mut items = Vec::new();
    let mut values: Vec<Vec<Option<f64>>> = vec![Vec::new(); traits.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(locate(row + 1), e))?;
        items.push(rec.get(0).unwrap_or_default().to_string());
        for (k, col) in values.iter_mut().enumerate() {
            let v = rec.get(k + 1).unwrap_or_default();
            col.push(if v.is_empty() {
                None
            } else {
                Some(
                    v.parse::<f64>()
                        .map_err(|e| Error::parse(locate(row + 1), e))?,
                )
            });
        }
    }
    let mut truth = GroundTruth::default();
    for (t, y) in traits.into_iter().zip(values) {
        truth.traits.insert(
            t,
            TraitConsensus {
                items: items.clone(),
                raters: vec![],
                y,
                lambda: vec![],
                excluded: vec![],
                iterations_run: 0,
                converged: true,
                final_log_likelihood: 0.0,
                trace: vec![],
            },
        );
    }
    Ok(truth)
}

/// One model per requested trait and kind, trained on every interview with
/// a consensus value.
pub fn train_models(
    x: &FeatureMatrix,
    truth: &GroundTruth,
    settings: &Settings,
) -> StageResult<Vec<RegressionModel>> {
    let mut models = Vec::new();
    for &t in &settings.protocol.traits {
        let series = truth.series(t, x.ids());
        let (rows, y): (Vec<usize>, Vec<f64>) = series
            .iter()
            .enumerate()
            .filter_map(|(i, v)| Some((i, (*v)?)))
            .unzip();
        if rows.len() < 2 {
            return Err(Error::Degenerate(format!(
                "{t} has consensus for {} interviews",
                rows.len()
            )))
            .in_stage(Stage::Train);
        }
        for &kind in &settings.protocol.kinds {
            models
                .push(train(kind, x, &rows, &y, &settings.train, Some(t)).in_stage(Stage::Train)?);
        }
    }
    Ok(models)
}

pub fn model_path(dir: &Path, model: &RegressionModel) -> PathBuf {
    let t = model
        .trait_id
        .map(|t| t.to_string())
        .unwrap_or_else(|| "untargeted".into());
    dir.join(MODELS_DIR)
        .join(format!("{t}_{}.json", model.kind))
}

pub fn write_models(dir: &Path, models: &[RegressionModel]) -> Result<()> {
    create_dir(&dir.join(MODELS_DIR))?;
    models.iter().try_for_each(|m| m.save(&model_path(dir, m)))
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub ablation: Vec<AblationRow>,
}

pub fn evaluate(
    x: &FeatureMatrix,
    truth: &GroundTruth,
    settings: &Settings,
) -> StageResult<Evaluation> {
    let stage = Stage::Evaluate;
    let report = run_trials(x, truth, &settings.protocol, &settings.train).in_stage(stage)?;
    let ablation = if settings.ablation_trials == 0 {
        vec![]
    } else {
        let protocol = TrialProtocol {
            n_trials: settings.ablation_trials,
            ..settings.protocol.clone()
        };
        let present: Vec<ModalitySubset> = ModalitySubset::standard()
            .into_iter()
            .filter(|s| !x.columns_of(s.modalities()).is_empty())
            .collect();
        modality_ablation(x, truth, &protocol, &settings.train, &present).in_stage(stage)?
    };
    Ok(Evaluation { report, ablation })
}

pub fn write_evaluation(dir: &Path, ev: &Evaluation) -> Result<()> {
    create_dir(dir)?;
    write_evaluation_csv(&dir.join(EVALUATION_FILE), &ev.report)?;
    write_trials_json(&dir.join(TRIALS_FILE), &ev.report)?;
    let kinds: Vec<ModelKind> = ModelKind::ALL
        .into_iter()
        .filter(|k| ev.report.summaries.iter().any(|s| s.kind == *k))
        .collect();
    for kind in kinds {
        if !ev.ablation.is_empty() {
            write_ablation_csv(
                &dir.join(format!("ablation_{kind}.csv")),
                &ev.ablation,
                kind,
            )?;
        }
    }
    Ok(())
}

/// Modality shares and recommendations derived from an evaluation report.
pub fn write_report(dir: &Path, report: &EvaluationReport, top_k: usize) -> Result<()> {
    create_dir(dir)?;
    for kind in ModelKind::ALL {
        if report.summaries.iter().any(|s| s.kind == kind) {
            write_modality_csv(
                &dir.join(format!("modality_weights_{kind}.csv")),
                report,
                kind,
            )?;
        }
    }
    write_recommendations_csv(
        &dir.join(RECOMMENDATIONS_FILE),
        &recommendations(report, top_k),
    )
}

pub fn read_trials_json(path: &Path) -> Result<EvaluationReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

/// Mean test correlation per (trait, model) from a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub interviews: usize,
    pub features: usize,
    pub mean_r: BTreeMap<(TraitId, ModelKind), Option<f64>>,
}

/// Every stage from manifest to report bundle.
pub fn run_pipeline(manifest: &Path, out: &Path, settings: &Settings) -> StageResult<RunSummary> {
    let mut ds = load(manifest)?;
    validate(&ds)?;
    let ex = extract(&ds, settings)?;
    write_extraction(out, &ex).in_stage(Stage::Extract)?;
    let agg = aggregate(&mut ds, settings)?;
    write_aggregation(out, &agg).in_stage(Stage::Aggregate)?;
    let models = train_models(&ex.matrix, &agg.truth, settings)?;
    write_models(out, &models).in_stage(Stage::Train)?;
    let ev = evaluate(&ex.matrix, &agg.truth, settings)?;
    write_evaluation(out, &ev).in_stage(Stage::Evaluate)?;
    write_report(out, &ev.report, settings.protocol.top_k).in_stage(Stage::Report)?;
    Ok(RunSummary {
        interviews: ex.matrix.n_rows(),
        features: ex.matrix.n_cols(),
        mean_r: ev
            .report
            .summaries
            .iter()
            .map(|s| ((s.trait_id, s.kind), s.mean_r))
            .collect(),
    })
}
