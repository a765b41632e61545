use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Modality;
use crate::regression::ModelKind;
use crate::traits::TraitId;

use super::{AblationRow, EvaluationReport, TemporalRow, TraitCorrelation};

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
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

pub fn write_evaluation_csv(path: &Path, report: &EvaluationReport) -> Result<()> {
    write_lines(
        path,
        "trait,model,mean_r,mean_auc,n_degenerate",
        report.summaries.iter().map(|s| {
            format!(
                "{},{},{},{},{}",
                s.trait_id,
                s.kind,
                cell(s.mean_r),
                cell(s.mean_auc),
                s.n_degenerate
            )
        }),
    )
}

pub fn write_modality_csv(path: &Path, report: &EvaluationReport, kind: ModelKind) -> Result<()> {
    write_lines(
        path,
        "trait,modality,proportion",
        report
            .summaries
            .iter()
            .filter(|s| s.kind == kind)
            .flat_map(|s| {
                s.modality_proportions
                    .iter()
                    .map(move |(m, p)| format!("{},{},{}", s.trait_id, m, p))
            }),
    )
}

pub fn write_ablation_csv(path: &Path, rows: &[AblationRow], kind: ModelKind) -> Result<()> {
    write_lines(
        path,
        "trait,subset,mean_r",
        rows.iter()
            .filter(|r| r.kind == kind)
            .map(|r| format!("{},{},{}", r.trait_id, r.subset, cell(r.mean_r))),
    )
}

pub fn write_temporal_csv(path: &Path, rows: &[TemporalRow]) -> Result<()> {
    write_lines(
        path,
        "trait,question,r,mi",
        rows.iter()
            .map(|r| format!("{},{},{},{}", r.trait_id, r.question, cell(r.r), cell(r.mi))),
    )
}

pub fn write_trait_correlation_csv(path: &Path, rows: &[TraitCorrelation]) -> Result<()> {
    write_lines(
        path,
        "trait,r,mi",
        rows.iter()
            .map(|r| format!("{},{},{}", r.trait_id, cell(r.r), cell(r.mi))),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    #[serde(rename = "trait")]
    pub trait_id: TraitId,
    pub kind: ModelKind,
    pub rank: usize,
    pub feature: String,
    pub modality: Modality,
    pub weight: f64,
}

impl Recommendation {
    /// "increase" for positive weights, "decrease" for negative ones.
    pub fn direction(&self) -> &'static str {
        if self.weight > 0.0 {
            "increase"
        } else {
            "decrease"
        }
    }
}

/// The `top_k` largest trial-averaged weights per trait and model, topic
/// features left out.
pub fn recommendations(report: &EvaluationReport, top_k: usize) -> Vec<Recommendation> {
    let mut out = Vec::new();
    for s in &report.summaries {
        let mut idx: Vec<usize> = (0..s.mean_weights.len())
            .filter(|&j| s.mean_weights[j] != 0.0 && !report.columns[j].starts_with("topic"))
            .collect();
        idx.sort_by(|&a, &b| {
            s.mean_weights[b]
                .abs()
                .total_cmp(&s.mean_weights[a].abs())
                .then(a.cmp(&b))
        });
        for (rank, j) in idx.into_iter().take(top_k).enumerate() {
            out.push(Recommendation {
                trait_id: s.trait_id,
                kind: s.kind,
                rank: rank + 1,
                feature: report.columns[j].clone(),
                modality: report.modalities[j],
                weight: s.mean_weights[j],
            });
        }
    }
    out
}

pub fn write_recommendations_csv(path: &Path, recs: &[Recommendation]) -> Result<()> {
    write_lines(
        path,
        "trait,model,rank,feature,modality,weight,direction",
        recs.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.trait_id,
                r.kind,
                r.rank,
                r.feature,
                r.modality,
                r.weight,
                r.direction()
            )
        }),
    )
}

pub fn write_trials_json(path: &Path, report: &EvaluationReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
