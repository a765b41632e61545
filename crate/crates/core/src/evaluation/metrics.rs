use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Product-moment correlation. Fails on fewer than 3 points or a constant
/// series.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "series lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 3 {
        return Err(Error::Degenerate(format!(
            "correlation needs at least 3 points, got {}",
            a.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }
    stats::pearson(a, b)
        .ok_or_else(|| Error::Degenerate("correlation of a constant series is undefined".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AucMode {
    Sweep,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucResult {
    pub exact: f64,
    pub sweep: f64,
    pub positives: usize,
    pub negatives: usize,
}

impl AucResult {
    pub fn get(&self, mode: AucMode) -> f64 {
        match mode {
            AucMode::Exact => self.exact,
            AucMode::Sweep => self.sweep,
        }
    }
}

/// Positive class: true score strictly above the median of the true scores.
pub fn median_split(truth: &[f64]) -> Result<Vec<bool>> {
    let m = stats::median(truth).ok_or_else(|| Error::Degenerate("empty score series".into()))?;
    let labels: Vec<bool> = truth.iter().map(|v| *v > m).collect();
    let pos = labels.iter().filter(|l| **l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::Degenerate(
            "median split leaves one class empty".into(),
        ));
    }
    Ok(labels)
}

/// Rank statistic with ties counted half, as the exact fraction
/// `(2·wins + ties) / (2·P·N)`.
pub fn auc_exact(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::Dimension(
            "labels and scores differ in length".into(),
        ));
    }
    if scores.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("AUC scores".into()));
    }
    let mut neg: Vec<f64> = labels
        .iter()
        .zip(scores)
        .filter(|(l, _)| !**l)
        .map(|(_, s)| *s)
        .collect();
    neg.sort_by(f64::total_cmp);
    let n_pos = labels.len() - neg.len();
    if n_pos == 0 || neg.is_empty() {
        return Err(Error::Degenerate("AUC needs both classes".into()));
    }
    let mut twice: u128 = 0;
    for (_, s) in labels.iter().zip(scores).filter(|(l, _)| **l) {
        let below = neg.partition_point(|v| v < s);
        let not_above = neg.partition_point(|v| v <= s);
        twice += 2 * below as u128 + (not_above - below) as u128;
    }
    Ok(twice as f64 / (2 * n_pos as u128 * neg.len() as u128) as f64)
}

/// ROC from thresholds 1.00, 1.01, ..., 7.00 on predictions clamped to [1, 7],
/// closed with the (0,0) and (1,1) corners and integrated by trapezoids.
pub fn auc_sweep(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::Dimension(
            "labels and scores differ in length".into(),
        ));
    }
    let p = labels.iter().filter(|l| **l).count() as f64;
    let n = labels.len() as f64 - p;
    if p == 0.0 || n == 0.0 {
        return Err(Error::Degenerate("AUC needs both classes".into()));
    }
    let clamped: Vec<f64> = scores.iter().map(|s| s.clamp(1.0, 7.0)).collect();
    // Counts stay integral so the trapezoid sum is exact.
    let mut points = vec![(n, p)];
    for k in 0..=600 {
        let tau = (100 + k) as f64 / 100.0;
        let (mut tp, mut fp) = (0.0, 0.0);
        for (l, s) in labels.iter().zip(&clamped) {
            if *s >= tau {
                if *l {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        points.push((fp, tp));
    }
    points.push((0.0, 0.0));
    let twice: f64 = points
        .windows(2)
        .map(|w| (w[0].0 - w[1].0) * (w[0].1 + w[1].1))
        .sum();
    Ok(twice / (2.0 * n * p))
}

pub fn auc_median_split(truth: &[f64], predicted: &[f64]) -> Result<AucResult> {
    if truth.len() != predicted.len() {
        return Err(Error::Dimension(
            "truth and predictions differ in length".into(),
        ));
    }
    let labels = median_split(truth)?;
    let positives = labels.iter().filter(|l| **l).count();
    Ok(AucResult {
        exact: auc_exact(&labels, predicted)?,
        sweep: auc_sweep(&labels, predicted)?,
        positives,
        negatives: labels.len() - positives,
    })
}

/// Round to the nearest scale point and clamp to 1..=7.
fn bin(v: f64) -> i64 {
    (v.round() as i64).clamp(1, 7)
}

/// Plug-in entropy in bits of the binned series.
pub fn entropy(a: &[f64]) -> f64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in a {
        *counts.entry(bin(*v)).or_default() += 1;
    }
    let n = a.len() as f64;
    -counts
        .values()
        .map(|&c| c as f64 / n)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

/// Plug-in mutual information in bits between the binned series.
pub fn mutual_information(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "series lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 3 {
        return Err(Error::Degenerate(format!(
            "mutual information needs at least 3 points, got {}",
            a.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mutual information input".into()));
    }
    let mut joint: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut ma: BTreeMap<i64, usize> = BTreeMap::new();
    let mut mb: BTreeMap<i64, usize> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (bin(*x), bin(*y));
        *joint.entry((x, y)).or_default() += 1;
        *ma.entry(x).or_default() += 1;
        *mb.entry(y).or_default() += 1;
    }
    let n = a.len() as f64;
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            // n·c / (c_x·c_y) keeps the ratio exact for product distributions.
            pxy * (n * c as f64 / (ma[&x] as f64 * mb[&y] as f64)).log2()
        })
        .sum();
    Ok(mi.max(0.0))
}
