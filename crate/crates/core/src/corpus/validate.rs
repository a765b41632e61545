use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::traits::TraitId;

use super::tracks::{to_ms, Frame, Track};
use super::{Dataset, InterviewBundle, OutOfRangeScore, QUESTIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub interview: Option<String>,
    pub message: String,
    pub locator: Option<String>,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warn => "warn",
            Severity::Error => "error",
        };
        write!(f, "[{sev}]")?;
        if let Some(i) = &self.interview {
            write!(f, " {i}:")?;
        }
        write!(f, " {}", self.message)?;
        if let Some(l) = &self.locator {
            write!(f, " ({l})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn error_count(&self) -> usize {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
            .count()
    }

    /// Error-level findings block training.
    pub fn has_errors(&self) -> bool {
        self.error_count() > 0
    }

    pub fn for_interview<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings
            .iter()
            .filter(move |f| f.interview.as_deref() == Some(id))
    }

    fn push(
        &mut self,
        severity: Severity,
        interview: Option<&str>,
        message: String,
        locator: Option<String>,
    ) {
        self.findings.push(Finding {
            severity,
            interview: interview.map(str::to_owned),
            message,
            locator,
        });
    }
}

fn check_segments(b: &InterviewBundle, report: &mut ValidationReport) {
    let id = Some(b.id.as_str());
    let mut present = BTreeSet::new();
    for a in &b.answers {
        if !(1..=QUESTIONS).contains(&a.question) {
            report.push(
                Severity::Error,
                id,
                format!("question index {} outside 1..{QUESTIONS}", a.question),
                None,
            );
            continue;
        }
        if !present.insert(a.question) {
            report.push(
                Severity::Error,
                id,
                format!("duplicate question {}", a.question),
                None,
            );
        }
        if to_ms(a.end_s) <= to_ms(a.start_s) {
            report.push(
                Severity::Error,
                id,
                format!(
                    "question {}: end_s {} not after start_s {}",
                    a.question, a.end_s, a.start_s
                ),
                None,
            );
        }
        if a.tokens.is_empty() {
            report.push(
                Severity::Warn,
                id,
                format!("question {} has no tokens", a.question),
                None,
            );
        }
    }
    for q in 1..=QUESTIONS {
        if !present.contains(&q) {
            report.push(Severity::Warn, id, format!("missing question {q}"), None);
        }
    }
}

fn check_track<F: Frame>(
    b: &InterviewBundle,
    name: &str,
    track: &Track<F>,
    report: &mut ValidationReport,
) {
    let id = Some(b.id.as_str());
    if track.is_empty() {
        report.push(Severity::Error, id, format!("{name} track is empty"), None);
        return;
    }
    for a in &b.answers {
        let (s, e) = (to_ms(a.start_s), to_ms(a.end_s));
        if e > s && !track.covers(s, e) {
            report.push(
                Severity::Error,
                id,
                format!("{name} track does not cover question {}", a.question),
                None,
            );
        }
    }
    if let Some(step) = track.step_s() {
        let step_ms = (step * 1000.0).round() as i64;
        let gaps = track
            .frames()
            .windows(2)
            .filter(|w| to_ms(w[1].t_s()) - to_ms(w[0].t_s()) > step_ms + step_ms / 2)
            .count();
        if gaps > 0 {
            report.push(
                Severity::Warn,
                id,
                format!("{name} track has {gaps} gap(s) longer than 1.5 frame steps"),
                None,
            );
        }
    }
}

fn check_bundle(ds: &Dataset, b: &InterviewBundle, report: &mut ValidationReport) {
    let id = Some(b.id.as_str());
    check_segments(b, report);
    match &b.acoustic {
        Some(t) => check_track(b, "acoustic", t, report),
        None => report.push(Severity::Warn, id, "no acoustic track".into(), None),
    }
    match &b.facial {
        Some(t) => {
            check_track(b, "facial", t, report);
            let m = ds.shape_model.as_ref().map(|s| s.basis_dim());
            if m.is_none() {
                report.push(
                    Severity::Error,
                    id,
                    "facial track present but no shape model".into(),
                    None,
                );
            }
            for (k, f) in t.frames().iter().enumerate() {
                let loc = Some(format!("facial frame {k} t={}", f.t_s));
                if f.scale <= 0.0 {
                    report.push(
                        Severity::Error,
                        id,
                        "non-positive scale".into(),
                        loc.clone(),
                    );
                }
                if !(0.0..=100.0).contains(&f.smile) {
                    report.push(
                        Severity::Error,
                        id,
                        format!("smile {} outside [0,100]", f.smile),
                        loc.clone(),
                    );
                }
                if let Some(m) = m {
                    if f.q.len() != m {
                        report.push(
                            Severity::Error,
                            id,
                            format!("{} shape coefficients, model has {m}", f.q.len()),
                            loc,
                        );
                        break;
                    }
                }
            }
        }
        None => report.push(Severity::Warn, id, "no facial track".into(), None),
    }
    if let Some(t) = &b.smile {
        check_track(b, "smile", t, report);
    }
}

fn out_of_range(bad: &[OutOfRangeScore], report: &mut ValidationReport) {
    for s in bad {
        report.push(
            Severity::Error,
            Some(&s.interview),
            format!(
                "rater {} {}: score {} outside [1,7]",
                s.rater, s.trait_id, s.value
            ),
            Some(s.locator.clone()),
        );
    }
}

/// Collects data-quality findings. Nothing here fails; callers decide what to
/// do with error-level findings.
pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    if ds.bundles.is_empty() {
        report.push(
            Severity::Warn,
            None,
            "dataset has no interviews".into(),
            None,
        );
    }
    for b in &ds.bundles {
        check_bundle(ds, b, &mut report);
    }

    if let Some(r) = &ds.ratings {
        out_of_range(&r.out_of_range, &mut report);
        let m = &r.matrix;
        for iid in m.interviews() {
            if ds.bundle(iid).is_none() {
                report.push(
                    Severity::Error,
                    Some(iid),
                    "ratings reference an interview missing from the manifest".into(),
                    None,
                );
            }
        }
        let k = m.raters().len();
        for b in &ds.bundles {
            let id = Some(b.id.as_str());
            let Some(i) = m.interview_index(&b.id) else {
                report.push(Severity::Error, id, "interview has no ratings".into(), None);
                continue;
            };
            let mut incomplete = 0;
            for t in TraitId::ALL {
                let c = m.present_count(i, t);
                if c == 0 {
                    report.push(Severity::Error, id, format!("no ratings for {t}"), None);
                } else if c < k {
                    incomplete += 1;
                    if c < 2 {
                        report.push(Severity::Warn, id, format!("only one rating for {t}"), None);
                    }
                }
            }
            if incomplete > 0 {
                report.push(
                    Severity::Warn,
                    id,
                    format!("incomplete ratings on {incomplete} trait(s)"),
                    None,
                );
            }
        }
    }

    if let Some(pq) = &ds.per_question {
        out_of_range(&pq.out_of_range, &mut report);
        for (q, m) in &pq.ratings.questions {
            for iid in m.interviews() {
                if ds.bundle(iid).is_none() {
                    report.push(
                        Severity::Error,
                        Some(iid),
                        format!(
                            "per-question ratings (question {q}) reference an unknown interview"
                        ),
                        None,
                    );
                }
            }
        }
    }
    report
}
