//! Rating matrices and their CSV codecs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::traits::TraitId;

pub const SCALE_MIN: u8 = 1;
pub const SCALE_MAX: u8 = 7;

/// Interviews × raters × traits grid of 7-point scores. Missing entries are
/// kept explicit; identifiers are sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    interviews: Vec<String>,
    raters: Vec<String>,
    scores: Vec<Option<u8>>,
}

impl RatingMatrix {
    /// Builds a matrix from `(interview, rater, trait, score)` records.
    /// Every id that appears, even only with a missing score, gets a row or
    /// column.
    pub fn from_records<I, S>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, TraitId, Option<u8>)>,
        S: Into<String>,
    {
        let mut cells: BTreeMap<(String, String, TraitId), Option<u8>> = BTreeMap::new();
        let mut interviews = BTreeSet::new();
        let mut raters = BTreeSet::new();
        for (i, r, t, s) in records {
            let (i, r) = (i.into(), r.into());
            if let Some(v) = s {
                if !(SCALE_MIN..=SCALE_MAX).contains(&v) {
                    return Err(Error::parse(
                        format!("{i}/{r}/{t}"),
                        format!("score {v} outside [1,7]"),
                    ));
                }
            }
            interviews.insert(i.clone());
            raters.insert(r.clone());
            if cells.insert((i.clone(), r.clone(), t), s).is_some() {
                return Err(Error::parse(
                    format!("{i}/{r}/{t}"),
                    "duplicate rating record",
                ));
            }
        }
        let interviews: Vec<String> = interviews.into_iter().collect();
        let raters: Vec<String> = raters.into_iter().collect();
        let mut m = RatingMatrix {
            scores: vec![None; interviews.len() * raters.len() * TraitId::COUNT],
            interviews,
            raters,
        };
        for ((i, r, t), s) in cells {
            let ii = m.interview_index(&i).unwrap();
            let ri = m.rater_index(&r).unwrap();
            let k = m.offset(ii, ri, t);
            m.scores[k] = s;
        }
        Ok(m)
    }

    fn offset(&self, item: usize, rater: usize, t: TraitId) -> usize {
        (t.index() * self.interviews.len() + item) * self.raters.len() + rater
    }

    pub fn interviews(&self) -> &[String] {
        &self.interviews
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn interview_index(&self, id: &str) -> Option<usize> {
        self.interviews
            .binary_search_by(|x| x.as_str().cmp(id))
            .ok()
    }

    pub fn rater_index(&self, id: &str) -> Option<usize> {
        self.raters.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }

    pub fn get(&self, item: usize, rater: usize, t: TraitId) -> Option<u8> {
        self.scores[self.offset(item, rater, t)]
    }

    /// Real-valued items × raters view of one trait.
    pub fn grid(&self, t: TraitId) -> RatingGrid {
        let n = self.interviews.len();
        let k = self.raters.len();
        let mut values = Vec::with_capacity(n * k);
        for i in 0..n {
            for j in 0..k {
                values.push(self.get(i, j, t).map(f64::from));
            }
        }
        RatingGrid {
            items: self.interviews.clone(),
            raters: self.raters.clone(),
            values,
        }
    }

    pub fn present_count(&self, item: usize, t: TraitId) -> usize {
        (0..self.raters.len())
            .filter(|&j| self.get(item, j, t).is_some())
            .count()
    }

    pub fn trait_sum(&self, t: TraitId) -> u64 {
        let n = self.interviews.len();
        let k = self.raters.len();
        (0..n)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.get(i, j, t))
            .map(u64::from)
            .sum()
    }

    /// All cells in (interview, rater, trait) order, including missing ones
    /// that were explicitly recorded.
    pub fn records(&self) -> impl Iterator<Item = (&str, &str, TraitId, Option<u8>)> + '_ {
        self.interviews
            .iter()
            .enumerate()
            .flat_map(move |(i, iid)| {
                self.raters.iter().enumerate().flat_map(move |(j, rid)| {
                    TraitId::ALL
                        .iter()
                        .map(move |&t| (iid.as_str(), rid.as_str(), t, self.get(i, j, t)))
                })
            })
    }
}

/// Items × raters real-valued ratings for a single trait, missing as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingGrid {
    pub items: Vec<String>,
    pub raters: Vec<String>,
    /// Row-major, `items.len() × raters.len()`.
    pub values: Vec<Option<f64>>,
}

impl RatingGrid {
    pub fn new(items: Vec<String>, raters: Vec<String>, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != items.len() * raters.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}×{} grid",
                values.len(),
                items.len(),
                raters.len()
            )));
        }
        Ok(RatingGrid {
            items,
            raters,
            values,
        })
    }

    /// Grid from dense rows with generated ids `item{i}` / `rater{j}`.
    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("ragged rating rows".into()));
        }
        Self::new(
            (0..rows.len()).map(|i| format!("item{i:03}")).collect(),
            (0..k).map(|j| format!("rater{j:03}")).collect(),
            rows.iter().flatten().copied().collect(),
        )
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_raters(&self) -> usize {
        self.raters.len()
    }

    pub fn get(&self, item: usize, rater: usize) -> Option<f64> {
        self.values[item * self.raters.len() + rater]
    }

    pub fn row(&self, item: usize) -> &[Option<f64>] {
        let k = self.raters.len();
        &self.values[item * k..(item + 1) * k]
    }
}

/// An out-of-scale score encountered while reading a ratings file. Such
/// scores never enter the matrix; validation reports them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutOfRangeScore {
    pub locator: String,
    pub interview: String,
    pub rater: String,
    pub trait_id: TraitId,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingsFile {
    pub matrix: RatingMatrix,
    pub out_of_range: Vec<OutOfRangeScore>,
}

/// Second-phase ratings: one rating matrix per interview question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerQuestionRatings {
    pub questions: BTreeMap<u8, RatingMatrix>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerQuestionFile {
    pub ratings: PerQuestionRatings,
    pub out_of_range: Vec<OutOfRangeScore>,
}

enum Score {
    Missing,
    Valid(u8),
    OutOfRange(i64),
}

fn parse_score(s: &str, loc: &str) -> Result<Score> {
    if s.is_empty() {
        return Ok(Score::Missing);
    }
    let v: i64 = s
        .parse()
        .map_err(|_| Error::parse(loc, format!("score is not an integer: '{s}'")))?;
    if (i64::from(SCALE_MIN)..=i64::from(SCALE_MAX)).contains(&v) {
        Ok(Score::Valid(v as u8))
    } else {
        Ok(Score::OutOfRange(v))
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn check_header(rdr: &mut csv::Reader<File>, expected: &[&str], name: &str) -> Result<()> {
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(format!("{name}:1"), e))?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::parse(
            format!("{name}:1"),
            format!(
                "expected header '{}', got '{}'",
                expected.join(","),
                got.join(",")
            ),
        ));
    }
    Ok(())
}

type Record = (String, String, TraitId, Option<u8>);

fn read_rows(
    path: &Path,
    expected: &[&str],
    mut on_row: impl FnMut(&csv::StringRecord, &str) -> Result<()>,
) -> Result<()> {
    let name = path.display().to_string();
    let mut rdr = open_reader(path)?;
    check_header(&mut rdr, expected, &name)?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(format!("{name}:{line}"), e)
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        on_row(&rec, &format!("{name}:{line}"))?;
    }
    Ok(())
}

fn parse_trait(s: &str, loc: &str) -> Result<TraitId> {
    s.parse().map_err(|e: String| Error::parse(loc, e))
}

/// Reads `interview_id,rater_id,trait,score`; a blank score is missing.
pub fn read_ratings_csv(path: &Path) -> Result<RatingsFile> {
    let mut records: Vec<Record> = Vec::new();
    let mut bad = Vec::new();
    read_rows(
        path,
        &["interview_id", "rater_id", "trait", "score"],
        |rec, loc| {
            let (i, r) = (rec[0].to_owned(), rec[1].to_owned());
            if i.is_empty() || r.is_empty() {
                return Err(Error::parse(loc, "empty identifier"));
            }
            let t = parse_trait(&rec[2], loc)?;
            match parse_score(&rec[3], loc)? {
                Score::Missing => records.push((i, r, t, None)),
                Score::Valid(v) => records.push((i, r, t, Some(v))),
                Score::OutOfRange(value) => bad.push(OutOfRangeScore {
                    locator: loc.to_owned(),
                    interview: i,
                    rater: r,
                    trait_id: t,
                    value,
                }),
            }
            Ok(())
        },
    )?;
    let matrix = RatingMatrix::from_records(records).map_err(|e| match e {
        Error::Parse { locator, message } => {
            Error::parse(format!("{} ({locator})", path.display()), message)
        }
        other => other,
    })?;
    Ok(RatingsFile {
        matrix,
        out_of_range: bad,
    })
}

/// Reads `interview_id,question,rater_id,trait,score`.
pub fn read_per_question_csv(path: &Path) -> Result<PerQuestionFile> {
    let mut by_q: BTreeMap<u8, Vec<Record>> = BTreeMap::new();
    let mut bad = Vec::new();
    read_rows(
        path,
        &["interview_id", "question", "rater_id", "trait", "score"],
        |rec, loc| {
            let q: u8 = rec[1]
                .parse()
                .ok()
                .filter(|q| (1..=5).contains(q))
                .ok_or_else(|| {
                    Error::parse(loc, format!("question must be 1..5, got '{}'", &rec[1]))
                })?;
            let (i, r) = (rec[0].to_owned(), rec[2].to_owned());
            let t = parse_trait(&rec[3], loc)?;
            match parse_score(&rec[4], loc)? {
                Score::Missing => by_q.entry(q).or_default().push((i, r, t, None)),
                Score::Valid(v) => by_q.entry(q).or_default().push((i, r, t, Some(v))),
                Score::OutOfRange(value) => bad.push(OutOfRangeScore {
                    locator: loc.to_owned(),
                    interview: i,
                    rater: r,
                    trait_id: t,
                    value,
                }),
            }
            Ok(())
        },
    )?;
    let mut questions = BTreeMap::new();
    for (q, recs) in by_q {
        questions.insert(q, RatingMatrix::from_records(recs)?);
    }
    Ok(PerQuestionFile {
        ratings: PerQuestionRatings { questions },
        out_of_range: bad,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn score_text(s: Option<u8>) -> String {
    s.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_ratings_csv(path: &Path, matrix: &RatingMatrix) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "interview_id,rater_id,trait,score").map_err(io)?;
    for (i, r, t, s) in matrix.records() {
        writeln!(w, "{i},{r},{t},{}", score_text(s)).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_per_question_csv(path: &Path, pq: &PerQuestionRatings) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "interview_id,question,rater_id,trait,score").map_err(io)?;
    for (q, m) in &pq.questions {
        for (i, r, t, s) in m.records() {
            writeln!(w, "{i},{q},{r},{t},{}", score_text(s)).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
