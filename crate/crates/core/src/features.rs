//! Per-interview feature assembly into a modality-tagged matrix.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::facial::{facial_aggregate, FacialConfig, FACIAL_FEATURES};
use crate::lexical::{
    category_counts, interview_tokens, lda_fit, lda_infer, rate_features, topic_feature_names,
    CategoryLexicon, LdaConfig, TopicModel, WordSet, RATE_FEATURES,
};
use crate::prosody::{aggregate_prosody, ProsodyConfig, PROSODY_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Prosodic,
    Lexical,
    Facial,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Prosodic, Modality::Lexical, Modality::Facial];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Prosodic => "prosodic",
            Modality::Lexical => "lexical",
            Modality::Facial => "facial",
        }
    }

    pub fn letter(self) -> char {
        match self {
            Modality::Prosodic => 'P',
            Modality::Lexical => 'L',
            Modality::Facial => 'F',
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Modality::ALL
            .into_iter()
            .find(|m| {
                m.name().eq_ignore_ascii_case(s)
                    || s.len() == 1 && s.eq_ignore_ascii_case(&m.letter().to_string())
            })
            .ok_or_else(|| Error::Config(format!("unknown modality {s:?}")))
    }
}

/// Dense `N × d` feature matrix with named, modality-tagged columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    columns: Vec<String>,
    modalities: Vec<Modality>,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(
        ids: Vec<String>,
        columns: Vec<String>,
        modalities: Vec<Modality>,
        data: Vec<f64>,
    ) -> Result<Self> {
        if columns.len() != modalities.len() {
            return Err(Error::Dimension("every column needs a modality".into()));
        }
        if data.len() != ids.len() * columns.len() {
            return Err(Error::Dimension(format!(
                "{} cells for {} rows × {} columns",
                data.len(),
                ids.len(),
                columns.len()
            )));
        }
        let unique: BTreeSet<&String> = columns.iter().collect();
        if unique.len() != columns.len() {
            return Err(Error::Config("duplicate feature column name".into()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            let d = columns.len().max(1);
            return Err(Error::NonFinite(format!(
                "feature {} of {}",
                columns[i % d],
                ids[i / d]
            )));
        }
        Ok(FeatureMatrix {
            ids,
            columns,
            modalities,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn modalities(&self) -> &[Modality] {
        &self.modalities
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|c| c == id)
    }

    /// Indices of the columns whose modality is in `keep`, in column order.
    pub fn columns_of(&self, keep: &[Modality]) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&j| keep.contains(&self.modalities[j]))
            .collect()
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let data = (0..self.n_rows())
            .flat_map(|i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        FeatureMatrix {
            ids: self.ids.clone(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            modalities: cols.iter().map(|&j| self.modalities[j]).collect(),
            data,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            columns: self.columns.clone(),
            modalities: self.modalities.clone(),
            data: rows
                .iter()
                .flat_map(|&i| self.row(i).iter().copied())
                .collect(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        write!(w, "interview_id").map_err(io)?;
        for c in &self.columns {
            write!(w, ",{c}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
        for i in 0..self.n_rows() {
            write!(w, "{}", self.ids[i]).map_err(io)?;
            for v in self.row(i) {
                write!(w, ",{v}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)?;

        let side = sidecar_path(path);
        let io = |e| Error::io(&side, e);
        let mut w = BufWriter::new(File::create(&side).map_err(io)?);
        writeln!(w, "feature,modality").map_err(io)?;
        for (c, m) in self.columns.iter().zip(&self.modalities) {
            writeln!(w, "{c},{m}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let side = sidecar_path(path);
        let mut rdr = csv::Reader::from_path(&side)
            .map_err(|e| Error::parse(side.display().to_string(), e))?;
        let mut tags = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let loc = format!("{}:{}", side.display(), n + 2);
            let rec = rec.map_err(|e| Error::parse(&loc, e))?;
            if rec.len() != 2 {
                return Err(Error::parse(&loc, "expected feature,modality"));
            }
            tags.push((
                rec[0].to_owned(),
                rec[1]
                    .parse::<Modality>()
                    .map_err(|e| Error::parse(&loc, e))?,
            ));
        }

        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| Error::parse(path.display().to_string(), e))?;
        let header = rdr
            .headers()
            .map_err(|e| Error::parse(path.display().to_string(), e))?
            .clone();
        if header.get(0) != Some("interview_id") {
            return Err(Error::parse(
                format!("{}:1", path.display()),
                "first column must be interview_id",
            ));
        }
        let columns: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut modalities = Vec::with_capacity(columns.len());
        for c in &columns {
            let m = tags
                .iter()
                .find(|(n, _)| n == c)
                .map(|(_, m)| *m)
                .ok_or_else(|| {
                    Error::parse(
                        side.display().to_string(),
                        format!("no modality for feature {c}"),
                    )
                })?;
            modalities.push(m);
        }
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let loc = format!("{}:{}", path.display(), n + 2);
            let rec = rec.map_err(|e| Error::parse(&loc, e))?;
            if rec.len() != columns.len() + 1 {
                return Err(Error::parse(&loc, "wrong number of fields"));
            }
            ids.push(rec[0].to_owned());
            for cell in rec.iter().skip(1) {
                data.push(cell.parse::<f64>().map_err(|e| Error::parse(&loc, e))?);
            }
        }
        Self::new(ids, columns, modalities, data)
    }
}

/// `features.csv` → `features_modalities.csv`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}_modalities.csv"))
}

#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    pub lexicon: CategoryLexicon,
    pub fillers: WordSet,
    pub stopwords: WordSet,
    pub lda: LdaConfig,
    pub prosody: ProsodyConfig,
    pub facial: FacialConfig,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            lexicon: CategoryLexicon::default_lexicon(),
            fillers: WordSet::default_fillers(),
            stopwords: WordSet::default_stopwords(),
            lda: LdaConfig::default(),
            prosody: ProsodyConfig::default(),
            facial: FacialConfig::default(),
        }
    }
}

/// Column names and modalities of the full feature census.
pub fn feature_census(lexicon: &CategoryLexicon, topics: usize) -> Vec<(String, Modality)> {
    let mut out: Vec<(String, Modality)> = PROSODY_FEATURES
        .iter()
        .map(|n| (n.to_string(), Modality::Prosodic))
        .collect();
    out.extend(
        lexicon
            .names()
            .into_iter()
            .map(|n| (n.to_owned(), Modality::Lexical)),
    );
    out.extend(
        RATE_FEATURES
            .iter()
            .map(|n| (n.to_string(), Modality::Lexical)),
    );
    out.extend(
        topic_feature_names(topics)
            .into_iter()
            .map(|n| (n, Modality::Lexical)),
    );
    out.extend(
        FACIAL_FEATURES
            .iter()
            .map(|n| (n.to_string(), Modality::Facial)),
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationRow {
    pub column: String,
    pub modality: Modality,
    pub missing: usize,
    pub rate: f64,
    pub fill_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub matrix: FeatureMatrix,
    /// Every column, including those with nothing missing.
    pub imputation: Vec<ImputationRow>,
    pub topic_model: Option<TopicModel>,
}

impl Extraction {
    pub fn imputed_columns(&self) -> impl Iterator<Item = &ImputationRow> {
        self.imputation.iter().filter(|r| r.missing > 0)
    }

    pub fn write_imputation_csv(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(w, "column,modality,missing,rate,fill_value").map_err(io)?;
        for r in &self.imputation {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.column, r.modality, r.missing, r.rate, r.fill_value
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Raw, possibly incomplete feature rows in census order.
pub fn extract_raw(
    ds: &Dataset,
    config: &ExtractionConfig,
) -> Result<(Vec<Vec<Option<f64>>>, Option<TopicModel>)> {
    let docs: Vec<Vec<String>> = ds
        .bundles
        .iter()
        .map(|b| {
            interview_tokens(&b.answers, &config.fillers)
                .into_iter()
                .map(|t| t.text)
                .collect()
        })
        .collect();
    let topics = config.lda.topics;
    let model = if ds.bundles.is_empty() {
        None
    } else {
        match lda_fit(&docs, &config.lda, &config.stopwords) {
            Ok(m) => Some(m),
            Err(Error::Degenerate(msg)) => {
                log::warn!("topic model not fitted: {msg}; topic features will be imputed");
                None
            }
            Err(e) => return Err(e),
        }
    };

    let rows = ds
        .bundles
        .par_iter()
        .zip(docs.par_iter())
        .map(|(b, doc)| -> Result<Vec<Option<f64>>> {
            let mut row = aggregate_prosody(b, &config.prosody)?.values();

            let tokens = interview_tokens(&b.answers, &config.fillers);
            match category_counts(&tokens, &config.lexicon) {
                Ok(c) => row.extend(c.into_iter().map(|(_, v)| Some(v))),
                Err(_) => row.extend(std::iter::repeat_n(None, config.lexicon.len())),
            }
            match rate_features(&b.answers, &config.fillers) {
                Ok(r) => row.extend(r.values().map(Some)),
                Err(_) => row.extend([None; 5]),
            }
            match &model {
                Some(m) if !doc.is_empty() => row.extend(lda_infer(m, doc).into_iter().map(Some)),
                _ => row.extend(std::iter::repeat_n(None, topics)),
            }

            row.extend(facial_aggregate(b, ds.shape_model.as_ref(), &config.facial)?.values);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, model))
}

/// Extracts every interview's features and fills missing cells with the
/// column mean over the interviews where the value exists.
pub fn assemble(ds: &Dataset, config: &ExtractionConfig) -> Result<Extraction> {
    let census = feature_census(&config.lexicon, config.lda.topics);
    let (rows, topic_model) = extract_raw(ds, config)?;
    let d = census.len();
    let n = rows.len();
    let mut imputation = Vec::with_capacity(d);
    let mut data = vec![0.0; n * d];
    for (j, (name, modality)) in census.iter().enumerate() {
        let present: Vec<f64> = rows.iter().filter_map(|r| r[j]).collect();
        let missing = n - present.len();
        let fill_value = if present.is_empty() {
            if n > 0 {
                log::warn!("feature {name} is missing for every interview; filled with 0");
            }
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        };
        for (i, r) in rows.iter().enumerate() {
            data[i * d + j] = r[j].unwrap_or(fill_value);
        }
        imputation.push(ImputationRow {
            column: name.clone(),
            modality: *modality,
            missing,
            rate: if n == 0 {
                0.0
            } else {
                missing as f64 / n as f64
            },
            fill_value,
        });
    }
    let ids = ds.bundles.iter().map(|b| b.id.clone()).collect();
    let (columns, modalities) = census.into_iter().unzip();
    Ok(Extraction {
        matrix: FeatureMatrix::new(ids, columns, modalities, data)?,
        imputation,
        topic_model,
    })
}
