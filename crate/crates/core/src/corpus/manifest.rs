use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::facial::ShapeModel;

use super::ratings::{
    read_per_question_csv, read_ratings_csv, write_per_question_csv, write_ratings_csv,
    PerQuestionFile, RatingsFile,
};
use super::tracks::{
    read_acoustic_csv, read_facial_csv, read_smile_csv, write_acoustic_csv, write_facial_csv,
    write_smile_csv,
};
use super::{Dataset, InterviewBundle, Transcript};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RATINGS_FILE: &str = "ratings.csv";
pub const PER_QUESTION_FILE: &str = "per_question_ratings.csv";
pub const SHAPE_MODEL_FILE: &str = "shape_model.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub transcript: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acoustic_track: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facial_track: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smile_track: Option<String>,
}

/// Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub interviews: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratings: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_question_ratings: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_model: Option<String>,
}

fn existing(root: &Path, rel: &str) -> Result<PathBuf> {
    let p = root.join(rel);
    if !p.is_file() {
        return Err(Error::io(
            p,
            std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file not found"),
        ));
    }
    Ok(p)
}

fn read_transcript(path: &Path) -> Result<Transcript> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::parse(format!("{}:{}:{}", path.display(), e.line(), e.column()), e))
}

/// Loads the manifest, transcripts, tracks and shape model, leaving the
/// rating files for a later stage.
pub fn load_media(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::parse(format!("{}:{}:{}", path.display(), e.line(), e.column()), e))?;
    let root = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let mut seen = BTreeSet::new();
    let mut bundles = Vec::with_capacity(manifest.interviews.len());
    for (k, entry) in manifest.interviews.iter().enumerate() {
        let loc = format!("{} interviews[{k}]", path.display());
        if entry.id.is_empty() {
            return Err(Error::parse(loc, "empty interview id"));
        }
        if !seen.insert(entry.id.clone()) {
            return Err(Error::parse(
                loc,
                format!("duplicate interview id '{}'", entry.id),
            ));
        }
        let tpath = existing(&root, &entry.transcript)?;
        let transcript = read_transcript(&tpath)?;
        if transcript.id != entry.id {
            return Err(Error::parse(
                tpath.display().to_string(),
                format!(
                    "transcript id '{}' does not match manifest id '{}'",
                    transcript.id, entry.id
                ),
            ));
        }
        let mut answers = transcript.answers;
        answers.sort_by_key(|a| a.question);
        let acoustic = match &entry.acoustic_track {
            Some(p) => Some(read_acoustic_csv(&existing(&root, p)?)?),
            None => None,
        };
        let facial = match &entry.facial_track {
            Some(p) => Some(read_facial_csv(&existing(&root, p)?)?),
            None => None,
        };
        let smile = match &entry.smile_track {
            Some(p) => Some(read_smile_csv(&existing(&root, p)?)?),
            None => None,
        };
        bundles.push(InterviewBundle {
            id: entry.id.clone(),
            answers,
            acoustic,
            facial,
            smile,
        });
    }
    bundles.sort_by(|a, b| a.id.cmp(&b.id));

    let shape_model = match &manifest.shape_model {
        Some(p) => Some(ShapeModel::read_csv(&existing(&root, p)?)?),
        None => None,
    };
    if bundles.is_empty() {
        log::warn!("{}: manifest lists no interviews", path.display());
    } else {
        log::info!("{}: loaded {} interviews", path.display(), bundles.len());
    }

    Ok(Dataset {
        root,
        manifest,
        bundles,
        ratings: None,
        per_question: None,
        shape_model,
    })
}

/// Reads the rating files named by the dataset's manifest.
pub fn load_ratings(dataset: &Dataset) -> Result<(Option<RatingsFile>, Option<PerQuestionFile>)> {
    let ratings = match &dataset.manifest.ratings {
        Some(p) => Some(read_ratings_csv(&existing(&dataset.root, p)?)?),
        None => None,
    };
    let per_question = match &dataset.manifest.per_question_ratings {
        Some(p) => Some(read_per_question_csv(&existing(&dataset.root, p)?)?),
        None => None,
    };
    Ok((ratings, per_question))
}

/// Loads a complete dataset: every referenced file must exist and parse.
pub fn load_manifest(path: &Path) -> Result<Dataset> {
    let mut ds = load_media(path)?;
    let (ratings, per_question) = load_ratings(&ds)?;
    ds.ratings = ratings;
    ds.per_question = per_question;
    Ok(ds)
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes a dataset in the standard on-disk layout under `dir` and returns the
/// manifest path.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::default();
    for b in &dataset.bundles {
        let stem = file_stem(&b.id);
        let transcript = format!("transcripts/{stem}.json");
        let tpath = dir.join(&transcript);
        fs::create_dir_all(tpath.parent().unwrap()).map_err(|e| Error::io(&tpath, e))?;
        let t = Transcript {
            id: b.id.clone(),
            answers: b.answers.clone(),
        };
        let json = serde_json::to_string(&t).expect("transcript serializes");
        fs::write(&tpath, json).map_err(|e| Error::io(&tpath, e))?;

        let mut entry = ManifestEntry {
            id: b.id.clone(),
            transcript,
            acoustic_track: None,
            facial_track: None,
            smile_track: None,
        };
        if let Some(track) = &b.acoustic {
            let rel = format!("acoustic/{stem}.csv");
            write_acoustic_csv(&dir.join(&rel), track)?;
            entry.acoustic_track = Some(rel);
        }
        if let Some(track) = &b.facial {
            let rel = format!("facial/{stem}.csv");
            write_facial_csv(&dir.join(&rel), track)?;
            entry.facial_track = Some(rel);
        }
        if let Some(track) = &b.smile {
            let rel = format!("smile/{stem}.csv");
            write_smile_csv(&dir.join(&rel), track)?;
            entry.smile_track = Some(rel);
        }
        manifest.interviews.push(entry);
    }
    if let Some(r) = &dataset.ratings {
        write_ratings_csv(&dir.join(RATINGS_FILE), &r.matrix)?;
        manifest.ratings = Some(RATINGS_FILE.into());
    }
    if let Some(pq) = &dataset.per_question {
        write_per_question_csv(&dir.join(PER_QUESTION_FILE), &pq.ratings)?;
        manifest.per_question_ratings = Some(PER_QUESTION_FILE.into());
    }
    if let Some(sm) = &dataset.shape_model {
        sm.write_csv(&dir.join(SHAPE_MODEL_FILE))?;
        manifest.shape_model = Some(SHAPE_MODEL_FILE.into());
    }
    let mpath = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&mpath, json).map_err(|e| Error::io(&mpath, e))?;
    Ok(mpath)
}
