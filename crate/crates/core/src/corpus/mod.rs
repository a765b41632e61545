//! Dataset model: manifests, transcripts, frame tracks and rating matrices.

mod manifest;
pub mod ratings;
pub mod tracks;
mod validate;

use serde::{Deserialize, Serialize};

use crate::facial::ShapeModel;

pub use manifest::{
    load_manifest, load_media, load_ratings, write_dataset, Manifest, ManifestEntry,
    PER_QUESTION_FILE, RATINGS_FILE,
};
pub use ratings::{
    OutOfRangeScore, PerQuestionFile, PerQuestionRatings, RatingGrid, RatingMatrix, RatingsFile,
};
pub use tracks::{
    slice_track, to_ms, AcousticFrame, AcousticTrack, FacialFrame, FacialTrack, Frame, SmileFrame,
    SmileTrack, Track,
};
pub use validate::{validate_dataset, Finding, Severity, ValidationReport};

/// Number of interview questions each interview is expected to cover.
pub const QUESTIONS: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub w: String,
    /// Transcriber's filler mark. When absent the filler lexicon decides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filler: Option<bool>,
}

impl Token {
    pub fn new(w: impl Into<String>) -> Self {
        Token {
            w: w.into(),
            filler: None,
        }
    }

    pub fn flagged(w: impl Into<String>, filler: bool) -> Self {
        Token {
            w: w.into(),
            filler: Some(filler),
        }
    }
}

/// One annotated interviewee answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSegment {
    pub question: u8,
    pub start_s: f64,
    pub end_s: f64,
    pub tokens: Vec<Token>,
}

impl AnswerSegment {
    pub fn duration_s(&self) -> f64 {
        (to_ms(self.end_s) - to_ms(self.start_s)) as f64 / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub id: String,
    pub answers: Vec<AnswerSegment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterviewBundle {
    pub id: String,
    /// Sorted by question index.
    pub answers: Vec<AnswerSegment>,
    pub acoustic: Option<AcousticTrack>,
    pub facial: Option<FacialTrack>,
    pub smile: Option<SmileTrack>,
}

/// A loaded dataset. Immutable once built; safe to share across workers.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: std::path::PathBuf,
    pub manifest: Manifest,
    /// Sorted by interview id.
    pub bundles: Vec<InterviewBundle>,
    pub ratings: Option<RatingsFile>,
    pub per_question: Option<PerQuestionFile>,
    pub shape_model: Option<ShapeModel>,
}

impl Dataset {
    pub fn interview_count(&self) -> usize {
        self.bundles.len()
    }

    pub fn rating_matrix(&self) -> Option<&RatingMatrix> {
        self.ratings.as_ref().map(|r| &r.matrix)
    }

    pub fn per_question_ratings(&self) -> Option<&PerQuestionRatings> {
        self.per_question.as_ref().map(|p| &p.ratings)
    }

    pub fn bundle(&self, id: &str) -> Option<&InterviewBundle> {
        self.bundles
            .binary_search_by(|b| b.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.bundles[i])
    }
}
