//! Lexical features: category relative frequencies, speaking-rate and
//! fluency counts, and topic proportions.

mod lda;
mod lexicon;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnswerSegment, Token};
use crate::error::{Error, Result};

pub use lda::{lda_fit, lda_infer, LdaConfig, TopicModel};
pub use lexicon::{Category, CategoryLexicon, WordSet};

pub const RATE_FEATURES: [&str; 5] = ["wpsec", "upsec", "fpsec", "wc", "uc"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormToken {
    pub text: String,
    pub filler: bool,
}

fn normalize_word(w: &str) -> String {
    let kept: String = w
        .chars()
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .filter(|c| c.is_alphanumeric() || *c == '\'')
        .flat_map(char::to_lowercase)
        .collect();
    kept.trim_matches('\'').to_owned()
}

/// Lowercases and strips punctuation (internal apostrophes survive), dropping
/// tokens that end up empty. A transcriber's filler mark is authoritative;
/// unmarked tokens are fillers when the filler lexicon lists them.
pub fn tokenize(tokens: &[Token], fillers: &WordSet) -> Vec<NormToken> {
    tokens
        .iter()
        .filter_map(|t| {
            let text = normalize_word(&t.w);
            if text.is_empty() {
                return None;
            }
            let filler = t.filler.unwrap_or_else(|| fillers.contains(&text));
            Some(NormToken { text, filler })
        })
        .collect()
}

/// Fraction of tokens that fall in each category, in lexicon order. A token
/// counts toward every category it matches.
pub fn category_counts(
    tokens: &[NormToken],
    lexicon: &CategoryLexicon,
) -> Result<Vec<(String, f64)>> {
    if tokens.is_empty() {
        return Err(Error::EmptyTranscript);
    }
    let n = tokens.len() as f64;
    Ok(lexicon
        .categories()
        .iter()
        .map(|c| {
            let hits = tokens.iter().filter(|t| c.matches(&t.text)).count();
            (c.name.clone(), hits as f64 / n)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFeatures {
    pub wpsec: f64,
    pub upsec: f64,
    pub fpsec: f64,
    pub wc: f64,
    pub uc: f64,
}

impl RateFeatures {
    pub fn values(&self) -> [f64; 5] {
        [self.wpsec, self.upsec, self.fpsec, self.wc, self.uc]
    }
}

/// Speaking-rate and fluency features over all answers together.
pub fn rate_features(answers: &[AnswerSegment], fillers: &WordSet) -> Result<RateFeatures> {
    let duration: f64 = answers.iter().map(AnswerSegment::duration_s).sum();
    if !(duration > 0.0) {
        return Err(Error::Degenerate("total answer duration is zero".into()));
    }
    let mut wc = 0usize;
    let mut n_fillers = 0usize;
    let mut distinct = BTreeSet::new();
    for a in answers {
        for t in tokenize(&a.tokens, fillers) {
            wc += 1;
            n_fillers += usize::from(t.filler);
            distinct.insert(t.text);
        }
    }
    let uc = distinct.len();
    Ok(RateFeatures {
        wpsec: wc as f64 / duration,
        upsec: uc as f64 / duration,
        fpsec: n_fillers as f64 / duration,
        wc: wc as f64,
        uc: uc as f64,
    })
}

/// All normalized tokens of an interview, answers in question order.
pub fn interview_tokens(answers: &[AnswerSegment], fillers: &WordSet) -> Vec<NormToken> {
    answers
        .iter()
        .flat_map(|a| tokenize(&a.tokens, fillers))
        .collect()
}

pub fn topic_feature_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("topic{i:02}")).collect()
}
