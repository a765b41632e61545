use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../../data/default_lexicon.txt");
const DEFAULT_FILLERS: &str = include_str!("../../data/fillers.txt");
const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub name: String,
    exact: BTreeSet<String>,
    /// Wildcard prefixes, longest first.
    prefixes: Vec<String>,
}

impl Category {
    pub fn new(name: impl Into<String>, patterns: &[&str]) -> Result<Self> {
        let name = name.into();
        let mut exact = BTreeSet::new();
        let mut prefixes = Vec::new();
        for p in patterns {
            if p.is_empty() || *p == "*" {
                return Err(Error::Config(format!("{name}: empty pattern")));
            }
            if p.chars().any(|c| c.is_uppercase()) {
                return Err(Error::Config(format!(
                    "{name}: pattern '{p}' is not lowercase"
                )));
            }
            match p.strip_suffix('*') {
                Some(prefix) => prefixes.push(prefix.to_owned()),
                None => {
                    exact.insert((*p).to_owned());
                }
            }
        }
        prefixes.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        prefixes.dedup();
        Ok(Category {
            name,
            exact,
            prefixes,
        })
    }

    /// The pattern a word matches: an exact entry, else the longest wildcard
    /// prefix.
    pub fn matching_pattern(&self, word: &str) -> Option<String> {
        if self.exact.contains(word) {
            return Some(word.to_owned());
        }
        self.prefixes
            .iter()
            .find(|p| word.starts_with(p.as_str()))
            .map(|p| format!("{p}*"))
    }

    pub fn matches(&self, word: &str) -> bool {
        self.matching_pattern(word).is_some()
    }
}

/// Named word categories whose relative frequencies become lexical features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryLexicon {
    categories: Vec<Category>,
}

impl CategoryLexicon {
    pub fn new(categories: Vec<Category>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &categories {
            if !seen.insert(c.name.clone()) {
                return Err(Error::Config(format!("duplicate category '{}'", c.name)));
            }
        }
        Ok(CategoryLexicon { categories })
    }

    /// Parses `category<TAB>word1 word2 prefix* ...` records; `%` starts a
    /// comment line.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut cats = Vec::new();
        for (line, l) in content_lines(text) {
            let (name, words) = l.split_once('\t').ok_or_else(|| {
                Error::parse(format!("{source}:{line}"), "expected category<TAB>words")
            })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::parse(
                    format!("{source}:{line}"),
                    "empty category name",
                ));
            }
            let patterns: Vec<&str> = words.split_whitespace().collect();
            if patterns.is_empty() {
                return Err(Error::parse(
                    format!("{source}:{line}"),
                    "category without words",
                ));
            }
            cats.push(
                Category::new(name, &patterns)
                    .map_err(|e| Error::parse(format!("{source}:{line}"), e))?,
            );
        }
        CategoryLexicon::new(cats).map_err(|e| Error::parse(source, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Small stand-in lexicon with the 23 standard categories.
    pub fn default_lexicon() -> Self {
        Self::parse(DEFAULT_LEXICON, "default_lexicon.txt").expect("bundled lexicon parses")
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn names(&self) -> Vec<&str> {
        self.categories.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

/// A plain word set read from whitespace-separated text with `%` comments.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordSet(BTreeSet<String>);

impl WordSet {
    pub fn parse(text: &str) -> Self {
        WordSet(
            content_lines(text)
                .flat_map(|(_, l)| l.split_whitespace())
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn default_fillers() -> Self {
        Self::parse(DEFAULT_FILLERS)
    }

    pub fn default_stopwords() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn contains(&self, w: &str) -> bool {
        self.0.contains(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for WordSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        WordSet(iter.into_iter().map(Into::into).collect())
    }
}
