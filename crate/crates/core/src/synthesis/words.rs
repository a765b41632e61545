//! Word inventory for synthetic transcripts. Each entry lists the categories
//! of the default lexicon the word falls in, so category frequencies can be
//! tallied without consulting the lexicon.

pub(super) const CATEGORY_WORDS: &[(&str, &[&str])] = &[
    ("i", &["I"]),
    ("me", &["I"]),
    ("my", &["I"]),
    ("we", &["We"]),
    ("us", &["We"]),
    ("our", &["We"]),
    ("they", &["They"]),
    ("them", &["They"]),
    ("they're", &["They"]),
    ("well", &["NonFluencies"]),
    ("happy", &["PosEmotion"]),
    ("improving", &["PosEmotion"]),
    ("great", &["PosEmotion"]),
    ("bad", &["NegEmotion"]),
    ("worst", &["NegEmotion"]),
    ("losing", &["NegEmotion"]),
    ("nervous", &["Anxiety"]),
    ("worried", &["Anxiety"]),
    ("afraid", &["Anxiety"]),
    ("annoyed", &["Anger"]),
    ("mad", &["Anger"]),
    ("sad", &["Sadness"]),
    ("failed", &["Sadness"]),
    ("think", &["Cognitive"]),
    ("learned", &["Cognitive"]),
    ("because", &["Cognitive", "Conjunctions"]),
    ("prevent", &["Inhibition"]),
    ("stopped", &["Inhibition"]),
    ("see", &["Perceptual"]),
    ("watching", &["Perceptual"]),
    ("feel", &["Perceptual"]),
    ("new", &["Relativity"]),
    ("before", &["Relativity"]),
    ("first", &["Relativity", "Numbers"]),
    ("project", &["Work"]),
    ("internship", &["Work"]),
    ("working", &["Work"]),
    ("damn", &["Swear"]),
    ("hell", &["Swear"]),
    ("the", &["Articles"]),
    ("a", &["Articles"]),
    ("an", &["Articles"]),
    ("is", &["Verbs"]),
    ("was", &["Verbs"]),
    ("went", &["Verbs"]),
    ("really", &["Adverbs"]),
    ("just", &["Adverbs"]),
    ("so", &["Adverbs", "Conjunctions"]),
    ("with", &["Prepositions"]),
    ("about", &["Prepositions"]),
    ("in", &["Prepositions"]),
    ("and", &["Conjunctions"]),
    ("but", &["Conjunctions"]),
    ("not", &["Negations"]),
    ("never", &["Negations"]),
    ("don't", &["Negations"]),
    ("all", &["Quantifiers"]),
    ("every", &["Quantifiers"]),
    ("few", &["Quantifiers"]),
    ("two", &["Numbers"]),
    ("hundred", &["Numbers"]),
    ("second", &["Numbers"]),
];

/// Filler words, their categories, and whether the default filler list
/// already contains them.
pub(super) const FILLER_WORDS: &[(&str, &[&str], bool)] = &[
    ("uh", &["NonFluencies"], true),
    ("um", &["NonFluencies"], true),
    ("umm", &["NonFluencies"], true),
    ("er", &["NonFluencies"], true),
    ("hmm", &["NonFluencies"], true),
    ("eh", &[], true),
    ("mm", &[], true),
    ("like", &[], false),
];

/// Words used only by planted topic `k`; none of them matches a category.
pub(super) fn topic_word(k: usize, j: usize) -> String {
    let letter = |i: usize| char::from(b'a' + (i % 26) as u8);
    format!("tpk{}{}{}", letter(k), letter(j / 26), letter(j))
}

pub(super) const TOPIC_VOCABULARY: usize = 12;
pub(super) const PLANTED_TOPICS: usize = 4;
