use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the sixteen rated behavioral dimensions.
///
/// Declaration order is the canonical report column order. `NoFillers`,
/// `NotStressed` and `NotAwkward` are stored on their labeled (reversed)
/// scale, where 7 is the desirable end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TraitId {
    Overall,
    RecommendHiring,
    Engagement,
    Excitement,
    EyeContact,
    Smile,
    Friendliness,
    SpeakingRate,
    NoFillers,
    Paused,
    Authentic,
    Calm,
    Focused,
    StructuredAnswers,
    NotStressed,
    NotAwkward,
}

impl TraitId {
    pub const COUNT: usize = 16;

    pub const ALL: [TraitId; 16] = [
        TraitId::Overall,
        TraitId::RecommendHiring,
        TraitId::Engagement,
        TraitId::Excitement,
        TraitId::EyeContact,
        TraitId::Smile,
        TraitId::Friendliness,
        TraitId::SpeakingRate,
        TraitId::NoFillers,
        TraitId::Paused,
        TraitId::Authentic,
        TraitId::Calm,
        TraitId::Focused,
        TraitId::StructuredAnswers,
        TraitId::NotStressed,
        TraitId::NotAwkward,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TraitId::Overall => "Overall",
            TraitId::RecommendHiring => "RecommendHiring",
            TraitId::Engagement => "Engagement",
            TraitId::Excitement => "Excitement",
            TraitId::EyeContact => "EyeContact",
            TraitId::Smile => "Smile",
            TraitId::Friendliness => "Friendliness",
            TraitId::SpeakingRate => "SpeakingRate",
            TraitId::NoFillers => "NoFillers",
            TraitId::Paused => "Paused",
            TraitId::Authentic => "Authentic",
            TraitId::Calm => "Calm",
            TraitId::Focused => "Focused",
            TraitId::StructuredAnswers => "StructuredAnswers",
            TraitId::NotStressed => "NotStressed",
            TraitId::NotAwkward => "NotAwkward",
        }
    }
}

impl fmt::Display for TraitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TraitId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim();
        TraitId::ALL
            .iter()
            .copied()
            .find(|t| t.name().eq_ignore_ascii_case(key))
            .ok_or_else(|| format!("unknown trait '{key}'"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_traits_in_canonical_order() {
        assert_eq!(TraitId::ALL.len(), TraitId::COUNT);
        for (i, t) in TraitId::ALL.iter().enumerate() {
            assert_eq!(t.index(), i);
            assert_eq!(t.name().parse::<TraitId>().unwrap(), *t);
        }
        assert!(TraitId::Overall < TraitId::NotAwkward);
    }

    #[test]
    fn parse_is_case_insensitive() {
        assert_eq!(
            "notstressed".parse::<TraitId>().unwrap(),
            TraitId::NotStressed
        );
        assert!("Charisma".parse::<TraitId>().is_err());
    }
}
