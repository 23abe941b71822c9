use std::fmt;
use std::str::FromStr;

use crate::corpus::CefrBand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Competence {
    Linguistic,
    Pragmatic,
}

/// The nine analytic aspects: five linguistic, then four pragmatic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AspectId {
    GeneralLinguisticRange,
    VocabularyRange,
    GrammaticalAccuracy,
    VocabularyControl,
    OrthographicControl,
    Flexibility,
    ThematicDevelopment,
    CoherenceCohesion,
    PropositionalPrecision,
}

const ALL_BANDS: &[CefrBand] = &CefrBand::ALL;
const NO_A1: &[CefrBand] = &[CefrBand::A2, CefrBand::B1, CefrBand::B2, CefrBand::C1, CefrBand::C2];

impl AspectId {
    pub const ALL: [AspectId; 9] = [
        AspectId::GeneralLinguisticRange,
        AspectId::VocabularyRange,
        AspectId::GrammaticalAccuracy,
        AspectId::VocabularyControl,
        AspectId::OrthographicControl,
        AspectId::Flexibility,
        AspectId::ThematicDevelopment,
        AspectId::CoherenceCohesion,
        AspectId::PropositionalPrecision,
    ];

    pub fn competence(self) -> Competence {
        if (self as usize) < 5 {
            Competence::Linguistic
        } else {
            Competence::Pragmatic
        }
    }

    /// Stable machine key used in score files and cache metadata.
    pub fn key(self) -> &'static str {
        match self {
            AspectId::GeneralLinguisticRange => "general_linguistic_range",
            AspectId::VocabularyRange => "vocabulary_range",
            AspectId::GrammaticalAccuracy => "grammatical_accuracy",
            AspectId::VocabularyControl => "vocabulary_control",
            AspectId::OrthographicControl => "orthographic_control",
            AspectId::Flexibility => "flexibility",
            AspectId::ThematicDevelopment => "thematic_development",
            AspectId::CoherenceCohesion => "coherence_cohesion",
            AspectId::PropositionalPrecision => "propositional_precision",
        }
    }

    /// Name as it appears in prompts and in the descriptor file.
    pub fn name(self) -> &'static str {
        match self {
            AspectId::GeneralLinguisticRange => "general linguistic range",
            AspectId::VocabularyRange => "vocabulary range",
            AspectId::GrammaticalAccuracy => "grammatical accuracy",
            AspectId::VocabularyControl => "vocabulary control",
            AspectId::OrthographicControl => "orthographic control",
            AspectId::Flexibility => "flexibility",
            AspectId::ThematicDevelopment => "thematic development",
            AspectId::CoherenceCohesion => "coherence and cohesion",
            AspectId::PropositionalPrecision => "propositional precision",
        }
    }

    /// Abbreviated row label for correlation tables.
    pub fn short_label(self) -> &'static str {
        match self {
            AspectId::GeneralLinguisticRange => "gen. lin.",
            AspectId::VocabularyRange => "voc. rg.",
            AspectId::GrammaticalAccuracy => "gramm.",
            AspectId::VocabularyControl => "voc. ctrl.",
            AspectId::OrthographicControl => "orth.",
            AspectId::Flexibility => "flexib.",
            AspectId::ThematicDevelopment => "themat.",
            AspectId::CoherenceCohesion => "coh.",
            AspectId::PropositionalPrecision => "propos.",
        }
    }

    /// Bands with a descriptor. Vocabulary control, flexibility and thematic
    /// development have none at A1.
    pub fn levels(self) -> &'static [CefrBand] {
        match self {
            AspectId::VocabularyControl | AspectId::Flexibility | AspectId::ThematicDevelopment => NO_A1,
            _ => ALL_BANDS,
        }
    }

    pub fn option_count(self) -> usize {
        self.levels().len()
    }

    /// Nearest available band.
    pub fn clamp(self, band: CefrBand) -> CefrBand {
        band.max(self.levels()[0])
    }

    pub fn from_name(name: &str) -> Option<AspectId> {
        AspectId::ALL.into_iter().find(|a| a.name() == name)
    }
}

impl fmt::Display for AspectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl serde::Serialize for AspectId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.key())
    }
}

impl FromStr for AspectId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AspectId::ALL
            .into_iter()
            .find(|a| a.key() == s || a.name() == s)
            .ok_or_else(|| format!("unknown aspect {s:?}"))
    }
}
