use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::resources;

use super::{Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Det,
    Pron,
    Adp,
    Conj,
    Num,
    Part,
    Punct,
    Other,
}

impl PosTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Det => "DET",
            PosTag::Pron => "PRON",
            PosTag::Adp => "ADP",
            PosTag::Conj => "CONJ",
            PosTag::Num => "NUM",
            PosTag::Part => "PART",
            PosTag::Punct => "PUNCT",
            PosTag::Other => "OTHER",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "NOUN" => PosTag::Noun,
            "VERB" => PosTag::Verb,
            "ADJ" => PosTag::Adj,
            "ADV" => PosTag::Adv,
            "DET" => PosTag::Det,
            "PRON" => PosTag::Pron,
            "ADP" => PosTag::Adp,
            "CONJ" => PosTag::Conj,
            "NUM" => PosTag::Num,
            "PART" => PosTag::Part,
            "PUNCT" => PosTag::Punct,
            "OTHER" => PosTag::Other,
            _ => return Err(format!("unknown tag {s:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    tag: PosTag,
    auxiliary: bool,
}

/// Closed-class and common open-class words with their tags.
///
/// Lines are `word TAG`; the pseudo-tag `AUX` tags the word as a verb and marks
/// it as an auxiliary for the participle rule.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    entries: HashMap<String, Entry>,
}

impl PosLexicon {
    pub fn parse(content: &str) -> Result<PosLexicon, String> {
        let mut entries = HashMap::new();
        for (n, line) in resources::entries(content) {
            let mut parts = line.split_whitespace();
            let (Some(word), Some(tag), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(format!("line {n}: expected `word TAG`"));
            };
            let entry = if tag == "AUX" {
                Entry {
                    tag: PosTag::Verb,
                    auxiliary: true,
                }
            } else {
                Entry {
                    tag: tag.parse().map_err(|e| format!("line {n}: {e}"))?,
                    auxiliary: false,
                }
            };
            entries.entry(word.to_lowercase()).or_insert(entry);
        }
        Ok(PosLexicon { entries })
    }

    pub fn bundled() -> &'static PosLexicon {
        static LEX: OnceLock<PosLexicon> = OnceLock::new();
        LEX.get_or_init(|| PosLexicon::parse(resources::POS_LEXICON).expect("bundled lexicon parses"))
    }

    fn is_auxiliary(&self, word: &str) -> bool {
        self.entries.get(word).is_some_and(|e| e.auxiliary)
    }

    /// Tags each token: lexicon lookup, then suffix rules, then NOUN.
    pub fn tag(&self, tokens: &[Token]) -> Vec<PosTag> {
        let mut tags = Vec::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            let tag = match tok.kind {
                TokenKind::Punct => PosTag::Punct,
                TokenKind::Number => PosTag::Num,
                TokenKind::Word => match self.entries.get(&tok.lower) {
                    Some(e) => e.tag,
                    None => self.suffix_tag(&tok.lower, &tokens[..i], &tags),
                },
            };
            tags.push(tag);
        }
        tags
    }

    fn suffix_tag(&self, word: &str, before: &[Token], before_tags: &[PosTag]) -> PosTag {
        let chars = word.chars().count();
        if chars >= 4 && word.ends_with("ly") {
            return PosTag::Adv;
        }
        if chars >= 5 && ["ous", "ful", "ive", "al"].iter().any(|s| word.ends_with(s)) {
            return PosTag::Adj;
        }
        if chars >= 4 && (word.ends_with("ing") || word.ends_with("ed")) {
            // nearest preceding word, looking through adverbs and "not"
            let governor = before
                .iter()
                .zip(before_tags)
                .rev()
                .find(|(_, tag)| !matches!(tag, PosTag::Adv | PosTag::Part));
            if let Some((tok, _)) = governor {
                if self.is_auxiliary(&tok.lower) {
                    return PosTag::Verb;
                }
            }
        }
        PosTag::Noun
    }
}

pub fn pos_tag(tokens: &[Token]) -> Vec<PosTag> {
    PosLexicon::bundled().tag(tokens)
}
