use std::collections::HashSet;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;

use crate::resources;

/// Words that end in a period without ending a sentence ("Mr.", "e.g.").
/// Stored case-folded and without the final period.
#[derive(Debug, Clone, Default)]
pub struct AbbreviationList {
    entries: HashSet<String>,
}

impl AbbreviationList {
    pub fn parse(content: &str) -> AbbreviationList {
        AbbreviationList {
            entries: resources::parse_word_list(content)
                .into_iter()
                .map(|w| w.trim_end_matches('.').to_string())
                .collect(),
        }
    }

    pub fn bundled() -> &'static AbbreviationList {
        static LIST: OnceLock<AbbreviationList> = OnceLock::new();
        LIST.get_or_init(|| AbbreviationList::parse(resources::ABBREVIATIONS))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    /// Sentence spans as byte ranges. The spans tile the text: whitespace after
    /// a terminator belongs to the sentence it closes, leading whitespace to the
    /// first sentence. Whitespace-only text has no sentences.
    pub fn split(&self, text: &str) -> Vec<Range<usize>> {
        if text.trim().is_empty() {
            return Vec::new();
        }
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut spans = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            if !is_terminator(chars[i].1) {
                i += 1;
                continue;
            }
            let run_start = i;
            while i < chars.len() && is_terminator(chars[i].1) {
                i += 1;
            }
            let single_period = i - run_start == 1 && chars[run_start].1 == '.';
            while i < chars.len() && is_closer(chars[i].1) {
                i += 1;
            }
            let mut next = i;
            while next < chars.len() && chars[next].1.is_whitespace() {
                next += 1;
            }
            let at_end = next == chars.len();
            let capital_follows = next > i && !at_end && chars[next].1.is_uppercase();
            if !(at_end || capital_follows) {
                continue;
            }
            if single_period && !at_end && self.is_abbreviation(text, chars[run_start].0) {
                continue;
            }
            let boundary = if at_end { text.len() } else { chars[next].0 };
            spans.push(start..boundary);
            start = boundary;
            i = next;
        }
        if start < text.len() {
            spans.push(start..text.len());
        }
        spans
    }

    fn is_abbreviation(&self, text: &str, period: usize) -> bool {
        let before = &text[..period];
        let word_start = before
            .char_indices()
            .rev()
            .take_while(|&(_, c)| c.is_alphabetic() || c == '.')
            .last()
            .map_or(period, |(i, _)| i);
        let word = before[word_start..].to_lowercase();
        !word.is_empty() && self.contains(&word)
    }
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Splits at `.`, `!` or `?` followed by whitespace and a capital letter, or
/// by the end of the text, using the bundled abbreviation list.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    AbbreviationList::bundled().split(text)
}

/// Paragraphs are separated by one or more blank lines.
pub fn split_paragraphs(text: &str) -> Vec<&str> {
    static BLANK: OnceLock<Regex> = OnceLock::new();
    let blank = BLANK.get_or_init(|| Regex::new(r"\n(?:[^\S\n]*\n)+").expect("valid regex"));
    blank.split(text).map(str::trim).filter(|p| !p.is_empty()).collect()
}
