//! Bundled word lists and descriptor text.
//!
//! Every list is plain UTF-8, one entry per line; blank lines and lines
//! starting with `#` are ignored.

use sha2::{Digest, Sha256};

pub const POS_LEXICON: &str = include_str!("../data/pos_lexicon.txt");
pub const EASY_WORDS: &str = include_str!("../data/easy_words.txt");
pub const FUNCTION_WORDS: &str = include_str!("../data/function_words.txt");
pub const QUALIFIERS: &str = include_str!("../data/qualifiers.txt");
pub const ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");
pub const DESCRIPTORS: &str = include_str!("../data/descriptors.txt");

/// Non-comment, non-blank lines with their 1-based line numbers.
pub fn entries(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Case-folded entries of a word list.
pub fn parse_word_list(content: &str) -> Vec<String> {
    entries(content).map(|(_, l)| l.to_lowercase()).collect()
}

/// Hex SHA-256, used to pin resources in run metadata.
pub fn digest(content: &[u8]) -> String {
    hex::encode(Sha256::digest(content))
}
