use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Word,
    Number,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub kind: TokenKind,
    /// Byte offsets into the source text.
    pub span: Range<usize>,
}

impl Token {
    /// Words and numbers; the unit for every "number of words" measurement.
    pub fn is_wordlike(&self) -> bool {
        matches!(self.kind, TokenKind::Word | TokenKind::Number)
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Space,
    Letter,
    Digit,
    Other,
}

fn classify(c: char) -> Class {
    if c.is_whitespace() {
        Class::Space
    } else if c.is_alphabetic() {
        Class::Letter
    } else if c.is_numeric() {
        Class::Digit
    } else {
        Class::Other
    }
}

/// Splits text into word, number and punctuation runs.
///
/// A word starts at a letter and extends over letters and apostrophes, so
/// "Don't" stays one token while a leading quote mark is punctuation. Any
/// other run of non-space symbols is a single punctuation token. Whitespace is
/// never part of a token, which keeps the segmentation lossless.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        let kind = match classify(c) {
            Class::Space => continue,
            Class::Letter => TokenKind::Word,
            Class::Digit => TokenKind::Number,
            Class::Other => TokenKind::Punct,
        };
        let mut end = start + c.len_utf8();
        while let Some(&(i, next)) = chars.peek() {
            let cont = match kind {
                TokenKind::Word => classify(next) == Class::Letter || is_apostrophe(next),
                TokenKind::Number => classify(next) == Class::Digit,
                TokenKind::Punct => classify(next) == Class::Other,
            };
            if !cont {
                break;
            }
            end = i + next.len_utf8();
            chars.next();
        }
        let surface = &text[start..end];
        tokens.push(Token {
            surface: surface.to_string(),
            lower: surface.to_lowercase(),
            kind,
            span: start..end,
        });
    }
    tokens
}
