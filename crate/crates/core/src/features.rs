//! The nine per-essay linguistic features used as correlates of analytic scores.
//!
//! | column                  | measure                                              |
//! |-------------------------|------------------------------------------------------|
//! | `gram_rate`             | edits between text and correction per word           |
//! | `difficult_words`       | distinct non-familiar words of two or more syllables |
//! | `unique_words`          | distinct case-folded words                           |
//! | `lexical_density_types` | share of word types that are content words          |
//! | `unique_noun_chunks`    | distinct `DET? (ADJ|NUM)* NOUN+` chunks              |
//! | `unique_qualifiers`     | distinct qualifier / modality / hedge words          |
//! | `flesch_kincaid`        | Flesch–Kincaid grade level                           |
//! | `paragraph_similarity`  | mean embedding cosine of adjacent paragraphs         |
//! | `avg_sentence_length`   | words per sentence                                   |
//!
//! "Words" are word and number tokens throughout; punctuation never counts.

use std::collections::HashSet;
use std::io;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, EssayRecord};
use crate::resources;
use crate::textprims::{
    cosine, extract_edits, split_paragraphs, tokenize, AbbreviationList, EmbeddingTable, PosLexicon, PosTag, Token,
    TokenEquality, TokenKind,
};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("essay {0:?} contains no words")]
    EmptyEssay(String),
    #[error("feature CSV: {0}")]
    Csv(String),
}

pub type Result<T, E = FeatureError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
pub struct FeatureResources {
    pub easy_words: HashSet<String>,
    pub qualifiers: HashSet<String>,
    pub function_words: HashSet<String>,
    pub embeddings: EmbeddingTable,
    pub pos_lexicon: PosLexicon,
    pub abbreviations: AbbreviationList,
    pub equality: TokenEquality,
}

impl FeatureResources {
    /// Bundled lexicons with the given embeddings.
    pub fn bundled(embeddings: EmbeddingTable) -> FeatureResources {
        FeatureResources {
            easy_words: word_set(resources::EASY_WORDS),
            qualifiers: word_set(resources::QUALIFIERS),
            function_words: word_set(resources::FUNCTION_WORDS),
            embeddings,
            pos_lexicon: PosLexicon::bundled().clone(),
            abbreviations: AbbreviationList::bundled().clone(),
            equality: TokenEquality::default(),
        }
    }
}

pub fn word_set(content: &str) -> HashSet<String> {
    resources::parse_word_list(content).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub gram_rate: Option<f64>,
    pub difficult_words: u64,
    pub unique_words: u64,
    pub lexical_density_types: f64,
    pub unique_noun_chunks: u64,
    pub unique_qualifiers: u64,
    pub flesch_kincaid: f64,
    pub paragraph_similarity: Option<f64>,
    pub avg_sentence_length: Option<f64>,
}

pub const FEATURE_COLUMNS: [&str; 9] = [
    "gram_rate",
    "difficult_words",
    "unique_words",
    "lexical_density_types",
    "unique_noun_chunks",
    "unique_qualifiers",
    "flesch_kincaid",
    "paragraph_similarity",
    "avg_sentence_length",
];

/// Short column labels used in correlation tables, in [`FEATURE_COLUMNS`] order.
pub const FEATURE_LABELS: [&str; 9] = [
    "%gram.",
    "#dif.wds.",
    "#unq.wds.",
    "%l.d.t.",
    "#unq.n.cks.",
    "#unq.q.m.a.",
    "fl.-kinc.",
    "w2v",
    "av.s.ln.",
];

impl FeatureVector {
    /// Values in [`FEATURE_COLUMNS`] order; absent features are `None`.
    pub fn values(&self) -> [Option<f64>; 9] {
        [
            self.gram_rate,
            Some(self.difficult_words as f64),
            Some(self.unique_words as f64),
            Some(self.lexical_density_types),
            Some(self.unique_noun_chunks as f64),
            Some(self.unique_qualifiers as f64),
            Some(self.flesch_kincaid),
            self.paragraph_similarity,
            self.avg_sentence_length,
        ]
    }
}

fn word_types(tokens: &[Token]) -> HashSet<&str> {
    tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.lower.as_str())
        .collect()
}

fn word_count(tokens: &[Token]) -> usize {
    tokens.iter().filter(|t| t.is_wordlike()).count()
}

fn syllables(token: &Token) -> usize {
    match token.kind {
        TokenKind::Word => crate::textprims::count_syllables(&token.surface).unwrap_or(1),
        _ => 1,
    }
}

/// Tokens and sentence count of one text, shared by the token-based features.
struct Analysis<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    sentences: usize,
}

impl<'a> Analysis<'a> {
    fn new(text: &'a str, abbreviations: &AbbreviationList) -> Analysis<'a> {
        Analysis {
            text,
            tokens: tokenize(text),
            sentences: abbreviations.split(text).len(),
        }
    }

    fn words(&self) -> usize {
        word_count(&self.tokens)
    }

    fn gram_rate(&self, corrected: Option<&str>, equality: TokenEquality, id: &str) -> Result<Option<f64>> {
        let Some(corrected) = corrected else {
            return Ok(None);
        };
        let words = self.words();
        if words == 0 {
            return Err(FeatureError::EmptyEssay(id.to_string()));
        }
        let script = extract_edits(&self.tokens, &tokenize(corrected), equality);
        Ok(Some(script.len() as f64 / words as f64))
    }

    fn difficult_words(&self, easy: &HashSet<String>) -> u64 {
        let mut seen = HashSet::new();
        for t in self.tokens.iter().filter(|t| t.kind == TokenKind::Word) {
            if !easy.contains(&t.lower) && syllables(t) >= 2 {
                seen.insert(t.lower.as_str());
            }
        }
        seen.len() as u64
    }

    fn unique_words(&self) -> u64 {
        word_types(&self.tokens).len() as u64
    }

    fn lexical_density_types(&self, function_words: &HashSet<String>, id: &str) -> Result<f64> {
        let types = word_types(&self.tokens);
        if types.is_empty() {
            return Err(FeatureError::EmptyEssay(id.to_string()));
        }
        let content = types.iter().filter(|w| !function_words.contains(**w)).count();
        Ok(content as f64 / types.len() as f64)
    }

    fn unique_noun_chunks(&self, lexicon: &PosLexicon) -> u64 {
        let tags = lexicon.tag(&self.tokens);
        let mut chunks = HashSet::new();
        let mut i = 0;
        while i < tags.len() {
            match match_chunk(&tags, i) {
                Some(end) => {
                    let chunk: Vec<&str> = self.tokens[i..end].iter().map(|t| t.lower.as_str()).collect();
                    chunks.insert(chunk.join(" "));
                    i = end;
                }
                None => i += 1,
            }
        }
        chunks.len() as u64
    }

    fn unique_qualifiers(&self, qualifiers: &HashSet<String>) -> u64 {
        word_types(&self.tokens)
            .into_iter()
            .filter(|w| qualifiers.contains(*w))
            .count() as u64
    }

    fn flesch_kincaid(&self, id: &str) -> Result<f64> {
        let words = self.words();
        if words == 0 || self.sentences == 0 {
            return Err(FeatureError::EmptyEssay(id.to_string()));
        }
        let syllables: usize = self.tokens.iter().filter(|t| t.is_wordlike()).map(syllables).sum();
        let words = words as f64;
        Ok(0.39 * (words / self.sentences as f64) + 11.8 * (syllables as f64 / words) - 15.59)
    }

    fn avg_sentence_length(&self) -> Option<f64> {
        let words = self.words();
        (self.sentences > 0 && words > 0).then(|| words as f64 / self.sentences as f64)
    }

    fn paragraph_similarity(&self, embeddings: &EmbeddingTable) -> Option<f64> {
        paragraph_similarity_of(self.text, embeddings)
    }
}

/// End of the chunk `DET? (ADJ|NUM)* NOUN+` starting at `start`, if any.
fn match_chunk(tags: &[PosTag], start: usize) -> Option<usize> {
    let mut i = start;
    if tags.get(i) == Some(&PosTag::Det) {
        i += 1;
    }
    while matches!(tags.get(i), Some(PosTag::Adj | PosTag::Num)) {
        i += 1;
    }
    let nouns_start = i;
    while tags.get(i) == Some(&PosTag::Noun) {
        i += 1;
    }
    (i > nouns_start).then_some(i)
}

fn paragraph_vector(paragraph: &str, embeddings: &EmbeddingTable) -> Option<Vec<f64>> {
    let mut sum = vec![0.0f64; embeddings.dimension()];
    let mut n = 0usize;
    for t in tokenize(paragraph).iter().filter(|t| t.kind == TokenKind::Word) {
        if let Some(v) = embeddings.get(&t.lower) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += f64::from(*x);
            }
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    let mean: Vec<f64> = sum.into_iter().map(|s| s / n as f64).collect();
    mean.iter().any(|&x| x != 0.0).then_some(mean)
}

/// Paragraphs without any in-vocabulary word are skipped, so "adjacent" means
/// adjacent among the representable paragraphs.
fn paragraph_similarity_of(text: &str, embeddings: &EmbeddingTable) -> Option<f64> {
    let vectors: Vec<Vec<f64>> = split_paragraphs(text)
        .into_iter()
        .filter_map(|p| paragraph_vector(p, embeddings))
        .collect();
    if vectors.len() < 2 {
        return None;
    }
    let sims: Vec<f64> = vectors
        .windows(2)
        .map(|w| cosine(&w[0], &w[1]).expect("paragraph vectors are non-zero and equal length"))
        .collect();
    Some(sims.iter().sum::<f64>() / sims.len() as f64)
}

fn bundled() -> &'static AbbreviationList {
    AbbreviationList::bundled()
}

pub fn grammatical_error_rate(essay: &EssayRecord) -> Result<Option<f64>> {
    Analysis::new(&essay.text, bundled()).gram_rate(
        essay.corrected_text.as_deref(),
        TokenEquality::default(),
        &essay.id,
    )
}

pub fn difficult_word_count(essay: &EssayRecord, resources: &FeatureResources) -> u64 {
    Analysis::new(&essay.text, &resources.abbreviations).difficult_words(&resources.easy_words)
}

pub fn unique_word_count(essay: &EssayRecord) -> u64 {
    word_types(&tokenize(&essay.text)).len() as u64
}

pub fn lexical_density_types(essay: &EssayRecord, resources: &FeatureResources) -> Result<f64> {
    Analysis::new(&essay.text, &resources.abbreviations).lexical_density_types(&resources.function_words, &essay.id)
}

pub fn unique_noun_chunks(essay: &EssayRecord) -> u64 {
    Analysis::new(&essay.text, bundled()).unique_noun_chunks(PosLexicon::bundled())
}

pub fn unique_qualifier_count(essay: &EssayRecord, resources: &FeatureResources) -> u64 {
    Analysis::new(&essay.text, &resources.abbreviations).unique_qualifiers(&resources.qualifiers)
}

pub fn flesch_kincaid(essay: &EssayRecord) -> Result<f64> {
    Analysis::new(&essay.text, bundled()).flesch_kincaid(&essay.id)
}

pub fn paragraph_similarity(essay: &EssayRecord, resources: &FeatureResources) -> Option<f64> {
    paragraph_similarity_of(&essay.text, &resources.embeddings)
}

pub fn avg_sentence_length(essay: &EssayRecord) -> Option<f64> {
    Analysis::new(&essay.text, bundled()).avg_sentence_length()
}

pub fn extract_all(essay: &EssayRecord, resources: &FeatureResources) -> Result<FeatureVector> {
    let a = Analysis::new(&essay.text, &resources.abbreviations);
    if a.words() == 0 {
        return Err(FeatureError::EmptyEssay(essay.id.clone()));
    }
    Ok(FeatureVector {
        gram_rate: a.gram_rate(essay.corrected_text.as_deref(), resources.equality, &essay.id)?,
        difficult_words: a.difficult_words(&resources.easy_words),
        unique_words: a.unique_words(),
        lexical_density_types: a.lexical_density_types(&resources.function_words, &essay.id)?,
        unique_noun_chunks: a.unique_noun_chunks(&resources.pos_lexicon),
        unique_qualifiers: a.unique_qualifiers(&resources.qualifiers),
        flesch_kincaid: a.flesch_kincaid(&essay.id)?,
        paragraph_similarity: a.paragraph_similarity(&resources.embeddings),
        avg_sentence_length: a.avg_sentence_length(),
    })
}

/// Extracts every essay in parallel; results stay in corpus order.
pub fn extract_corpus(corpus: &Corpus, resources: &FeatureResources) -> Vec<Result<(String, FeatureVector)>> {
    corpus
        .records
        .par_iter()
        .map(|essay| extract_all(essay, resources).map(|v| (essay.id.clone(), v)))
        .collect()
}

pub fn csv_header() -> String {
    let mut h = String::from("id");
    for c in FEATURE_COLUMNS {
        h.push(',');
        h.push_str(c);
    }
    h
}

/// Writes the feature table; absent values are empty fields.
pub fn write_features_csv<W: io::Write>(rows: &[(String, FeatureVector)], out: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let header: Vec<String> = csv_header().split(',').map(str::to_string).collect();
    w.write_record(&header)?;
    for (id, v) in rows {
        let mut record = vec![id.clone()];
        record.extend(v.values().iter().map(|x| x.map_or_else(String::new, |x| x.to_string())));
        w.write_record(&record)?;
    }
    w.flush()
}

pub fn read_features_csv(content: &str) -> Result<Vec<(String, FeatureVector)>> {
    let mut r = csv::Reader::from_reader(content.as_bytes());
    let headers = r.headers().map_err(|e| FeatureError::Csv(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>().join(",") != csv_header() {
        return Err(FeatureError::Csv("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| FeatureError::Csv(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<Option<f64>> {
            let s = rec.get(i).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| FeatureError::Csv(format!("line {line}: bad number {s:?}")))
        };
        let required = |i: usize| -> Result<f64> {
            field(i)?.ok_or_else(|| FeatureError::Csv(format!("line {line}: missing {}", FEATURE_COLUMNS[i - 1])))
        };
        rows.push((
            rec.get(0).unwrap_or("").to_string(),
            FeatureVector {
                gram_rate: field(1)?,
                difficult_words: required(2)? as u64,
                unique_words: required(3)? as u64,
                lexical_density_types: required(4)?,
                unique_noun_chunks: required(5)? as u64,
                unique_qualifiers: required(6)? as u64,
                flesch_kincaid: required(7)?,
                paragraph_similarity: field(8)?,
                avg_sentence_length: field(9)?,
            },
        ));
    }
    Ok(rows)
}
