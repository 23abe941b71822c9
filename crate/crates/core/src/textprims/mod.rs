//! Deterministic text-analysis primitives shared by the feature extractors.

mod edits;
mod embeddings;
mod pos;
mod segment;
mod syllables;
mod tokenize;

pub use edits::{align_edits, extract_edits, Edit, EditKind, EditScript, TokenEquality};
pub use embeddings::{cosine, load_embeddings, parse_embeddings, EmbeddingError, EmbeddingTable};
pub use pos::{pos_tag, PosLexicon, PosTag};
pub use segment::{split_paragraphs, split_sentences, AbbreviationList};
pub use syllables::{count_syllables, InvalidWord};
pub use tokenize::{tokenize, Token, TokenKind};
