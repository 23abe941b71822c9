//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use cefrscore::corpus::{parse_corpus, CorpusFormat};
use cefrscore::textprims::load_embeddings;
use cefrscore::{Corpus, FeatureResources};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/synthetic")
        .join(name)
}

/// The bundled 30-essay synthetic corpus.
pub fn synthetic_corpus() -> Corpus {
    parse_corpus(&data("corpus.jsonl"), CorpusFormat::Jsonl).expect("bundled corpus parses")
}

/// Bundled lexicons with the synthetic embeddings.
pub fn synthetic_resources() -> FeatureResources {
    FeatureResources::bundled(load_embeddings(&data("embeddings.txt")).expect("bundled embeddings load"))
}
