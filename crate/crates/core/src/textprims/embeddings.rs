use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Pretrained word vectors, immutable after loading.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.entries.get(word).map(Vec::as_slice)
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, EmbeddingError> {
    let content = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_embeddings(&content)
}

/// Parses the word2vec/GloVe text format: `word v1 … vd` per line, with an
/// optional `count dim` header. Duplicate words keep their first vector;
/// all-zero vectors are skipped.
pub fn parse_embeddings(content: &str) -> Result<EmbeddingTable, EmbeddingError> {
    let mut dimension: Option<usize> = None;
    let mut entries = HashMap::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if line_no == 1 && fields.len() == 2 {
            if let (Ok(_), Ok(dim)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                if dim == 0 {
                    return Err(EmbeddingError::Format {
                        line: line_no,
                        message: "header declares dimension 0".into(),
                    });
                }
                dimension = Some(dim);
                continue;
            }
        }
        let (word, values) = fields.split_first().expect("non-empty");
        if values.is_empty() {
            return Err(EmbeddingError::Format {
                line: line_no,
                message: format!("no vector for {word:?}"),
            });
        }
        let dim = *dimension.get_or_insert(values.len());
        if values.len() != dim {
            return Err(EmbeddingError::Format {
                line: line_no,
                message: format!("expected {dim} values, found {}", values.len()),
            });
        }
        let vector = values
            .iter()
            .map(|v| {
                v.parse::<f32>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| EmbeddingError::Format {
                        line: line_no,
                        message: format!("non-numeric value {v:?}"),
                    })
            })
            .collect::<Result<Vec<f32>, _>>()?;
        if vector.iter().all(|&x| x == 0.0) {
            log::warn!("line {line_no}: skipping all-zero vector for {word:?}");
            continue;
        }
        if entries.contains_key(*word) {
            log::warn!("line {line_no}: duplicate word {word:?}, keeping the first vector");
            continue;
        }
        entries.insert((*word).to_string(), vector);
    }
    Ok(EmbeddingTable {
        dimension: dimension.unwrap_or(0),
        entries,
    })
}

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}
