//! Descriptor-driven LLM grading of nine CEFR proficiency aspects.
//!
//! For each essay and aspect the grader draws a reproducible permutation of
//! the aspect's level descriptors, renders the prompt with the descriptors as
//! anonymous lettered options, asks a backend to pick one option, and maps the
//! chosen letter back through the permutation to a CEFR band.

mod aspects;
mod backend;
mod cache;
mod descriptors;
mod permutation;
mod prompt;
mod response;
mod runner;

pub use aspects::{AspectId, Competence};
pub use backend::{BackendError, DeterministicStub, LiveHttp, LlmBackend, StubPolicy};
pub use cache::{CacheEntry, ResponseCache};
pub use descriptors::DescriptorSet;
pub use permutation::{map_option_to_level, option_letter, shuffle_descriptors, DescriptorPermutation};
pub use prompt::{build_prompt, PromptCondition};
pub use response::parse_response;
pub use runner::{
    grade_corpus, grade_essay, reconstruct_mean, AnalyticScoreTable, AspectGrade, EssayScores, GradeFailure,
    GradeOptions, GradeRun, GradeStats, RateLimiter,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraderError {
    #[error("essay {id:?} has no {what} holistic score")]
    MissingScore { id: String, what: &'static str },
    #[error("unparseable response {0:?}")]
    Unparseable(String),
    #[error("option {letter} is not among the {n_options} options")]
    OptionOutOfRange { letter: char, n_options: usize },
    #[error("option index {index} outside a permutation of {len} levels")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no usable response after {attempts} attempts; last response {last:?}")]
    ExhaustedRetries { attempts: u32, last: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no aspect scores to average")]
    EmptyScores,
    #[error("descriptor file: {0}")]
    Descriptors(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error("score file line {line}: {message}")]
    ScoreFile { line: usize, message: String },
}
