//! CEFR analytic essay scoring.
//!
//! Loads essay corpora onto a unified holistic scale, computes nine linguistic
//! features per essay, grades nine CEFR proficiency aspects through
//! descriptor-based LLM prompting, and evaluates the resulting scores with rank
//! correlations, the Friedman test and Nemenyi post-hoc comparisons.

pub mod corpus;
pub mod features;
pub mod grader;
pub mod resources;
pub mod stats;
pub mod textprims;

pub use corpus::{
    cefr_to_numeric, efcamdat_align, numeric_to_cefr, CefrBand, CefrLevel, Corpus, CorpusError, EssayRecord,
    NumericScore, Source,
};
pub use features::{extract_all, FeatureError, FeatureResources, FeatureVector};
pub use grader::{AnalyticScoreTable, AspectId, DescriptorSet, PromptCondition};
pub use stats::{CorrelationReport, FriedmanResult, NemenyiResult, StatsError};
