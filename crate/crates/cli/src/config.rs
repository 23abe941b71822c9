//! Run configuration: TOML file, command-line overrides, defaults.

use std::fs;
use std::path::{Path, PathBuf};

use cefrscore::grader::{PromptCondition, StubPolicy};
use cefrscore::resources;
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    /// `jsonl` or `csv`; inferred from the corpus extension when unset.
    pub corpus_format: Option<String>,
    pub predictions: Option<PathBuf>,
    /// Reject predictions whose id is not in the corpus.
    pub strict_predictions: bool,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub seed: u64,
    /// Prompt conditions to grade and report: `gt`, `predicted`, `none`.
    pub conditions: Vec<String>,
    pub backend: BackendConfig,
    pub grading: GradingConfig,
    pub resources: ResourceConfig,
    pub report: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    /// `live` or `stub:<policy>` with policy `echo-holistic`,
    /// `feature-linked` or `fixed:<band>`.
    pub kind: String,
    pub model: String,
    pub endpoint: String,
    pub timeout_secs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradingConfig {
    pub retry_limit: u32,
    pub max_in_flight: usize,
    pub requests_per_second: Option<f64>,
    pub freeze_permutation: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceConfig {
    pub embeddings: Option<PathBuf>,
    pub easy_words: Option<PathBuf>,
    pub qualifiers: Option<PathBuf>,
    pub function_words: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub descriptors: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Minimum max−min aspect spread listed by the discrepancy report.
    pub gap: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            corpus_format: None,
            predictions: None,
            strict_predictions: false,
            output_dir: PathBuf::from("out"),
            cache_dir: PathBuf::from(".cefrscore-cache"),
            seed: 42,
            conditions: vec!["gt".into()],
            backend: BackendConfig::default(),
            grading: GradingConfig::default(),
            resources: ResourceConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: "stub:echo-holistic".into(),
            model: "gpt-4-1106-preview".into(),
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            timeout_secs: 120,
        }
    }
}

impl Default for GradingConfig {
    fn default() -> Self {
        GradingConfig {
            retry_limit: 3,
            max_in_flight: 4,
            requests_per_second: None,
            freeze_permutation: false,
        }
    }
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { gap: 3 }
    }
}

/// Which backend answers grading prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Live,
    Stub(StubPolicy),
}

/// Command-line overrides; each takes precedence over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// jsonl or csv
    #[arg(long, global = true)]
    pub corpus_format: Option<String>,
    /// JSONL sidecar of predicted holistic scores
    #[arg(long, global = true)]
    pub predictions: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Prompt condition (gt, predicted, none); repeatable
    #[arg(long = "condition", global = true)]
    pub conditions: Vec<String>,
    /// live or stub:<echo-holistic|feature-linked|fixed:BAND>
    #[arg(long, global = true)]
    pub backend: Option<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    #[arg(long, global = true)]
    pub retry_limit: Option<u32>,
    #[arg(long, global = true)]
    pub max_in_flight: Option<usize>,
    /// Maximum backend requests per second
    #[arg(long, global = true)]
    pub rate_limit: Option<f64>,
    /// Show every essay the same descriptor order per aspect
    #[arg(long, global = true)]
    pub freeze_permutation: bool,
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    pub qualifiers: Option<PathBuf>,
    #[arg(long, global = true)]
    pub descriptors: Option<PathBuf>,
    /// Minimum aspect spread for the discrepancy listing
    #[arg(long, global = true)]
    pub gap: Option<u8>,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    /// Parses a config file; relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let content = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&content).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.corpus, &mut config.predictions] {
            resolve(base, p);
        }
        let r = &mut config.resources;
        for p in [
            &mut r.embeddings,
            &mut r.easy_words,
            &mut r.qualifiers,
            &mut r.function_words,
            &mut r.pos_lexicon,
            &mut r.abbreviations,
            &mut r.descriptors,
        ] {
            resolve(base, p);
        }
        for dir in [&mut config.output_dir, &mut config.cache_dir] {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(config)
    }

    /// Defaults, then the config file, then command-line overrides.
    pub fn from_overrides(o: &Overrides) -> Result<RunConfig, CliError> {
        let mut c = match &o.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(c.corpus, o.corpus.clone().map(Some));
        set!(c.corpus_format, o.corpus_format.clone().map(Some));
        set!(c.predictions, o.predictions.clone().map(Some));
        set!(c.output_dir, o.output_dir);
        set!(c.cache_dir, o.cache_dir);
        set!(c.seed, o.seed);
        if !o.conditions.is_empty() {
            c.conditions = o.conditions.clone();
        }
        set!(c.backend.kind, o.backend);
        set!(c.backend.model, o.model);
        set!(c.backend.endpoint, o.endpoint);
        set!(c.grading.retry_limit, o.retry_limit);
        set!(c.grading.max_in_flight, o.max_in_flight);
        set!(c.grading.requests_per_second, o.rate_limit.map(Some));
        if o.freeze_permutation {
            c.grading.freeze_permutation = true;
        }
        set!(c.resources.embeddings, o.embeddings.clone().map(Some));
        set!(c.resources.qualifiers, o.qualifiers.clone().map(Some));
        set!(c.resources.descriptors, o.descriptors.clone().map(Some));
        set!(c.report.gap, o.gap);
        c.validate()?;
        Ok(c)
    }

    /// Checks values that do not depend on the subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        self.backend_kind()?;
        self.prompt_conditions()?;
        if let Some(f) = &self.corpus_format {
            if f != "jsonl" && f != "csv" {
                return Err(CliError::Usage(format!(
                    "corpus_format must be jsonl or csv, not {f:?}"
                )));
            }
        }
        if self.grading.max_in_flight == 0 {
            return Err(CliError::Usage("max_in_flight must be at least 1".into()));
        }
        if let Some(r) = self.grading.requests_per_second {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::Usage("rate limit must be a positive number".into()));
            }
        }
        let r = &self.resources;
        for path in [
            &self.predictions,
            &r.embeddings,
            &r.easy_words,
            &r.qualifiers,
            &r.function_words,
            &r.pos_lexicon,
            &r.abbreviations,
            &r.descriptors,
        ]
        .into_iter()
        .flatten()
        {
            require_file(path)?;
        }
        Ok(())
    }

    pub fn backend_kind(&self) -> Result<BackendKind, CliError> {
        let kind = self.backend.kind.as_str();
        if kind == "live" {
            return Ok(BackendKind::Live);
        }
        let policy = kind
            .strip_prefix("stub:")
            .ok_or_else(|| CliError::Usage(format!("backend must be `live` or `stub:<policy>`, not {kind:?}")))?;
        policy.parse().map(BackendKind::Stub).map_err(CliError::Usage)
    }

    pub fn prompt_conditions(&self) -> Result<Vec<PromptCondition>, CliError> {
        if self.conditions.is_empty() {
            return Err(CliError::Usage("no prompt condition configured".into()));
        }
        let mut out: Vec<PromptCondition> = Vec::new();
        for c in &self.conditions {
            let c: PromptCondition = c.parse().map_err(CliError::Usage)?;
            if !out.contains(&c) {
                out.push(c);
            }
        }
        Ok(out)
    }

    pub fn corpus_path(&self) -> Result<&Path, CliError> {
        let path = self
            .corpus
            .as_deref()
            .ok_or_else(|| CliError::Usage("no corpus configured (use --corpus or `corpus` in the config)".into()))?;
        require_file(path)?;
        Ok(path)
    }

    /// SHA-256 of the configuration with output and cache locations removed,
    /// so relocated runs of the same experiment share a digest.
    pub fn digest(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
            map.remove("cache_dir");
        }
        resources::digest(value.to_string().as_bytes())
    }
}

pub fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("file not found: {}", path.display())))
    }
}
