use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::CefrBand;
use crate::textprims::{split_sentences, tokenize, TokenKind};

use super::{option_letter, AspectId, DescriptorSet};

pub const API_KEY_VAR: &str = "AES_API_KEY";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("environment variable {0} is not set")]
    MissingCredential(&'static str),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Malformed(String),
}

/// A completion service that answers a single user prompt.
pub trait LlmBackend: Send + Sync {
    fn model(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, BackendError>;
}

/// Chat-completion style HTTP endpoint, queried at temperature 0 with the
/// prompt as the only (user) message.
pub struct LiveHttp {
    endpoint: String,
    model: String,
    api_key: String,
    agent: ureq::Agent,
}

impl LiveHttp {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: impl Into<String>,
        timeout: Duration,
    ) -> LiveHttp {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        LiveHttp {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: api_key.into(),
            agent: ureq::Agent::new_with_config(config),
        }
    }

    /// Reads the credential from `AES_API_KEY`.
    pub fn from_env(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        timeout: Duration,
    ) -> Result<LiveHttp, BackendError> {
        let key = std::env::var(API_KEY_VAR).map_err(|_| BackendError::MissingCredential(API_KEY_VAR))?;
        Ok(LiveHttp::new(endpoint, model, key, timeout))
    }

    pub fn request_body(&self, prompt: &str) -> serde_json::Value {
        json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        })
    }
}

impl LlmBackend for LiveHttp {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(self.request_body(prompt))
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Http { status, body });
        }
        let value: serde_json::Value =
            serde_json::from_str(&body).map_err(|e| BackendError::Malformed(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Malformed("missing choices[0].message.content".into()))
    }
}

/// Offline answer policy of [`DeterministicStub`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubPolicy {
    /// The band of the holistic score shown in the prompt (floored, clamped
    /// to the aspect's levels); falls back to `FeatureLinked` without one.
    EchoHolistic,
    /// Always the given band, clamped to the aspect's levels.
    FixedLevel(CefrBand),
    /// A band derived from surface statistics of the essay, varying by aspect.
    FeatureLinked,
}

impl std::fmt::Display for StubPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StubPolicy::EchoHolistic => f.write_str("echo-holistic"),
            StubPolicy::FixedLevel(b) => write!(f, "fixed:{b}"),
            StubPolicy::FeatureLinked => f.write_str("feature-linked"),
        }
    }
}

impl std::str::FromStr for StubPolicy {
    type Err = String;

    /// `echo-holistic`, `feature-linked` or `fixed:<band>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "echo-holistic" => Ok(StubPolicy::EchoHolistic),
            "feature-linked" => Ok(StubPolicy::FeatureLinked),
            _ => match s.strip_prefix("fixed:") {
                Some(band) => Ok(StubPolicy::FixedLevel(band.parse()?)),
                None => Err(format!(
                    "unknown stub policy {s:?} (expected echo-holistic, feature-linked or fixed:<band>)"
                )),
            },
        }
    }
}

/// Offline backend answering from the prompt text alone. Its model name is
/// `stub:<policy>`, so cached answers of different policies never mix.
pub struct DeterministicStub {
    policy: StubPolicy,
    model: String,
    descriptors: DescriptorSet,
    calls: AtomicUsize,
}

struct ParsedPrompt<'a> {
    essay: &'a str,
    score: Option<f64>,
    aspect: AspectId,
    options: Vec<&'a str>,
}

fn prompt_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?s)^Consider the following essay: (.*?)\n\n(?:It has been given this score on a scale from 1 to 6\.5: ([0-9.]+)\.\n\n)?I want you to assess it only considering the aspect of ([a-z ]+), for which you have \d+ different feedback options, that you will have to accept or reject:\n(.*?)\n\nONLY ONE option",
        )
        .expect("valid regex")
    })
}

fn parse_prompt(prompt: &str) -> Option<ParsedPrompt<'_>> {
    let caps = prompt_pattern().captures(prompt)?;
    let options = caps
        .get(4)?
        .as_str()
        .lines()
        .enumerate()
        .map(|(i, line)| line.strip_prefix(&format!("{}) ", option_letter(i))))
        .collect::<Option<Vec<_>>>()?;
    Some(ParsedPrompt {
        essay: caps.get(1)?.as_str(),
        score: caps.get(2).and_then(|m| m.as_str().parse().ok()),
        aspect: AspectId::from_name(caps.get(3)?.as_str())?,
        options,
    })
}

/// Band in 1..=6 from word variety, word length and sentence length.
fn feature_band(essay: &str, aspect: AspectId) -> u8 {
    let words: Vec<String> = tokenize(essay)
        .into_iter()
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.lower)
        .collect();
    if words.is_empty() {
        return 1;
    }
    let unique = words.iter().collect::<std::collections::HashSet<_>>().len() as f64;
    let mean_len = words.iter().map(|w| w.chars().count()).sum::<usize>() as f64 / words.len() as f64;
    let sentences = split_sentences(essay).len().max(1) as f64;
    let sent_len = words.len() as f64 / sentences;
    let lexical = unique / 25.0 + (mean_len - 3.5) * 1.2;
    let syntactic = sent_len / 6.0;
    let weight = 0.25 + 0.0625 * (aspect as usize) as f64;
    let raw = 0.5 + weight * lexical + (1.0 - weight) * syntactic;
    let digest = Sha256::digest(format!("{}\u{1f}{}", aspect.key(), essay).as_bytes());
    let jitter = (digest[0] % 3) as f64 * 0.25 - 0.25;
    (raw + jitter).round().clamp(1.0, 6.0) as u8
}

impl DeterministicStub {
    pub fn new(policy: StubPolicy) -> DeterministicStub {
        DeterministicStub::with_descriptors(policy, DescriptorSet::bundled().clone())
    }

    pub fn with_descriptors(policy: StubPolicy, descriptors: DescriptorSet) -> DeterministicStub {
        DeterministicStub {
            policy,
            model: format!("stub:{policy}"),
            descriptors,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn policy(&self) -> StubPolicy {
        self.policy
    }

    /// Number of `complete` calls served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn target(&self, parsed: &ParsedPrompt<'_>) -> CefrBand {
        let echo = |score: f64| CefrBand::from_numeric(score.floor().clamp(1.0, 6.0) as u8);
        let band = match (self.policy, parsed.score) {
            (StubPolicy::FixedLevel(b), _) => Some(b),
            (StubPolicy::EchoHolistic, Some(score)) => echo(score),
            _ => CefrBand::from_numeric(feature_band(parsed.essay, parsed.aspect)),
        };
        parsed.aspect.clamp(band.expect("band in 1..=6"))
    }
}

impl LlmBackend for DeterministicStub {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let parsed =
            parse_prompt(prompt).ok_or_else(|| BackendError::Malformed("stub cannot read this prompt".into()))?;
        let target = self.target(&parsed);
        let wanted = self
            .descriptors
            .text(parsed.aspect, target)
            .ok_or_else(|| BackendError::Malformed(format!("no {target} descriptor for {}", parsed.aspect)))?;
        let index = parsed
            .options
            .iter()
            .position(|&o| o == wanted)
            .ok_or_else(|| BackendError::Malformed("target descriptor not among the options".into()))?;
        Ok(format!("option {}", option_letter(index)))
    }
}
