use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::{CefrBand, Corpus, EssayRecord};

use super::{
    build_prompt, map_option_to_level, parse_response, shuffle_descriptors, AspectId, DescriptorSet, GraderError,
    LlmBackend, PromptCondition, ResponseCache,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GradeOptions {
    pub seed: u64,
    /// Use one permutation per aspect for every essay.
    pub freeze_permutation: bool,
    /// Extra attempts after an unusable response.
    pub retry_limit: u32,
    /// Maximum concurrent backend requests.
    pub max_in_flight: usize,
    /// Token-bucket cap on backend requests per second.
    pub requests_per_second: Option<f64>,
}

impl Default for GradeOptions {
    fn default() -> Self {
        GradeOptions {
            seed: 42,
            freeze_permutation: false,
            retry_limit: 3,
            max_in_flight: 4,
            requests_per_second: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectGrade {
    pub aspect: AspectId,
    pub level: CefrBand,
    pub raw: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GradeStats {
    pub backend_calls: usize,
    pub cache_hits: usize,
    pub retries: usize,
}

#[derive(Default)]
struct Counters {
    backend_calls: AtomicUsize,
    cache_hits: AtomicUsize,
    retries: AtomicUsize,
}

impl Counters {
    fn snapshot(&self) -> GradeStats {
        GradeStats {
            backend_calls: self.backend_calls.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
            retries: self.retries.load(Ordering::SeqCst),
        }
    }
}

/// Token bucket holding up to `capacity` requests, refilled at `rate` per second.
pub struct RateLimiter {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(rate: f64) -> RateLimiter {
        assert!(rate > 0.0, "rate must be positive");
        let capacity = rate.max(1.0);
        RateLimiter {
            rate,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("limiter lock");
                let now = Instant::now();
                state.0 = (state.0 + now.duration_since(state.1).as_secs_f64() * self.rate).min(self.capacity);
                state.1 = now;
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                (1.0 - state.0) / self.rate
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

struct Grader<'a> {
    backend: &'a dyn LlmBackend,
    cache: Option<&'a ResponseCache>,
    descriptors: &'a DescriptorSet,
    options: &'a GradeOptions,
    limiter: Option<RateLimiter>,
    counters: Counters,
}

impl<'a> Grader<'a> {
    fn new(
        backend: &'a dyn LlmBackend,
        cache: Option<&'a ResponseCache>,
        descriptors: &'a DescriptorSet,
        options: &'a GradeOptions,
    ) -> Grader<'a> {
        Grader {
            backend,
            cache,
            descriptors,
            options,
            limiter: options.requests_per_second.map(RateLimiter::new),
            counters: Counters::default(),
        }
    }

    fn grade(
        &self,
        essay: &EssayRecord,
        aspect: AspectId,
        condition: PromptCondition,
    ) -> Result<AspectGrade, GraderError> {
        let key = if self.options.freeze_permutation {
            ""
        } else {
            essay.id.as_str()
        };
        let permutation = shuffle_descriptors(key, aspect, self.options.seed);
        let prompt = build_prompt(essay, aspect, condition, &permutation, self.descriptors)?;
        let model = self.backend.model();
        let interpret =
            |raw: &str| parse_response(raw, permutation.len()).and_then(|i| map_option_to_level(i, &permutation));

        if let Some(entry) = self.cache.and_then(|c| c.get(model, &prompt)) {
            match interpret(&entry.raw_response) {
                Ok(level) if level == entry.parsed_level => {
                    self.counters.cache_hits.fetch_add(1, Ordering::SeqCst);
                    return Ok(AspectGrade {
                        aspect,
                        level,
                        raw: entry.raw_response,
                    });
                }
                _ => log::warn!("stale cache entry for {} / {aspect}; re-querying", essay.id),
            }
        }

        let attempts = self.options.retry_limit + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                self.counters.retries.fetch_add(1, Ordering::SeqCst);
            }
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            self.counters.backend_calls.fetch_add(1, Ordering::SeqCst);
            let raw = self.backend.complete(&prompt)?;
            match interpret(&raw) {
                Ok(level) => {
                    if let Some(cache) = self.cache {
                        cache.put(model, &prompt, &raw, level)?;
                    }
                    return Ok(AspectGrade { aspect, level, raw });
                }
                Err(GraderError::Unparseable(_) | GraderError::OptionOutOfRange { .. }) => {
                    log::debug!("unusable response for {} / {aspect}: {raw:?}", essay.id);
                    last = raw;
                }
                Err(e) => return Err(e),
            }
        }
        Err(GraderError::ExhaustedRetries { attempts, last })
    }
}

/// Grades the given aspects of one essay, in order.
pub fn grade_essay(
    essay: &EssayRecord,
    aspects: &[AspectId],
    condition: PromptCondition,
    backend: &dyn LlmBackend,
    cache: Option<&ResponseCache>,
    descriptors: &DescriptorSet,
    options: &GradeOptions,
) -> Result<Vec<AspectGrade>, GraderError> {
    let grader = Grader::new(backend, cache, descriptors, options);
    aspects.iter().map(|&a| grader.grade(essay, a, condition)).collect()
}

/// Grades of one essay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EssayScores {
    pub id: String,
    pub grades: Vec<AspectGrade>,
}

impl EssayScores {
    pub fn level(&self, aspect: AspectId) -> Option<CefrBand> {
        self.grades.iter().find(|g| g.aspect == aspect).map(|g| g.level)
    }

    pub fn mean(&self) -> Result<f64, GraderError> {
        reconstruct_mean(&self.grades.iter().map(|g| g.level).collect::<Vec<_>>())
    }

    pub fn spread(&self) -> Option<u8> {
        let values = self.grades.iter().map(|g| g.level.numeric());
        Some(values.clone().max()? - values.min()?)
    }
}

/// Per-essay aspect bands produced under one prompt condition.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticScoreTable {
    pub condition: PromptCondition,
    pub model: String,
    pub rows: Vec<EssayScores>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreLine {
    id: String,
    condition: String,
    aspect: String,
    level: String,
    numeric: u8,
    raw: String,
}

impl AnalyticScoreTable {
    pub fn get(&self, id: &str) -> Option<&EssayScores> {
        self.rows.iter().find(|r| r.id == id)
    }

    /// One line per (essay, aspect), in table order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            for g in &row.grades {
                let line = ScoreLine {
                    id: row.id.clone(),
                    condition: self.condition.as_str().to_string(),
                    aspect: g.aspect.key().to_string(),
                    level: g.level.as_str().to_string(),
                    numeric: g.level.numeric(),
                    raw: g.raw.clone(),
                };
                out.push_str(&serde_json::to_string(&line).expect("serializable"));
                out.push('\n');
            }
        }
        out
    }

    /// Parses score JSONL. Lines of one essay are grouped in order of first
    /// appearance.
    pub fn from_jsonl(content: &str, model: &str) -> Result<AnalyticScoreTable, GraderError> {
        let mut condition = None;
        let mut rows: Vec<EssayScores> = Vec::new();
        for (i, text) in content.lines().enumerate() {
            let line_no = i + 1;
            if text.trim().is_empty() {
                continue;
            }
            let err = |message: String| GraderError::ScoreFile { line: line_no, message };
            let line: ScoreLine = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
            let c: PromptCondition = line.condition.parse().map_err(err)?;
            if *condition.get_or_insert(c) != c {
                return Err(err("mixed prompt conditions".into()));
            }
            let aspect: AspectId = line.aspect.parse().map_err(err)?;
            let level: CefrBand = line.level.parse().map_err(err)?;
            if level.numeric() != line.numeric {
                return Err(err(format!("numeric {} does not match level {level}", line.numeric)));
            }
            if !aspect.levels().contains(&level) {
                return Err(err(format!("{aspect} has no {level} level")));
            }
            let pos = match rows.iter().position(|r| r.id == line.id) {
                Some(p) => p,
                None => {
                    rows.push(EssayScores {
                        id: line.id.clone(),
                        grades: Vec::new(),
                    });
                    rows.len() - 1
                }
            };
            if rows[pos].level(aspect).is_some() {
                return Err(err(format!("duplicate {aspect} score for {}", line.id)));
            }
            rows[pos].grades.push(AspectGrade {
                aspect,
                level,
                raw: line.raw,
            });
        }
        Ok(AnalyticScoreTable {
            condition: condition.unwrap_or(PromptCondition::NoScore),
            model: model.to_string(),
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GradeFailure {
    pub id: String,
    pub aspect: AspectId,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct GradeRun {
    /// Completed grades.
    pub table: AnalyticScoreTable,
    /// (essay, aspect) pairs that were attempted without success.
    pub failures: Vec<GradeFailure>,
    /// First error other than exhausted retries; remaining pairs were skipped.
    pub aborted: Option<String>,
    pub stats: GradeStats,
}

impl GradeRun {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty() && self.aborted.is_none()
    }
}

/// Grades every essay on every aspect with bounded concurrency. Output order
/// is (essay, aspect) regardless of completion order. Exhausted retries are
/// recorded as failures; any other error stops further requests, and the run
/// returns what was completed.
pub fn grade_corpus(
    corpus: &Corpus,
    aspects: &[AspectId],
    condition: PromptCondition,
    backend: &dyn LlmBackend,
    cache: Option<&ResponseCache>,
    descriptors: &DescriptorSet,
    options: &GradeOptions,
) -> Result<GradeRun, GraderError> {
    for essay in &corpus.records {
        condition.score(essay)?;
    }
    let grader = Grader::new(backend, cache, descriptors, options);
    let jobs: Vec<(usize, AspectId)> = (0..corpus.records.len())
        .flat_map(|e| aspects.iter().map(move |&a| (e, a)))
        .collect();
    let results: Vec<Mutex<Option<Result<AspectGrade, GraderError>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let workers = options.max_in_flight.max(1).min(jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let j = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(e, aspect)) = jobs.get(j) else { break };
                let result = grader.grade(&corpus.records[e], aspect, condition);
                if matches!(result, Err(ref err) if !matches!(err, GraderError::ExhaustedRetries { .. })) {
                    abort.store(true, Ordering::SeqCst);
                }
                *results[j].lock().expect("result lock") = Some(result);
            });
        }
    });

    let mut rows: Vec<EssayScores> = corpus
        .records
        .iter()
        .map(|r| EssayScores {
            id: r.id.clone(),
            grades: Vec::new(),
        })
        .collect();
    let mut failures = Vec::new();
    let mut aborted = None;
    for (&(e, aspect), slot) in jobs.iter().zip(results) {
        match slot.into_inner().expect("result lock") {
            None => {}
            Some(Ok(grade)) => rows[e].grades.push(grade),
            Some(Err(err)) => {
                if !matches!(err, GraderError::ExhaustedRetries { .. }) && aborted.is_none() {
                    aborted = Some(err.to_string());
                }
                failures.push(GradeFailure {
                    id: corpus.records[e].id.clone(),
                    aspect,
                    error: err.to_string(),
                });
            }
        }
    }
    Ok(GradeRun {
        table: AnalyticScoreTable {
            condition,
            model: backend.model().to_string(),
            rows,
        },
        failures,
        aborted,
        stats: grader.counters.snapshot(),
    })
}

/// Mean numeric image (A1 = 1 … C2 = 6) of the scored aspects.
pub fn reconstruct_mean(scores: &[CefrBand]) -> Result<f64, GraderError> {
    if scores.is_empty() {
        return Err(GraderError::EmptyScores);
    }
    Ok(scores.iter().map(|b| b.numeric() as f64).sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::NumericScore;
    use crate::grader::{BackendError, DeterministicStub, StubPolicy};

    fn corpus(n: usize) -> Corpus {
        let records = (0..n)
            .map(|i| {
                let mut e = EssayRecord::new(format!("e{i}"), format!("Essay number {i}. It is short."));
                e.holistic_gt = NumericScore::new(1.0 + (i % 6) as f64);
                e
            })
            .collect();
        Corpus {
            name: "t".into(),
            records,
        }
    }

    struct Scripted {
        replies: Vec<&'static str>,
        calls: AtomicUsize,
    }

    impl LlmBackend for Scripted {
        fn model(&self) -> &str {
            "scripted"
        }
        fn complete(&self, _: &str) -> Result<String, BackendError> {
            let i = self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(self.replies[i.min(self.replies.len() - 1)].to_string())
        }
    }

    #[test]
    fn mean_examples() {
        assert_eq!(reconstruct_mean(&[CefrBand::B1; 9]).unwrap(), 3.0);
        let mixed: Vec<_> = [3, 4, 2, 3, 4, 2, 2, 1, 3]
            .iter()
            .map(|&n| CefrBand::from_numeric(n).unwrap())
            .collect();
        assert!((reconstruct_mean(&mixed).unwrap() - 24.0 / 9.0).abs() < 1e-12);
        assert_eq!(reconstruct_mean(&[CefrBand::C2]).unwrap(), 6.0);
        assert!(matches!(reconstruct_mean(&[]), Err(GraderError::EmptyScores)));
    }

    #[test]
    fn echo_holistic_grade_essay() {
        let stub = DeterministicStub::new(StubPolicy::EchoHolistic);
        let mut e = EssayRecord::new("a", "Some text here.");
        e.holistic_gt = NumericScore::new(3.0);
        let grades = grade_essay(
            &e,
            &AspectId::ALL,
            PromptCondition::GroundTruthScore,
            &stub,
            None,
            DescriptorSet::bundled(),
            &GradeOptions::default(),
        )
        .unwrap();
        assert!(grades.iter().all(|g| g.level == CefrBand::B1));
        e.holistic_gt = NumericScore::new(1.0);
        let grades = grade_essay(
            &e,
            &AspectId::ALL,
            PromptCondition::GroundTruthScore,
            &stub,
            None,
            DescriptorSet::bundled(),
            &GradeOptions::default(),
        )
        .unwrap();
        for g in grades {
            assert_eq!(g.level, g.aspect.clamp(CefrBand::A1));
        }
    }

    #[test]
    fn retries_then_exhausts() {
        let e = EssayRecord::new("a", "Text.");
        let opts = GradeOptions::default();
        let flaky = Scripted {
            replies: vec!["I think A or B", "option F", "option B"],
            calls: AtomicUsize::new(0),
        };
        let g = grade_essay(
            &e,
            &[AspectId::Flexibility],
            PromptCondition::NoScore,
            &flaky,
            None,
            DescriptorSet::bundled(),
            &opts,
        )
        .unwrap();
        assert_eq!(g[0].raw, "option B");
        assert_eq!(flaky.calls.load(Ordering::SeqCst), 3);

        let stubborn = Scripted {
            replies: vec!["I think A or B"],
            calls: AtomicUsize::new(0),
        };
        let r = grade_essay(
            &e,
            &[AspectId::Flexibility],
            PromptCondition::NoScore,
            &stubborn,
            None,
            DescriptorSet::bundled(),
            &opts,
        );
        assert!(matches!(r, Err(GraderError::ExhaustedRetries { attempts: 4, .. })));
        assert_eq!(stubborn.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn second_run_is_all_cache_hits() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let c = corpus(7);
        let opts = GradeOptions {
            max_in_flight: 3,
            ..GradeOptions::default()
        };
        let stub = DeterministicStub::new(StubPolicy::FeatureLinked);
        let first = grade_corpus(
            &c,
            &AspectId::ALL,
            PromptCondition::GroundTruthScore,
            &stub,
            Some(&cache),
            DescriptorSet::bundled(),
            &opts,
        )
        .unwrap();
        assert_eq!(first.stats.backend_calls, 63);
        let stub2 = DeterministicStub::new(StubPolicy::FeatureLinked);
        let second = grade_corpus(
            &c,
            &AspectId::ALL,
            PromptCondition::GroundTruthScore,
            &stub2,
            Some(&cache),
            DescriptorSet::bundled(),
            &opts,
        )
        .unwrap();
        assert_eq!(stub2.calls(), 0);
        assert_eq!(second.stats.cache_hits, 63);
        assert_eq!(first.table, second.table);
    }

    #[test]
    fn corpus_order_is_deterministic() {
        let c = corpus(12);
        let stub = DeterministicStub::new(StubPolicy::FeatureLinked);
        let serial = grade_corpus(
            &c,
            &AspectId::ALL,
            PromptCondition::NoScore,
            &stub,
            None,
            DescriptorSet::bundled(),
            &GradeOptions {
                max_in_flight: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let parallel = grade_corpus(
            &c,
            &AspectId::ALL,
            PromptCondition::NoScore,
            &stub,
            None,
            DescriptorSet::bundled(),
            &GradeOptions {
                max_in_flight: 8,
                requests_per_second: Some(10_000.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(serial.table.to_jsonl(), parallel.table.to_jsonl());
        for (row, e) in serial.table.rows.iter().zip(&c.records) {
            assert_eq!(row.id, e.id);
            assert_eq!(
                row.grades.iter().map(|g| g.aspect).collect::<Vec<_>>(),
                AspectId::ALL.to_vec()
            );
        }
    }

    #[test]
    fn missing_score_fails_before_any_call() {
        let mut c = corpus(3);
        c.records[2].holistic_pred = None;
        let stub = DeterministicStub::new(StubPolicy::EchoHolistic);
        let r = grade_corpus(
            &c,
            &AspectId::ALL,
            PromptCondition::PredictedScore,
            &stub,
            None,
            DescriptorSet::bundled(),
            &GradeOptions::default(),
        );
        assert!(matches!(r, Err(GraderError::MissingScore { .. })));
        assert_eq!(stub.calls(), 0);
    }

    #[test]
    fn exhausted_pairs_become_failures() {
        let c = corpus(2);
        let bad = Scripted {
            replies: vec!["no idea"],
            calls: AtomicUsize::new(0),
        };
        let run = grade_corpus(
            &c,
            &[AspectId::Flexibility],
            PromptCondition::NoScore,
            &bad,
            None,
            DescriptorSet::bundled(),
            &GradeOptions::default(),
        )
        .unwrap();
        assert_eq!(run.failures.len(), 2);
        assert!(run.table.rows.iter().all(|r| r.grades.is_empty()));
        assert_eq!(run.stats.retries, 6);
    }

    struct Down;

    impl LlmBackend for Down {
        fn model(&self) -> &str {
            "down"
        }
        fn complete(&self, _: &str) -> Result<String, BackendError> {
            Err(BackendError::Transport("connection refused".into()))
        }
    }

    #[test]
    fn backend_error_aborts_with_partial_result() {
        let c = corpus(20);
        let run = grade_corpus(
            &c,
            &AspectId::ALL,
            PromptCondition::NoScore,
            &Down,
            None,
            DescriptorSet::bundled(),
            &GradeOptions {
                max_in_flight: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(run.aborted.as_deref().unwrap().contains("connection refused"));
        assert!(!run.is_complete());
        assert!(run.failures.len() <= 2);
        assert!(run.stats.backend_calls <= 2);
    }

    #[test]
    fn jsonl_round_trip() {
        let c = corpus(4);
        let stub = DeterministicStub::new(StubPolicy::EchoHolistic);
        let run = grade_corpus(
            &c,
            &AspectId::ALL,
            PromptCondition::GroundTruthScore,
            &stub,
            None,
            DescriptorSet::bundled(),
            &GradeOptions::default(),
        )
        .unwrap();
        let text = run.table.to_jsonl();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(
            first,
            serde_json::json!({"id": "e0", "condition": "gt", "aspect": "general_linguistic_range", "level": "A1", "numeric": 1, "raw": first["raw"]})
        );
        assert_eq!(
            AnalyticScoreTable::from_jsonl(&text, &run.table.model).unwrap(),
            run.table
        );
        let bad = text.replacen("\"numeric\":1", "\"numeric\":2", 1);
        assert!(AnalyticScoreTable::from_jsonl(&bad, "stub").is_err());
    }

    #[test]
    fn frozen_permutation_shares_prompts_layout() {
        let stub = DeterministicStub::new(StubPolicy::FixedLevel(CefrBand::B2));
        let opts = GradeOptions {
            freeze_permutation: true,
            ..Default::default()
        };
        let c = corpus(5);
        let run = grade_corpus(
            &c,
            &[AspectId::CoherenceCohesion],
            PromptCondition::NoScore,
            &stub,
            None,
            DescriptorSet::bundled(),
            &opts,
        )
        .unwrap();
        let raws: std::collections::HashSet<_> = run.table.rows.iter().map(|r| r.grades[0].raw.clone()).collect();
        assert_eq!(raws.len(), 1);
    }
}
