//! Subcommand implementations. Each reads the configured inputs, writes its
//! artefacts under the output directory and returns a `CliError` on failure.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use cefrscore::corpus::{load_predictions, parse_corpus, CorpusFormat};
use cefrscore::features::{extract_corpus, read_features_csv, word_set, write_features_csv};
use cefrscore::grader::{
    grade_corpus, AnalyticScoreTable, AspectId, BackendError, DescriptorSet, DeterministicStub, GradeOptions, LiveHttp,
    LlmBackend, PromptCondition, ResponseCache,
};
use cefrscore::resources::{self, digest};
use cefrscore::stats::{correlation_matrix, friedman, nemenyi, reconstruction_correlations, TABLE_ASPECT_ORDER};
use cefrscore::textprims::{load_embeddings, AbbreviationList, PosLexicon};
use cefrscore::{Corpus, FeatureResources, FeatureVector};
use log::{info, warn};
use serde_json::json;

use crate::config::{BackendKind, RunConfig};
use crate::error::CliError;
use crate::render;

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const REPORT_DIR: &str = "report";
const MANIFEST: &str = "manifest.json";

/// Below this many essays every correlation is undefined.
const MIN_ESSAYS: usize = 3;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn write(path: &Path, content: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, content).map_err(|e| io_err(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn read(path: &Path, hint: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e} ({hint})", path.display())))
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json serializes") + "\n"
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn report_dir(config: &RunConfig) -> PathBuf {
    config.output_dir.join(REPORT_DIR)
}

fn scores_path(config: &RunConfig, c: PromptCondition) -> PathBuf {
    config.output_dir.join(format!("scores_{}.jsonl", c.as_str()))
}

fn grade_meta_path(config: &RunConfig, c: PromptCondition) -> PathBuf {
    config.output_dir.join(format!("grade_{}.meta.json", c.as_str()))
}

/// Matched count and unmatched ids of a prediction merge.
type MergeSummary = Option<(usize, Vec<String>)>;

/// Corpus with predictions merged when configured.
fn load_corpus(config: &RunConfig) -> Result<(Corpus, MergeSummary), CliError> {
    let path = config.corpus_path()?;
    let format = match config.corpus_format.as_deref() {
        Some("csv") => CorpusFormat::Csv,
        Some(_) => CorpusFormat::Jsonl,
        None => CorpusFormat::from_path(path),
    };
    let corpus = parse_corpus(path, format)?;
    match &config.predictions {
        Some(p) => {
            let merge = load_predictions(corpus, p, config.strict_predictions)?;
            if !merge.unmatched.is_empty() {
                warn!("{} prediction ids not in the corpus", merge.unmatched.len());
            }
            Ok((merge.corpus, Some((merge.matched, merge.unmatched))))
        }
        None => Ok((corpus, None)),
    }
}

fn corpus_digest(config: &RunConfig) -> Result<String, CliError> {
    let path = config.corpus_path()?;
    Ok(digest(&fs::read(path).map_err(|e| io_err(path, e))?))
}

fn read_resource(path: &Option<PathBuf>, bundled: &'static str) -> Result<(String, String), CliError> {
    let content = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        None => bundled.to_string(),
    };
    let d = digest(content.as_bytes());
    Ok((content, d))
}

fn descriptors(config: &RunConfig) -> Result<(DescriptorSet, String), CliError> {
    let (content, d) = read_resource(&config.resources.descriptors, resources::DESCRIPTORS)?;
    let set = match &config.resources.descriptors {
        Some(_) => DescriptorSet::parse(&content).map_err(|e| CliError::Usage(e.to_string()))?,
        None => DescriptorSet::bundled().clone(),
    };
    Ok((set, d))
}

/// Feature resources plus the digest of every input that shaped them.
fn feature_resources(config: &RunConfig) -> Result<(FeatureResources, BTreeMap<&'static str, String>), CliError> {
    let r = &config.resources;
    let emb_path = r
        .embeddings
        .as_ref()
        .ok_or_else(|| CliError::Usage("no embeddings configured (use --embeddings or resources.embeddings)".into()))?;
    let emb_bytes = fs::read(emb_path).map_err(|e| CliError::Usage(format!("{}: {e}", emb_path.display())))?;
    let embeddings = load_embeddings(emb_path).map_err(|e| CliError::Data(format!("{}: {e}", emb_path.display())))?;
    let mut res = FeatureResources::bundled(embeddings);
    let mut digests = BTreeMap::new();
    digests.insert("embeddings", digest(&emb_bytes));

    let (c, d) = read_resource(&r.easy_words, resources::EASY_WORDS)?;
    res.easy_words = word_set(&c);
    digests.insert("easy_words", d);
    let (c, d) = read_resource(&r.qualifiers, resources::QUALIFIERS)?;
    res.qualifiers = word_set(&c);
    digests.insert("qualifiers", d);
    let (c, d) = read_resource(&r.function_words, resources::FUNCTION_WORDS)?;
    res.function_words = word_set(&c);
    digests.insert("function_words", d);
    let (c, d) = read_resource(&r.pos_lexicon, resources::POS_LEXICON)?;
    if r.pos_lexicon.is_some() {
        res.pos_lexicon = PosLexicon::parse(&c).map_err(CliError::Usage)?;
    }
    digests.insert("pos_lexicon", d);
    let (c, d) = read_resource(&r.abbreviations, resources::ABBREVIATIONS)?;
    if r.abbreviations.is_some() {
        res.abbreviations = AbbreviationList::parse(&c);
    }
    digests.insert("abbreviations", d);
    Ok((res, digests))
}

pub fn ingest(config: &RunConfig) -> Result<(), CliError> {
    let (corpus, merge) = load_corpus(config)?;
    let mut sources: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &corpus.records {
        *sources.entry(r.source.as_str()).or_default() += 1;
    }
    let corpus_path = config.output_dir.join("corpus.jsonl");
    write(&corpus_path, corpus.to_jsonl())?;
    let summary = json!({
        "tool_version": TOOL_VERSION,
        "config_digest": config.digest(),
        "corpus": corpus.name,
        "essays": corpus.len(),
        "sources": sources,
        "with_ground_truth": corpus.records.iter().filter(|r| r.holistic_gt.is_some()).count(),
        "with_correction": corpus.records.iter().filter(|r| r.corrected_text.is_some()).count(),
        "predictions_matched": merge.as_ref().map(|m| m.0),
        "predictions_unmatched": merge.map(|m| m.1),
    });
    write(&config.output_dir.join("ingest.json"), pretty(&summary))?;
    println!("ingested {} essays", corpus.len());
    Ok(())
}

pub fn features(config: &RunConfig) -> Result<(), CliError> {
    let (res, mut digests) = feature_resources(config)?;
    let (corpus, _) = load_corpus(config)?;
    let rows = extract_corpus(&corpus, &res)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Vec::new();
    write_features_csv(&rows, &mut csv).map_err(|e| CliError::Data(e.to_string()))?;
    write(&config.output_dir.join("features.csv"), &csv)?;
    digests.insert("corpus", corpus_digest(config)?);
    let meta = json!({
        "tool_version": TOOL_VERSION,
        "config_digest": config.digest(),
        "resource_digests": digests,
        "rows": rows.len(),
        "features_sha256": digest(&csv),
    });
    write(&config.output_dir.join("features.meta.json"), pretty(&meta))?;
    println!("extracted features for {} essays", rows.len());
    Ok(())
}

fn backend(config: &RunConfig) -> Result<(Box<dyn LlmBackend>, &'static str), CliError> {
    match config.backend_kind()? {
        BackendKind::Stub(policy) => Ok((Box::new(DeterministicStub::new(policy)), "stub")),
        BackendKind::Live => {
            let timeout = Duration::from_secs(config.backend.timeout_secs);
            match LiveHttp::from_env(config.backend.endpoint.clone(), config.backend.model.clone(), timeout) {
                Ok(b) => Ok((Box::new(b), "live")),
                Err(e @ BackendError::MissingCredential(_)) => Err(CliError::Usage(e.to_string())),
                Err(e) => Err(CliError::Backend(e.to_string())),
            }
        }
    }
}

pub fn grade(config: &RunConfig) -> Result<(), CliError> {
    let conditions = config.prompt_conditions()?;
    let (descriptors, descriptors_digest) = descriptors(config)?;
    let (corpus, _) = load_corpus(config)?;
    // Every condition is validated before any request is made.
    for &c in &conditions {
        for essay in &corpus.records {
            c.score(essay)?;
        }
    }
    let (backend, backend_label) = backend(config)?;
    let cache = ResponseCache::open(&config.cache_dir)?;
    let options = GradeOptions {
        seed: config.seed,
        freeze_permutation: config.grading.freeze_permutation,
        retry_limit: config.grading.retry_limit,
        max_in_flight: config.grading.max_in_flight,
        requests_per_second: config.grading.requests_per_second,
    };
    let corpus_digest = corpus_digest(config)?;
    let mut incomplete = Vec::new();
    for c in conditions {
        let started = unix_now();
        let run = grade_corpus(
            &corpus,
            &AspectId::ALL,
            c,
            backend.as_ref(),
            Some(&cache),
            &descriptors,
            &options,
        )?;
        let finished = unix_now();
        let graded: usize = run.table.rows.iter().map(|r| r.grades.len()).sum();
        write(&scores_path(config, c), run.table.to_jsonl())?;
        let meta = json!({
            "tool_version": TOOL_VERSION,
            "config_digest": config.digest(),
            "model": run.table.model,
            "backend": backend_label,
            "condition": c.as_str(),
            "seed": config.seed,
            "temperature": 0,
            "freeze_permutation": options.freeze_permutation,
            "retry_limit": options.retry_limit,
            "aspects": AspectId::ALL.iter().map(|a| a.key()).collect::<Vec<_>>(),
            "essays": corpus.len(),
            "score_rows": graded,
            "complete": run.is_complete(),
            "corpus_sha256": corpus_digest,
            "descriptors_sha256": descriptors_digest,
        });
        write(&grade_meta_path(config, c), pretty(&meta))?;
        let stamp = json!({
            "condition": c.as_str(),
            "started_unix": started,
            "finished_unix": finished,
            "backend_calls": run.stats.backend_calls,
            "cache_hits": run.stats.cache_hits,
            "retries": run.stats.retries,
            "requests": corpus.len() * AspectId::ALL.len(),
        });
        write(
            &config.output_dir.join(format!("grade_{}.run.json", c.as_str())),
            pretty(&stamp),
        )?;
        let failures_path = config.output_dir.join(format!("grade_{}.failures.json", c.as_str()));
        if run.is_complete() {
            if failures_path.exists() {
                fs::remove_file(&failures_path).map_err(|e| io_err(&failures_path, e))?;
            }
        } else {
            let f = json!({
                "condition": c.as_str(),
                "aborted": run.aborted,
                "failures": run.failures,
            });
            write(&failures_path, pretty(&f))?;
            incomplete.push(format!(
                "{}: {} failed{}",
                c.as_str(),
                run.failures.len(),
                run.aborted
                    .as_deref()
                    .map(|a| format!(", aborted: {a}"))
                    .unwrap_or_default()
            ));
        }
        println!(
            "{}: {graded} scores ({} backend calls, {} cache hits, {} retries)",
            c.as_str(),
            run.stats.backend_calls,
            run.stats.cache_hits,
            run.stats.retries
        );
    }
    if incomplete.is_empty() {
        Ok(())
    } else {
        Err(CliError::Backend(format!(
            "grading incomplete; see failures manifest ({})",
            incomplete.join("; ")
        )))
    }
}

fn load_scores(config: &RunConfig, c: PromptCondition) -> Result<AnalyticScoreTable, CliError> {
    let path = scores_path(config, c);
    let content = read(&path, "run `grade` first")?;
    let model = fs::read_to_string(grade_meta_path(config, c))
        .ok()
        .and_then(|m| serde_json::from_str::<serde_json::Value>(&m).ok())
        .and_then(|v| v["model"].as_str().map(str::to_string))
        .unwrap_or_else(|| config.backend.model.clone());
    let table = AnalyticScoreTable::from_jsonl(&content, &model)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if table.condition != c && !table.rows.is_empty() {
        return Err(CliError::Data(format!(
            "{}: scores are for condition {}",
            path.display(),
            table.condition.as_str()
        )));
    }
    if table.rows.len() < MIN_ESSAYS {
        warn!(
            "only {} scored essays for condition {}; correlations need at least {MIN_ESSAYS}",
            table.rows.len(),
            c.as_str()
        );
    }
    Ok(table)
}

fn load_features(config: &RunConfig) -> Result<Vec<(String, FeatureVector)>, CliError> {
    let path = config.output_dir.join("features.csv");
    let content = read(&path, "run `features` first")?;
    read_features_csv(&content).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn holistic_maps(corpus: &Corpus) -> (HashMap<String, f64>, HashMap<String, f64>) {
    let gt = corpus
        .records
        .iter()
        .filter_map(|r| r.holistic_gt.map(|s| (r.id.clone(), s.value())))
        .collect();
    let pred = corpus
        .records
        .iter()
        .filter_map(|r| r.holistic_pred.map(|s| (r.id.clone(), s.value())))
        .collect();
    (gt, pred)
}

pub fn correlate(config: &RunConfig) -> Result<(), CliError> {
    let (corpus, _) = load_corpus(config)?;
    let (gt, _) = holistic_maps(&corpus);
    let features = load_features(config)?;
    let dir = report_dir(config);
    for c in config.prompt_conditions()? {
        let table = load_scores(config, c)?;
        let report = correlation_matrix(&table, &features, &gt);
        write(
            &dir.join(format!("correlations_{}.csv", c.as_str())),
            render::correlation_csv(&report),
        )?;
        write(
            &dir.join(format!("correlations_{}.md", c.as_str())),
            render::correlation_markdown(&report),
        )?;
    }
    write_manifest(config)
}

pub fn reconstruct(config: &RunConfig) -> Result<(), CliError> {
    let (corpus, _) = load_corpus(config)?;
    let (gt, pred) = holistic_maps(&corpus);
    let tables = config
        .prompt_conditions()?
        .into_iter()
        .map(|c| load_scores(config, c))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&AnalyticScoreTable> = tables.iter().collect();
    let grid = reconstruction_correlations(&refs, &gt, &pred);
    let dir = report_dir(config);
    write(&dir.join("reconstruction.csv"), render::reconstruction_csv(&grid))?;
    write(&dir.join("reconstruction.md"), render::reconstruction_markdown(&grid))?;
    write_manifest(config)
}

pub fn friedman_cmd(config: &RunConfig) -> Result<(), CliError> {
    let dir = report_dir(config);
    let labels: Vec<&str> = TABLE_ASPECT_ORDER.iter().map(|a| a.short_label()).collect();
    for c in config.prompt_conditions()? {
        let table = load_scores(config, c)?;
        // Only essays graded on every aspect form complete blocks.
        let data: Vec<Vec<f64>> = table
            .rows
            .iter()
            .filter_map(|r| {
                TABLE_ASPECT_ORDER
                    .iter()
                    .map(|&a| r.level(a).map(|b| b.numeric() as f64))
                    .collect::<Option<Vec<f64>>>()
            })
            .collect();
        let result = friedman(&data);
        let json = match &result {
            Ok(r) => render::friedman_json(c, &TABLE_ASPECT_ORDER, data.len(), Ok(r)),
            Err(e) => {
                warn!("friedman ({}): {e}", c.as_str());
                render::friedman_json(c, &TABLE_ASPECT_ORDER, data.len(), Err(e.to_string()))
            }
        };
        write(&dir.join(format!("friedman_{}.json", c.as_str())), json)?;
        let csv_path = dir.join(format!("nemenyi_{}.csv", c.as_str()));
        let svg_path = dir.join(format!("nemenyi_{}.svg", c.as_str()));
        match nemenyi(&data) {
            Ok(n) => {
                write(&csv_path, render::nemenyi_csv(&labels, &n))?;
                let title = format!(
                    "Nemenyi post-hoc p-values (prompt holistic score: {})",
                    render::condition_label(c)
                );
                write(&svg_path, render::nemenyi_svg(&labels, &n, &title))?;
            }
            Err(e) => {
                warn!("nemenyi ({}): {e}", c.as_str());
                for p in [&csv_path, &svg_path] {
                    if p.exists() {
                        fs::remove_file(p).map_err(|e| io_err(p, e))?;
                    }
                }
            }
        }
    }
    write_manifest(config)
}

pub fn inspect_discrepancies(config: &RunConfig) -> Result<(), CliError> {
    let (corpus, _) = load_corpus(config)?;
    let (gt, _) = holistic_maps(&corpus);
    let dir = report_dir(config);
    let gap = config.report.gap;
    for c in config.prompt_conditions()? {
        let table = load_scores(config, c)?;
        let listed = render::discrepancies(&table, gap).len();
        write(
            &dir.join(format!("discrepancies_{}.md", c.as_str())),
            render::discrepancies_markdown(&table, gap, &gt),
        )?;
        write(
            &dir.join(format!("discrepancies_{}.csv", c.as_str())),
            render::discrepancies_csv(&table, gap),
        )?;
        println!("{}: {listed} essays with aspect spread >= {gap}", c.as_str());
    }
    write_manifest(config)
}

pub fn report(config: &RunConfig) -> Result<(), CliError> {
    correlate(config)?;
    reconstruct(config)?;
    friedman_cmd(config)?;
    inspect_discrepancies(config)
}

/// Lists every report file with its SHA-256 and the producing config digest.
fn write_manifest(config: &RunConfig) -> Result<(), CliError> {
    let dir = report_dir(config);
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(&dir).map_err(|e| io_err(&dir, e))? {
        let entry = entry.map_err(|e| io_err(&dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == MANIFEST || !entry.path().is_file() {
            continue;
        }
        let bytes = fs::read(entry.path()).map_err(|e| io_err(&entry.path(), e))?;
        files.insert(name, digest(&bytes));
    }
    let manifest = json!({
        "tool_version": TOOL_VERSION,
        "config_digest": config.digest(),
        "files": files,
    });
    write(&dir.join(MANIFEST), pretty(&manifest))
}
