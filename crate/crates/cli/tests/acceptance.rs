//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero on any failure.

mod support;

use std::collections::HashMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use cefrscore::corpus::{parse_corpus, CorpusFormat};
use cefrscore::features::flesch_kincaid;
use cefrscore::grader::{
    build_prompt, grade_corpus, map_option_to_level, reconstruct_mean, shuffle_descriptors, AspectId,
    DescriptorPermutation, DescriptorSet, DeterministicStub, GradeOptions, PromptCondition, StubPolicy,
};
use cefrscore::stats::{chi2_sf, friedman, nemenyi, pearson, rmse, spearman, studentized_range_sf, PairedSeries};
use cefrscore::textprims::align_edits;
use cefrscore::{
    cefr_to_numeric, efcamdat_align, numeric_to_cefr, CefrBand, CefrLevel, EssayRecord, NumericScore, StatsError,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn within_time(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    ensure!(elapsed < limit, "{detail}; took {elapsed:.2?}, limit {limit:?}");
    Ok(format!("{detail}; {elapsed:.2?}"))
}

fn score_alignment() -> Outcome {
    let start = Instant::now();
    let labels = [
        "A1", "A1+", "A2", "A2+", "B1", "B1+", "B2", "B2+", "C1", "C1+", "C2", "C2+",
    ];
    for (i, label) in labels.iter().enumerate() {
        let expected = 1.0 + 0.5 * i as f64;
        let level: CefrLevel = label.parse().map_err(|e| format!("{label}: {e:?}"))?;
        let numeric = cefr_to_numeric(level).value();
        ensure!(numeric == expected, "{label} -> {numeric}, expected {expected}");
        let back = numeric_to_cefr(numeric).map_err(|e| e.to_string())?;
        ensure!(
            back == level && back.to_string() == *label,
            "{numeric} -> {back}, expected {label}"
        );
    }
    // EFCAMDAT level -> unified score; level 16 splits on raw score 85.
    let table: [(u8, f64); 15] = [
        (1, 1.0),
        (2, 1.0),
        (3, 1.5),
        (4, 2.0),
        (5, 2.0),
        (6, 2.5),
        (7, 3.0),
        (8, 3.0),
        (9, 3.5),
        (10, 4.0),
        (11, 4.0),
        (12, 4.5),
        (13, 5.0),
        (14, 5.0),
        (15, 5.5),
    ];
    for (level, expected) in table {
        for raw in [0, 50, 84, 85, 100] {
            let got = efcamdat_align(level, raw).map_err(|e| e.to_string())?.value();
            ensure!(
                got == expected,
                "EFCAMDAT {level} (raw {raw}) -> {got}, expected {expected}"
            );
        }
    }
    for (raw, expected) in [(0, 6.0), (84, 6.0), (85, 6.5), (100, 6.5)] {
        let got = efcamdat_align(16, raw).map_err(|e| e.to_string())?.value();
        ensure!(got == expected, "EFCAMDAT 16 (raw {raw}) -> {got}, expected {expected}");
    }
    ensure!(
        efcamdat_align(0, 50).is_err() && efcamdat_align(17, 50).is_err(),
        "out-of-range level accepted"
    );
    within_time(
        start.elapsed(),
        Duration::from_secs(1),
        "12 W&I levels and 16 EFCAMDAT levels exact".into(),
    )
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Small integer supports inject ties; continuous draws exercise the rest.
    match rng.gen_range(0..3) {
        0 => (0..n).map(|_| rng.gen_range(0..4) as f64).collect(),
        1 => (0..n).map(|_| rng.gen_range(-5.0..5.0_f64).round() / 2.0).collect(),
        _ => (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect(),
    }
}

fn statistics_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_err: f64 = 0.0;
    let mut degenerate = 0;
    for case in 0..1000 {
        let n = rng.gen_range(3..=20);
        let x = random_vector(&mut rng, n);
        let y = random_vector(&mut rng, n);
        let s = PairedSeries::new(x.clone(), y.clone()).map_err(|e| e.to_string())?;
        for (name, got, want) in [
            ("SRC", spearman(&s), spearman_oracle(&x, &y)),
            ("PCC", pearson(&s), pearson_oracle(&x, &y)),
        ] {
            match (got, want) {
                (Ok(g), Some(w)) => {
                    ensure!((g - w).abs() <= 1e-10, "case {case} {name}: {g} vs oracle {w}");
                    max_err = max_err.max((g - w).abs());
                }
                (Err(StatsError::ZeroVariance), None) => degenerate += 1,
                (g, w) => return Err(format!("case {case} {name}: {g:?} vs oracle {w:?}")),
            }
        }
        let g = rmse(&x, &y).map_err(|e| e.to_string())?;
        let w = rmse_oracle(&x, &y);
        ensure!((g - w).abs() <= 1e-10, "case {case} RMSE: {g} vs oracle {w}");
        max_err = max_err.max((g - w).abs());
    }
    for case in 0..500 {
        let n = rng.gen_range(2..=8);
        let k = rng.gen_range(3..=6);
        let data: Vec<Vec<f64>> = (0..n).map(|_| random_vector(&mut rng, k)).collect();
        let got = friedman(&data).map_err(|e| format!("case {case}: {e}"))?.statistic;
        let want = friedman_oracle(&data);
        ensure!(
            (got - want).abs() <= 1e-10,
            "Friedman case {case}: {got} vs oracle {want}"
        );
        max_err = max_err.max((got - want).abs());
    }
    within_time(
        start.elapsed(),
        Duration::from_secs(30),
        format!("1000 vectors + 500 matrices, max |Δ| = {max_err:.1e}, {degenerate} zero-variance agreements"),
    )
}

fn special_functions() -> Outcome {
    let c = chi2_sf(2.0, 2);
    let e = (-1.0f64).exp();
    ensure!((c - e).abs() <= 1e-10, "chi2_sf(2, 2) = {c}, expected {e}");
    let mut worst: f64 = 0.0;
    for q in [0.5, 1.0, 2.0, 4.0] {
        let got = studentized_range_sf(q, 2);
        let want = 1.0 - (2.0 * normal_cdf_series(q / std::f64::consts::SQRT_2) - 1.0);
        ensure!(
            (got - want).abs() <= 1e-7,
            "studentized_range_sf({q}, 2) = {got}, expected {want}"
        );
        worst = worst.max((got - want).abs());
    }
    Ok(format!(
        "chi2_sf |Δ| = {:.1e}; studentized range k=2 max |Δ| = {worst:.1e}",
        (c - e).abs()
    ))
}

fn edit_extraction() -> Outcome {
    let start = Instant::now();
    let seqs = all_sequences(3, 8);
    let mut oracle = EditRunsOracle::default();
    let mut pairs = 0u64;
    for a in &seqs {
        for b in &seqs {
            // Counts are invariant under relabelling the alphabet, so one
            // representative per relabelling class covers every pair.
            if !is_canonical_pair(a, b) {
                continue;
            }
            pairs += 1;
            let script = align_edits(a, b, |x, y| x == y);
            let want = oracle.runs(a, b);
            ensure!(
                script.len() == want,
                "{a:?} -> {b:?}: {} edits, oracle {want}",
                script.len()
            );
            ensure!(&script.apply(a, b) == b, "{a:?} -> {b:?}: replay mismatch");
        }
    }
    Ok(format!(
        "{pairs} canonical pairs (all {} pairs up to relabelling); {:.1?}",
        seqs.len() * seqs.len(),
        start.elapsed()
    ))
}

fn fuzz_essay(rng: &mut ChaCha8Rng) -> String {
    const WORDS: [&str; 24] = [
        "cat",
        "house",
        "beautiful",
        "run",
        "quickly",
        "information",
        "the",
        "a",
        "on",
        "we",
        "they",
        "yesterday",
        "education",
        "important",
        "go",
        "make",
        "friendly",
        "city",
        "river",
        "and",
        "because",
        "table",
        "green",
        "university",
    ];
    let paragraphs = rng.gen_range(1..=3);
    let mut out = Vec::new();
    for _ in 0..paragraphs {
        let mut para = Vec::new();
        for _ in 0..rng.gen_range(1..=5) {
            let len = rng.gen_range(1..=12);
            let mut words: Vec<String> = (0..len).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
            let first = &mut words[0];
            *first = first[..1].to_uppercase() + &first[1..];
            let end = ['.', '!', '?'].choose(rng).unwrap();
            para.push(format!("{}{end}", words.join(" ")));
        }
        out.push(para.join(" "));
    }
    out.join("\n\n")
}

fn readability() -> Outcome {
    let fk = flesch_kincaid(&EssayRecord::new("fk", "The cat sat on the mat.")).map_err(|e| e.to_string())?;
    ensure!(
        (fk - -1.45).abs() <= 1e-9,
        "FK(\"The cat sat on the mat.\") = {fk}, expected -1.45"
    );
    let res = cefrscore::FeatureResources::bundled(
        cefrscore::textprims::parse_embeddings("1 1\nx 1\n").map_err(|e| e.to_string())?,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..100 {
        let text = fuzz_essay(&mut rng);
        let once = cefrscore::extract_all(&EssayRecord::new("a", text.clone()), &res).map_err(|e| e.to_string())?;
        let twice = cefrscore::extract_all(&EssayRecord::new("b", format!("{text}\n\n{text}")), &res)
            .map_err(|e| e.to_string())?;
        ensure!(
            (once.flesch_kincaid - twice.flesch_kincaid).abs() <= 1e-9,
            "essay {i}: fl.-kinc. {} vs duplicated {}",
            once.flesch_kincaid,
            twice.flesch_kincaid
        );
        let (a, b) = (once.avg_sentence_length.unwrap(), twice.avg_sentence_length.unwrap());
        ensure!((a - b).abs() <= 1e-9, "essay {i}: av.s.ln. {a} vs duplicated {b}");
    }
    Ok(format!("FK = {fk:.12}; 100 fuzzed essays invariant under duplication"))
}

fn golden_essay(score: Option<f64>, predicted: Option<f64>) -> EssayRecord {
    let mut e = EssayRecord::new(
        "essay-1",
        "My name is Ana. I live in Lima with my family.\n\nOn weekends I likes to play football with my friends.",
    );
    e.holistic_gt = score.and_then(NumericScore::new);
    e.holistic_pred = predicted.and_then(NumericScore::new);
    e
}

fn prompt_goldens() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let d = DescriptorSet::bundled();
    let cases = [
        (
            "gt_grammatical_accuracy.txt",
            build_prompt(
                &golden_essay(Some(2.5), None),
                AspectId::GrammaticalAccuracy,
                PromptCondition::GroundTruthScore,
                &DescriptorPermutation::identity(AspectId::GrammaticalAccuracy),
                d,
            ),
        ),
        (
            "none_vocabulary_control.txt",
            build_prompt(
                &golden_essay(Some(2.5), None),
                AspectId::VocabularyControl,
                PromptCondition::NoScore,
                &DescriptorPermutation::identity(AspectId::VocabularyControl),
                d,
            ),
        ),
        (
            "predicted_vocabulary_range_shuffled.txt",
            build_prompt(
                &golden_essay(None, Some(3.0)),
                AspectId::VocabularyRange,
                PromptCondition::PredictedScore,
                &shuffle_descriptors("essay-1", AspectId::VocabularyRange, 0),
                d,
            ),
        ),
    ];
    for (file, rendered) in cases {
        let rendered = rendered.map_err(|e| format!("{file}: {e}"))?;
        let golden = fs::read_to_string(dir.join(file)).map_err(|e| format!("{file}: {e}"))?;
        if rendered != golden {
            let at = rendered
                .bytes()
                .zip(golden.bytes())
                .position(|(a, b)| a != b)
                .unwrap_or(rendered.len().min(golden.len()));
            return Err(format!("{file}: first difference at byte {at}"));
        }
    }
    let gt = fs::read_to_string(dir.join("gt_grammatical_accuracy.txt")).unwrap();
    ensure!(
        gt.contains("It has been given this score on a scale from 1 to 6.5: 2.5.\n"),
        "score sentence missing"
    );
    Ok("3 golden prompts byte-identical (GT 6-option, no-score 5-option, predicted shuffled)".into())
}

fn permutations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let no_a1 = [
        AspectId::VocabularyControl,
        AspectId::Flexibility,
        AspectId::ThematicDevelopment,
    ];
    for t in 0..10_000 {
        let id = format!("e{}", rng.gen::<u32>());
        let aspect = *AspectId::ALL.choose(&mut rng).unwrap();
        let seed: u64 = rng.gen();
        let perm = shuffle_descriptors(&id, aspect, seed);
        let levels = aspect.levels();
        let n = levels.len();
        ensure!(
            n == if no_a1.contains(&aspect) { 5 } else { 6 },
            "{aspect}: {n} options"
        );
        let mut hit = vec![false; n];
        for i in 0..n {
            let band = map_option_to_level(i, &perm).map_err(|e| format!("triple {t}: {e}"))?;
            let pos = levels
                .iter()
                .position(|&l| l == band)
                .ok_or(format!("triple {t}: {band} not a level of {aspect}"))?;
            ensure!(!hit[pos], "triple {t}: {band} produced twice");
            hit[pos] = true;
            ensure!(
                !(no_a1.contains(&aspect) && band == CefrBand::A1),
                "triple {t}: A1 for {aspect}"
            );
        }
        ensure!(map_option_to_level(n, &perm).is_err(), "triple {t}: index {n} accepted");
    }
    Ok("10000 (essay, aspect, seed) triples bijective; no A1 for the three A1-less aspects".into())
}

fn reconstruction() -> Outcome {
    let corpus = parse_corpus(&synthetic("corpus.jsonl"), CorpusFormat::Jsonl).map_err(|e| e.to_string())?;
    let gt: HashMap<&str, f64> = corpus
        .records
        .iter()
        .map(|r| (r.id.as_str(), r.holistic_gt.unwrap().value()))
        .collect();
    let run_src = |policy: StubPolicy| -> Result<Result<f64, StatsError>, String> {
        let stub = DeterministicStub::new(policy);
        let run = grade_corpus(
            &corpus,
            &AspectId::ALL,
            PromptCondition::GroundTruthScore,
            &stub,
            None,
            DescriptorSet::bundled(),
            &GradeOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        if !run.is_complete() {
            return Err(format!("incomplete run: {:?}", run.failures));
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for row in &run.table.rows {
            let bands: Vec<CefrBand> = row.grades.iter().map(|g| g.level).collect();
            x.push(reconstruct_mean(&bands).map_err(|e| e.to_string())?);
            y.push(gt[row.id.as_str()]);
        }
        Ok(spearman(&PairedSeries::new(x, y).map_err(|e| e.to_string())?))
    };
    let echo = run_src(StubPolicy::EchoHolistic)?;
    ensure!(echo == Ok(1.0), "EchoHolistic SRC = {echo:?}, expected exactly 1.0");
    let fixed = run_src(StubPolicy::FixedLevel(CefrBand::B1))?;
    ensure!(
        matches!(fixed, Err(StatsError::ZeroVariance)),
        "FixedLevel SRC = {fixed:?}, expected ZeroVariance"
    );
    Ok(format!(
        "EchoHolistic SRC = 1.0 over {} essays; FixedLevel → ZeroVariance",
        corpus.len()
    ))
}

fn pipeline(out: &Path, cache: &Path) -> Result<Duration, String> {
    let start = Instant::now();
    for cmd in ["features", "grade", "report"] {
        let args = [
            "cefrscore".to_string(),
            "--corpus".into(),
            synthetic("corpus.jsonl").display().to_string(),
            "--predictions".into(),
            synthetic("predictions.jsonl").display().to_string(),
            "--embeddings".into(),
            synthetic("embeddings.txt").display().to_string(),
            "--output-dir".into(),
            out.display().to_string(),
            "--cache-dir".into(),
            cache.display().to_string(),
            "--backend".into(),
            "stub:echo-holistic".into(),
            "--seed".into(),
            "42".into(),
            cmd.into(),
        ];
        let code = cefrscore_cli::run(args);
        ensure!(code == 0, "`{cmd}` exited {code}");
    }
    Ok(start.elapsed())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cache = tmp.path().join("cache");
    let (a, b) = (tmp.path().join("run-a"), tmp.path().join("run-b"));
    let ta = pipeline(&a, &cache)?;
    let tb = pipeline(&b, &cache)?;
    let limit = Duration::from_secs(10);
    ensure!(ta < limit && tb < limit, "runs took {ta:.2?} and {tb:.2?}");
    let report_a = snapshot(&a.join("report"));
    let report_b = snapshot(&b.join("report"));
    ensure!(!report_a.is_empty(), "empty report bundle");
    ensure!(report_a == report_b, "report bundles differ");
    // Everything outside the run-stamp files must match too.
    let stable = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        snapshot(dir)
            .into_iter()
            .filter(|(name, _)| !name.ends_with(".run.json"))
            .collect()
    };
    ensure!(stable(&a) == stable(&b), "output directories differ outside run stamps");
    let stamp: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(b.join("grade_gt.run.json")).unwrap()).map_err(|e| e.to_string())?;
    let (calls, hits) = (stamp["backend_calls"].as_u64(), stamp["cache_hits"].as_u64());
    ensure!(
        calls == Some(0) && hits == Some(270),
        "rerun: backend_calls {calls:?}, cache_hits {hits:?}"
    );
    Ok(format!(
        "{} report files identical; rerun 270/270 cache hits, 0 backend calls; {ta:.2?} / {tb:.2?}",
        report_a.len()
    ))
}

fn nemenyi_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let data: Vec<Vec<f64>> = (0..50)
        .map(|_| {
            let base: f64 = rng.gen_range(0.0..3.0);
            vec![
                base,
                base,
                base + 1.0 + rng.gen_range(0.0..0.5),
                base + 2.0 + rng.gen_range(0.0..0.5),
            ]
        })
        .collect();
    let r = nemenyi(&data).map_err(|e| e.to_string())?;
    let p = &r.p_values;
    ensure!(p[0][1] == 1.0, "identical pair p = {}", p[0][1]);
    for shifted in [2, 3] {
        for same in [0, 1] {
            ensure!(p[same][shifted] < 0.05, "p[{same}][{shifted}] = {}", p[same][shifted]);
        }
    }
    Ok(format!(
        "identical p = 1.0; shifted-vs-identical p ≤ {:.2e}",
        [p[0][2], p[0][3], p[1][2], p[1][3]].into_iter().fold(0.0, f64::max)
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("score alignment round-trips", score_alignment),
        ("statistics match brute-force oracles", statistics_oracles),
        ("special functions", special_functions),
        ("edit extraction matches exhaustive oracle", edit_extraction),
        ("readability value and duplication invariance", readability),
        ("prompt golden files", prompt_goldens),
        ("descriptor permutation bijectivity", permutations),
        ("holistic reconstruction property", reconstruction),
        ("end-to-end determinism", determinism),
        ("Nemenyi sanity", nemenyi_sanity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
