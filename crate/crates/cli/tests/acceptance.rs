//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero when any criterion fails.

mod common;
#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{dead_endpoint, snapshot, whitespace_tokens, MockServer};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signalscope::config::PipelineConfig;
use signalscope::io::{read_json, read_jsonl};
use signalscope::pipeline::{run, ClusterRow, LabelRow, Stage, TopicSummary, TrendOut};
use signalscope::synth::write_synth;
use signalscope_core::clustering::{hdbscan, ClusterParams, NOISE};
use signalscope_core::corpus::{build_periods, Period};
use signalscope_core::dynamics::{ols_trend, TimeSeries};
use signalscope_core::labeling::aggregate_labels;
use signalscope_core::signals::{build_tem, classify, GrowthMethod, TemPoint};
use signalscope_core::synth::{SynthConfig, VolumeProfile};
use signalscope_core::topics::{build_vocabulary, ctfidf, TopicError, Vocabulary};

const MIN_CLUSTERS: usize = 5;
const MIN_ARI: f64 = 0.9;
const MAX_RUNTIME: Duration = Duration::from_secs(60);
const CTFIDF_TOL: f64 = 1e-9;
const OLS_TOL: f64 = 1e-10;
const COVERAGE_TARGET: f64 = 0.95;
const COVERAGE_SLACK: f64 = 0.03;
const ROUNDS: usize = 15;
const TOKEN_BUDGET: usize = 512;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

/// Adjusted Rand index from pair counts over the contingency table.
fn ari(a: &[usize], b: &[i32]) -> f64 {
    let pairs = |n: usize| (n * n.saturating_sub(1) / 2) as f64;
    let mut table: BTreeMap<(usize, i32), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<i32, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let ra: f64 = rows.values().map(|&n| pairs(n)).sum();
    let cb: f64 = cols.values().map(|&n| pairs(n)).sum();
    let expected = ra * cb / pairs(a.len());
    let max = (ra + cb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

struct Planted {
    dir: tempfile::TempDir,
    truth: Vec<usize>,
    burst: Vec<(usize, i32, String)>,
}

fn planted_run() -> Result<(Planted, Duration), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus_path = dir.path().join("planted.jsonl");
    let (corpus, _) = write_synth(&SynthConfig::default(), &corpus_path).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        corpus: Some(corpus_path),
        out: dir.path().join("out"),
        ..PipelineConfig::default()
    };
    let started = Instant::now();
    run(cfg, Stage::Corpus).map_err(|e| format!("{e:#}"))?;
    let elapsed = started.elapsed();
    let burst = corpus
        .topics
        .iter()
        .filter(|t| t.profile == VolumeProfile::LateBurst)
        .filter_map(|t| t.burst.clone().map(|(y, w)| (t.topic, y, w)))
        .collect();
    Ok((
        Planted {
            dir,
            truth: corpus.truth,
            burst,
        },
        elapsed,
    ))
}

fn recovery(planted: &Planted, elapsed: Duration) -> Check {
    let out = planted.dir.path().join("out");
    let rows: Vec<ClusterRow> = read_jsonl(&out.join("clusters.jsonl")).map_err(|e| e.to_string())?;
    let labels: Vec<i32> = rows.iter().map(|r| r.label).collect();
    let summary: TopicSummary = read_json(&out.join("topic_summary.json")).map_err(|e| e.to_string())?;
    let score = ari(&planted.truth, &labels);
    let noise = labels.iter().filter(|&&l| l == NOISE).count();
    ensure!(summary.clusters >= MIN_CLUSTERS, "{} clusters < {MIN_CLUSTERS}", summary.clusters);
    ensure!(score >= MIN_ARI, "ARI {score:.4} < {MIN_ARI}");
    ensure!(elapsed < MAX_RUNTIME, "runtime {elapsed:?} >= {MAX_RUNTIME:?}");
    Ok(format!(
        "{} clusters, ARI {score:.5} (noise counted as a label, {noise} noise docs), run {:.2}s",
        summary.clusters,
        elapsed.as_secs_f64()
    ))
}

fn ctfidf_oracle() -> Check {
    use oracle::ctfidf::{brute_force, doc, occurrences};
    let alphabet = ["a", "b", "c", "d", "e", "f"];
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for case in 0..100 {
        let classes = rng.random_range(1..=5);
        let budget = rng.random_range(classes..=30);
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        let mut left = budget;
        while left > 0 {
            let len = rng.random_range(1..=left.min(6));
            let tokens: Vec<&str> = (0..len).map(|_| *alphabet.choose(&mut rng).unwrap()).collect();
            docs.push(doc(&tokens));
            labels.push(if rng.random_bool(0.1) { -1 } else { rng.random_range(0..classes) });
            left -= len;
        }
        if labels.iter().all(|&l| l < 0) {
            labels[0] = 0;
        }
        let vocab = if rng.random_bool(0.5) {
            build_vocabulary(&docs, 1).map_err(|e| e.to_string())?
        } else {
            let all: BTreeSet<String> = docs.iter().flat_map(occurrences).collect();
            let kept: Vec<String> = all.into_iter().filter(|_| rng.random_bool(0.6)).collect();
            Vocabulary::from_terms(kept, &docs)
        };
        let terms: BTreeSet<String> = vocab.terms().iter().cloned().collect();
        match (brute_force(&docs, &labels, &terms), ctfidf(&docs, &labels, &vocab)) {
            (Some(want), Ok(got)) => {
                for (c, row) in want.iter().enumerate() {
                    for (t, w) in row {
                        worst = worst.max((got.weights[c][vocab.id(t).unwrap()] - w).abs());
                    }
                }
                compared += 1;
            }
            (None, Err(TopicError::EmptyClass(_))) => {}
            (want, got) => return Err(format!("case {case}: oracle {want:?} vs engine {got:?}")),
        }
    }
    ensure!(worst <= CTFIDF_TOL, "max deviation {worst:e} > {CTFIDF_TOL:e}");
    let docs = [doc(&["a", "a", "b"]), doc(&["b", "b", "b", "c"])];
    let vocab = Vocabulary::from_terms(["a", "b", "c"], &docs);
    let w = ctfidf(&docs, &[0, 1], &vocab).map_err(|e| e.to_string())?.weights[0][0];
    ensure!((w - 0.6744).abs() < 5e-5, "worked fixture W[a,0] = {w}");
    Ok(format!("{compared} corpora compared, max deviation {worst:e}; worked fixture {w:.6}"))
}

fn hdbscan_oracle() -> Check {
    use oracle::hdbscan::{oracle, random_points};
    let params = ClusterParams::new(2, 1).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let points = random_points(&mut rng);
        let got = hdbscan(&points, &params).map_err(|e| e.to_string())?;
        let want = oracle(&points, 2, 1, false);
        ensure!(got.labels == want, "case {case}: {:?} vs oracle {want:?}", got.labels);
    }
    let six: Vec<Vec<f64>> = [0.0, 0.5, 1.0, 10.0, 10.5, 11.0].iter().map(|&x| vec![x]).collect();
    let got = hdbscan(&six, &params).map_err(|e| e.to_string())?;
    ensure!(
        got.n_clusters() == 2 && got.noise_count() == 0,
        "six-point fixture: {:?}",
        got.labels
    );
    Ok("200/200 partitions equal the oracle; six-point fixture 2 clusters, 0 noise".into())
}

fn tem() -> Check {
    use oracle::signals::{brute_class, random_series};
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for case in 0..500 {
        let n = rng.random_range(1..20);
        let points: Vec<TemPoint> = (0..n)
            .map(|topic| TemPoint {
                topic,
                avg_proportion: rng.random_range(0.0..0.5),
                growth_rate: if rng.random_bool(0.1) { 0.0 } else { rng.random_range(-1.0..1.0) },
                doc_count: 1,
            })
            .collect();
        let xs: Vec<f64> = points.iter().map(|p| p.avg_proportion).collect();
        let (_, classes) = classify(&points);
        for (p, c) in points.iter().zip(&classes) {
            ensure!(*c == brute_class(p.avg_proportion, p.growth_rate, &xs), "map {case}: topic {} disagrees", p.topic);
        }
    }
    let scheme = build_periods(2004, 2021, 6).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for case in 0..50 {
        let series = random_series(&mut rng);
        for c in [0.5, 2.0, 10.0] {
            let scaled: Vec<TimeSeries> = series
                .iter()
                .map(|s| TimeSeries {
                    proportions: s.proportions.iter().map(|p| p * c).collect(),
                    ..s.clone()
                })
                .collect();
            for &period in &scheme.periods {
                let a = build_tem(&series, period, GrowthMethod::RelativeChange);
                let b = build_tem(&scaled, period, GrowthMethod::RelativeChange);
                ensure!(a.classes == b.classes, "corpus {case}, c = {c}, period {period}");
            }
        }
    }
    let want = [Period { lo: 2004, hi: 2009 }, Period { lo: 2010, hi: 2015 }, Period { lo: 2016, hi: 2021 }];
    ensure!(scheme.periods == want, "build_periods gave {:?}", scheme.periods);
    Ok("500 maps match the quadrant rule; 50 corpora x 3 scales invariant; periods [2004,2009] [2010,2015] [2016,2021]".into())
}

fn trend() -> Check {
    use oracle::trend::{ci_coverage, normal_equations};
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(3..30);
        let x: Vec<f64> = (0..n).map(|i| i as f64 - n as f64 / 2.0).collect();
        let y: Vec<f64> = x.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let fit = ols_trend(&x, &y).map_err(|e| e.to_string())?;
        let (b, a) = normal_equations(&x, &y);
        worst = worst.max((fit.slope - b).abs()).max((fit.intercept - a).abs());
    }
    ensure!(worst < OLS_TOL, "OLS deviates by {worst:e}");
    let x = [0.0, 1.0, 2.0, 3.0, 4.0];
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let fit = ols_trend(&x, &y).map_err(|e| e.to_string())?;
    ensure!(
        (fit.slope - 2.0).abs() < 1e-12 && (fit.intercept - 1.0).abs() < 1e-12 && fit.ci_half_width.iter().all(|w| w.abs() < 1e-9),
        "exact fit gave slope {} intercept {}",
        fit.slope,
        fit.intercept
    );
    let coverage = ci_coverage(2000, 2021);
    ensure!(
        (coverage - COVERAGE_TARGET).abs() <= COVERAGE_SLACK,
        "coverage {coverage:.4} outside {COVERAGE_TARGET} +- {COVERAGE_SLACK}"
    );
    Ok(format!("max OLS deviation {worst:e}; exact fit ok; CI coverage {coverage:.4} over 2000 series"))
}

fn peaks(planted: &Planted) -> Check {
    ensure!(!planted.burst.is_empty(), "default corpus has no late-burst topic");
    let out = planted.dir.path().join("out");
    let rows: Vec<ClusterRow> = read_jsonl(&out.join("clusters.jsonl")).map_err(|e| e.to_string())?;
    #[derive(serde::Deserialize)]
    struct Assignment {
        topic: i32,
    }
    let assigned: Vec<Assignment> = read_jsonl(&out.join("assignments.jsonl")).map_err(|e| e.to_string())?;
    ensure!(rows.len() == planted.truth.len(), "row count mismatch");
    let mut notes = Vec::new();
    for (planted_topic, year, word) in &planted.burst {
        let mut votes: BTreeMap<i32, usize> = BTreeMap::new();
        for (a, &t) in assigned.iter().zip(&planted.truth) {
            if t == *planted_topic && a.topic != NOISE {
                *votes.entry(a.topic).or_default() += 1;
            }
        }
        let topic = votes.iter().max_by_key(|(_, &n)| n).map(|(&t, _)| t).ok_or("burst topic not recovered")?;
        let trend: TrendOut = read_json(&out.join(format!("trends/{topic}.json"))).map_err(|e| e.to_string())?;
        let first = trend.peaks.first().ok_or("no peaks")?;
        ensure!(first.year == *year, "first peak {} but burst planted in {year}", first.year);
        ensure!(first.top_terms.contains(word), "burst term {word:?} not in {:?}", first.top_terms);
        notes.push(format!("topic {topic}: peak {} top terms {:?}", first.year, first.top_terms));
    }
    Ok(notes.join("; "))
}

fn labeling() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("long.jsonl");
    let synth = SynthConfig {
        k_topics: 2,
        docs_per_topic: 60,
        abstract_words: 400,
        ..SynthConfig::default()
    };
    write_synth(&synth, &corpus).map_err(|e| e.to_string())?;
    let base = PipelineConfig {
        corpus: Some(corpus),
        ..PipelineConfig::default()
    };

    let server = MockServer::echo("LABEL");
    let mut cfg = base.clone();
    cfg.out = dir.path().join("echo");
    cfg.labeler.endpoint = Some(server.url.clone());
    run(cfg, Stage::Corpus).map_err(|e| format!("{e:#}"))?;
    let rows: Vec<LabelRow> = read_jsonl(&dir.path().join("echo/label_candidates.jsonl")).map_err(|e| e.to_string())?;
    ensure!(!rows.is_empty(), "no topics");
    for r in &rows {
        ensure!(r.candidates.len() == ROUNDS && r.label == "LABEL", "topic {}: {:?}", r.topic, r.candidates);
    }
    let requests = server.requests();
    ensure!(requests.len() == ROUNDS * rows.len(), "{} requests for {} topics", requests.len(), rows.len());
    let longest = requests.iter().map(whitespace_tokens).max().unwrap_or(0);
    ensure!(longest <= TOKEN_BUDGET, "request with {longest} tokens");

    let medoid = aggregate_labels(&["underwater imaging", "underwater imaging systems", "sonar"]);
    ensure!(medoid.as_deref() == Some("underwater imaging"), "medoid {medoid:?}");

    let mut cfg = base;
    cfg.out = dir.path().join("down");
    cfg.labeler.endpoint = Some(dead_endpoint());
    run(cfg, Stage::Corpus).map_err(|e| format!("server down: {e:#}"))?;
    let rows: Vec<LabelRow> = read_jsonl(&dir.path().join("down/label_candidates.jsonl")).map_err(|e| e.to_string())?;
    ensure!(rows.iter().all(|r| r.source == "heuristic"), "fallback not heuristic");
    Ok(format!(
        "{} requests, {ROUNDS} per topic, longest {longest} tokens; medoid \"underwater imaging\"; server down -> heuristic",
        requests.len()
    ))
}

fn determinism() -> Check {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synth600.jsonl");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut snaps = Vec::new();
    for name in ["a", "b"] {
        let cfg = PipelineConfig {
            corpus: Some(fixture.clone()),
            out: dir.path().join(name),
            ..PipelineConfig::default()
        };
        run(cfg, Stage::Corpus).map_err(|e| format!("{e:#}"))?;
        snaps.push(snapshot(&dir.path().join(name)));
    }
    ensure!(snaps[0] == snaps[1], "outputs differ between runs");
    Ok(format!("{} files byte-identical across two runs", snaps[0].len()))
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let planted = catch_unwind(AssertUnwindSafe(planted_run)).unwrap_or_else(|_| Err("planted run panicked".into()));
    let with_planted = |f: &dyn Fn(&Planted, Duration) -> Check| match &planted {
        Ok((p, t)) => guarded(|| f(p, *t)),
        Err(e) => Err(format!("planted run failed: {e}")),
    };
    let results: Vec<(&str, Check)> = vec![
        ("1 planted-topic recovery", with_planted(&|p, t| recovery(p, t))),
        ("2 c-TF-IDF oracle", guarded(ctfidf_oracle)),
        ("3 HDBSCAN oracle", guarded(hdbscan_oracle)),
        ("4 TEM correctness", guarded(tem)),
        ("5 trend fitting", guarded(trend)),
        ("6 peak keywords", with_planted(&|p, _| peaks(p))),
        ("7 labeling protocol", guarded(labeling)),
        ("8 determinism", guarded(determinism)),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
