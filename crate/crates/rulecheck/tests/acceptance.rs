//! One PASS/FAIL line per primary acceptance criterion. Exits nonzero if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rulecheck::clock::SystemClock;
use rulecheck::jsonl::{read_json, read_jsonl};
use rulecheck::llm::HttpChatBackend;
use rulecheck::mock::{fixture_world, spawn_chat, spawn_embedder, spawn_mastodon};
use rulecheck::pipeline::{files, CrawlStatus, RuleRow};
use rulecheck::{Pipeline, PipelineConfig};
use rulecheck_core::analytics::{
    bias_probes, cohen_kappa, fleiss_kappa, semantic_similarity, word_overlap, AnalyticsReport, BinSpec, EmbedError,
    Embedder, Method, Normalizer, RatingMatrix,
};
use rulecheck_core::corpus::{select_posts, FilterStats, SelectedPost};
use rulecheck_core::ingest::throttle::{RateLimit, RetryPolicy};
use rulecheck_core::moderator::{
    build_prompt, moderate, BackendError, ChatBackend, ChatReply, ChatRequest, ModerationError, LIKERT_LABELS,
};
use rulecheck_core::survey::{agreement_matrix, aggregate_preferences, AnswerKey, QuestionView, SurveyResponse};
use rulecheck_core::{
    engagement_score, EngagementCounts, InstanceRecord, LikertScore, ModelConfig, ModerationVerdict, Post, Rule,
    SelectionConfig, SelectionReport,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, posts: usize, raters: usize) -> RatingMatrix {
    RatingMatrix::new(
        (0..posts).map(|i| format!("p{i}")).collect(),
        (0..raters).map(|i| format!("r{i}")).collect(),
        (0..posts).map(|_| (0..raters).map(|_| Some(rng.random_range(0..6u8))).collect()).collect(),
    )
    .unwrap()
}

fn brute_force_cohen(a: &[u8], b: &[u8]) -> f64 {
    let mut table = [[0.0f64; 6]; 6];
    for (&x, &y) in a.iter().zip(b) {
        table[x as usize][y as usize] += 1.0;
    }
    let n: f64 = table.iter().flatten().sum();
    let observed: f64 = (0..6).map(|i| table[i][i]).sum::<f64>() / n;
    let mut expected = 0.0;
    for k in 0..6 {
        let row: f64 = table[k].iter().sum();
        let col: f64 = table.iter().map(|r| r[k]).sum();
        expected += row * col;
    }
    expected /= n * n;
    if (1.0 - expected).abs() == 0.0 {
        return 1.0;
    }
    (observed - expected) / (1.0 - expected)
}

fn agreement_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let posts = rng.random_range(1..200);
        let rows: Vec<Vec<Option<u8>>> = (0..posts)
            .map(|_| {
                let s = if trial == 0 { 3 } else { rng.random_range(0..6u8) };
                vec![Some(s); 6]
            })
            .collect();
        let m = RatingMatrix::new(
            (0..posts).map(|i| format!("p{i}")).collect(),
            (0..6).map(|i| format!("r{i}")).collect(),
            rows,
        )
        .unwrap();
        let k = fleiss_kappa(&m).unwrap();
        ensure(k == 1.0, || format!("unanimous matrix gave {k}"))?;
    }
    let mut worst_fleiss = 0.0f64;
    for _ in 0..5 {
        let k = fleiss_kappa(&uniform_matrix(&mut rng, 10_000, 6)).unwrap();
        worst_fleiss = worst_fleiss.max(k.abs());
    }
    ensure(worst_fleiss < 0.02, || format!("|kappa_F| = {worst_fleiss} on uniform 10000x6"))?;
    let mut worst_diff = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..300);
        let cats = rng.random_range(1..=6u8);
        let a: Vec<u8> = (0..n).map(|_| rng.random_range(0..cats)).collect();
        let b: Vec<u8> = (0..n).map(|_| rng.random_range(0..cats)).collect();
        let got = cohen_kappa(&a, &b).unwrap();
        worst_diff = worst_diff.max((got - brute_force_cohen(&a, &b)).abs());
    }
    ensure(worst_diff <= 1e-12, || format!("cohen vs contingency oracle differs by {worst_diff}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("max |kappa_F| uniform = {worst_fleiss:.4}, max cohen diff = {worst_diff:.1e}, {elapsed:.2?}"))
}

struct Table(BTreeMap<String, Vec<f64>>);

impl Embedder for Table {
    fn name(&self) -> &str {
        "table"
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.0[t].clone()).collect())
    }
}

fn formula_checks() -> Check {
    let c = |replies, reblogs, favorites| EngagementCounts { replies, reblogs, favorites };
    ensure(engagement_score(&c(1, 2, 4)) == 7.0, || "engagement(1,2,4) != 7".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let (r, b, f) = (rng.random_range(0..100_000u64), rng.random_range(0..100_000u64), rng.random_range(0..100_000u64));
        let expected = r as f64 + 2.0 * b as f64 + 0.5 * f as f64;
        ensure(engagement_score(&c(r, b, f)) == expected, || format!("engagement({r},{b},{f})"))?;
    }

    let normalizer = Normalizer::default();
    let consonants: Vec<char> = "bcdfghjklmnpqrstvwxz".chars().collect();
    let vocab: Vec<String> =
        (0..60).map(|i| (0..3).map(|k| consonants[(i * 7 + k * 13 + i / 3) % consonants.len()]).collect()).collect();
    for _ in 0..1000 {
        let pick = |rng: &mut ChaCha8Rng| -> Vec<String> {
            let n = rng.random_range(1..15);
            (0..n).map(|_| vocab[rng.random_range(0..vocab.len())].clone()).collect()
        };
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        let mut ua = a.clone();
        ua.sort();
        ua.dedup();
        let mut ub = b.clone();
        ub.sort();
        ub.dedup();
        let shared = ua.iter().filter(|w| ub.contains(w)).count();
        let expected = shared as f64 / ua.len().min(ub.len()) as f64;
        let got = word_overlap(&a.join(" "), &b.join(", "), &normalizer);
        ensure(got == expected, || format!("word overlap {a:?} vs {b:?}: {got} != {expected}"))?;
    }

    let table = Table(BTreeMap::from([
        ("a".to_string(), vec![1.0, 0.0]),
        ("b".to_string(), vec![1.0, 1.0]),
        ("c".to_string(), vec![3.0, 4.0]),
        ("d".to_string(), vec![4.0, 3.0]),
        ("e".to_string(), vec![0.0, 2.0]),
        ("f".to_string(), vec![-2.0, -2.0]),
    ]));
    let cases = [
        ("a", "b", std::f64::consts::FRAC_1_SQRT_2),
        ("c", "d", 24.0 / 25.0),
        ("a", "e", 0.0),
        ("b", "f", -1.0),
        ("c", "c", 1.0),
        ("a", "c", 0.6),
    ];
    for (x, y, expected) in cases {
        let got = semantic_similarity(x, y, &table).unwrap();
        ensure((got - expected).abs() < 1e-9, || format!("cos({x},{y}) = {got}, expected {expected}"))?;
    }
    Ok("1000 engagement triples, 1000 overlap pairs, 6 cosines".into())
}

fn fixture_posts(instance: &str, n: usize, rng: &mut ChaCha8Rng, outliers: usize) -> Vec<Post> {
    let base = Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap();
    (0..n)
        .map(|i| {
            let len = if i < outliers {
                5
            } else if i < 2 * outliers {
                900
            } else {
                rng.random_range(80..120)
            };
            let text: String = "lorem ipsum dolor sit amet ".chars().cycle().take(len).collect();
            Post::from_plain_text(
                format!("{}-{:05}", &instance[..1], i),
                instance,
                base + chrono::Duration::minutes(rng.random_range(0..100_000)),
                &text,
                Some("en".into()),
                false,
                None,
                EngagementCounts {
                    replies: rng.random_range(0..20),
                    reblogs: rng.random_range(0..20),
                    favorites: rng.random_range(1..60),
                },
            )
        })
        .collect()
}

fn selection_funnel() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut map = BTreeMap::new();
    map.insert("alpha.example".to_string(), fixture_posts("alpha.example", 300, &mut rng, 20));
    map.insert("beta.example".to_string(), fixture_posts("beta.example", 150, &mut rng, 0));
    map.insert("gamma.example".to_string(), fixture_posts("gamma.example", 90, &mut rng, 0));
    let cfg = SelectionConfig::default();
    let reports = select_posts(&map, &cfg);
    let names: Vec<&str> = reports.iter().map(|r| r.instance.as_str()).collect();
    ensure(names == ["alpha.example", "beta.example"], || format!("surviving instances {names:?}"))?;
    let engagement: BTreeMap<&str, f64> =
        map.values().flatten().map(|p| (p.post_id.as_str(), engagement_score(&p.engagement))).collect();
    for r in &reports {
        ensure(r.selected_top.len() == 50 && r.selected_bottom.len() == 50, || format!("{}: sizes", r.instance))?;
        let top: BTreeSet<&String> = r.selected_top.iter().collect();
        ensure(r.selected_bottom.iter().all(|id| !top.contains(id)), || format!("{}: overlap", r.instance))?;
        let min_top = r.selected_top.iter().map(|id| engagement[id.as_str()]).fold(f64::INFINITY, f64::min);
        let max_bottom = r.selected_bottom.iter().map(|id| engagement[id.as_str()]).fold(f64::NEG_INFINITY, f64::max);
        ensure(min_top >= max_bottom, || format!("{}: min top {min_top} < max bottom {max_bottom}", r.instance))?;
    }
    let first = serde_json::to_vec(&reports).unwrap();
    for _ in 0..3 {
        let mut shuffled = map.clone();
        for posts in shuffled.values_mut() {
            posts.shuffle(&mut rng);
        }
        let again = serde_json::to_vec(&select_posts(&shuffled, &cfg)).unwrap();
        ensure(again == first, || "selection output differs between runs".into())?;
    }
    let bins = BinSpec::default();
    let (b45, b25) = (bins.assign(4.5).unwrap(), bins.assign(2.5).unwrap());
    ensure(bins.label(b45) == "(4.1667, 5]" || (bins.edges()[b45] == 5.0 && bins.edges()[b45 + 1] == 4.1667), || {
        format!("4.5 -> {}", bins.label(b45))
    })?;
    ensure(bins.edges()[b25] == 2.5 && bins.edges()[b25 + 1] == 1.6667, || format!("2.5 -> {}", bins.label(b25)))?;
    Ok(format!("4.5 -> {}, 2.5 -> {}, reports byte-identical across 4 runs", bins.label(b45), bins.label(b25)))
}

struct Fuzzer {
    seed: AtomicU64,
}

impl ChatBackend for Fuzzer {
    fn complete(&self, _: &str, _: &ChatRequest) -> Result<ChatReply, BackendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.fetch_add(1, Ordering::SeqCst));
        let content = match rng.random_range(0..6) {
            0 => {
                let bytes: Vec<u8> = (0..rng.random_range(0..200)).map(|_| rng.random()).collect();
                String::from_utf8_lossy(&bytes).into_owned()
            }
            1 => {
                let s: i64 = rng.random_range(-20..20);
                let label = LIKERT_LABELS[rng.random_range(0..6)];
                format!("Score: {s}: {label}\nJustification: because\nSuggestions: none")
            }
            2 => {
                let s = rng.random_range(0..6);
                format!("Score: {s}: {}\nJustification: fits the rules\nSuggestions: N/A", LIKERT_LABELS[s])
            }
            3 => {
                let s = rng.random_range(0..6);
                let noise: String = (0..rng.random_range(0..40)).map(|_| rng.random_range(' '..='~')).collect();
                format!("{noise}\nScore: {s}\n{noise}\nJustification: {noise}\nSuggestions: {noise}")
            }
            4 => format!("Score: {}.{}: Compliant", rng.random_range(0..9), rng.random_range(0..9)),
            _ => {
                let s = rng.random_range(0..6);
                format!("score - {s} ({})\njustification = ok", LIKERT_LABELS[s].to_lowercase())
            }
        };
        Ok(ChatReply { content, latency_ms: 0 })
    }
}

fn output_totality() -> Check {
    let start = Instant::now();
    let post = Post::from_plain_text(
        "1",
        "hci.social",
        Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
        "hello everyone",
        Some("en".into()),
        false,
        None,
        EngagementCounts::default(),
    );
    let rules = vec![Rule::new("1", "Be kind.").unwrap()];
    let bundle = build_prompt(&rules, &post, rulecheck_core::moderator::DEFAULT_TEMPLATE).unwrap();
    let backend = Fuzzer { seed: AtomicU64::new(0) };
    let mut cfg = ModelConfig::new("fuzz", "http://mock");
    cfg.max_retries = 1;
    let (mut ok, mut typed) = (0, 0);
    for _ in 0..10_000 {
        match moderate(&bundle, &cfg, &backend) {
            Ok(v) => {
                let s = v.score.value();
                ensure(s <= 5 && LikertScore::new(s).is_ok(), || format!("score {s} escaped"))?;
                ok += 1;
            }
            Err(ModerationError::Unparseable { .. }) => typed += 1,
            Err(e) => return Err(format!("unexpected error kind: {e}")),
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{ok} canonical verdicts, {typed} typed errors, 0 out of range, {elapsed:.2?}"))
}

fn laziness_fixture(shuffle: bool) -> (Vec<ModerationVerdict>, Vec<Post>, BTreeMap<String, Vec<Rule>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let n = 6000;
    let scores: Vec<u8> = (0..n).map(|i| (i % 6) as u8).collect();
    let mut lengths: Vec<usize> = scores.iter().map(|&s| 100 * (5 - s as usize)).collect();
    if shuffle {
        lengths.shuffle(&mut rng);
    }
    let posts: Vec<Post> = (0..n)
        .map(|i| {
            Post::from_plain_text(
                format!("{i}"),
                "hci.social",
                Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
                "a post",
                None,
                false,
                None,
                EngagementCounts::default(),
            )
        })
        .collect();
    let verdicts = (0..n)
        .map(|i| ModerationVerdict {
            post_id: format!("{i}"),
            model_id: "m".into(),
            score: LikertScore::new(scores[i]).unwrap(),
            justification: "because".into(),
            suggestion: if lengths[i] == 0 { "N/A".into() } else { vec!["fix"; lengths[i]].join(" ") },
            latency_ms: 0,
            attempt: 1,
        })
        .collect();
    let rules = BTreeMap::from([("hci.social".to_string(), vec![Rule::new("1", "Be kind.").unwrap()])]);
    (verdicts, posts, rules)
}

fn bias_probe_sanity() -> Check {
    let spearman_of = |shuffle: bool| -> Result<f64, String> {
        let (v, p, r) = laziness_fixture(shuffle);
        let probes = bias_probes(&v, &p, &r).map_err(|e| e.to_string())?;
        let probe = probes
            .iter()
            .find(|o| o.probe == "score_vs_suggestion_words" && o.method == Method::Spearman)
            .ok_or("laziness probe missing")?;
        Ok(probe.result().map_err(String::from)?.coefficient)
    };
    let ordered = spearman_of(false)?;
    ensure((ordered + 1.0).abs() <= 1e-9, || format!("ordered fixture r = {ordered}"))?;
    let shuffled = spearman_of(true)?;
    ensure(shuffled.abs() < 0.1, || format!("shuffled fixture r = {shuffled}"))?;
    Ok(format!("r = {ordered:.12} ordered, r = {shuffled:.4} shuffled"))
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let mastodon = spawn_mastodon(fixture_world(200)).map_err(|e| e.to_string())?;
    let chat = spawn_chat().map_err(|e| e.to_string())?;
    let embedder = spawn_embedder().map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let seeds = dir.path().join("seeds.txt");
    std::fs::write(
        &seeds,
        "hci.social\ngarden.example\nfork.example\ndeutsch.example\nlegacy.example\nrules26.example\nnorules.example\n",
    )
    .unwrap();
    let cfg = PipelineConfig {
        seed_list: seeds,
        output_dir: dir.path().join("out"),
        base_url: format!("{}/{{domain}}", mastodon.url()),
        rate_limit: RateLimit { requests_per_second: 50.0 },
        retry: RetryPolicy { attempts: 3, initial_backoff_ms: 10 },
        panel: ["m1", "m2", "m3-sloppy", "m4-min-temp", "m5", "m6"]
            .iter()
            .map(|id| ModelConfig::new(*id, chat.url()))
            .collect(),
        embedder_url: Some(embedder.url()),
        survey_seed: 7,
        ..PipelineConfig::default()
    };
    let p = Pipeline::new(cfg, Arc::new(SystemClock::default()));
    let backend = HttpChatBackend::new(Duration::from_secs(30)).unwrap();
    let fail = |stage: &str, e: rulecheck::Error| format!("{stage}: {e}");
    p.discover().map_err(|e| fail("discover", e))?;
    p.crawl().map_err(|e| fail("crawl", e))?;
    p.filter().map_err(|e| fail("filter", e))?;
    p.select().map_err(|e| fail("select", e))?;
    p.moderate(&backend).map_err(|e| fail("moderate", e))?;
    p.analyze().map_err(|e| fail("analyze", e))?;
    p.survey_build().map_err(|e| fail("survey-build", e))?;

    let typed = |r: rulecheck::Result<usize>, name: &str| r.map_err(|e| format!("{name}: {e}"));
    typed(read_jsonl::<InstanceRecord>(&p.path(files::INSTANCES)).map(|v| v.len()), files::INSTANCES)?;
    typed(read_jsonl::<RuleRow>(&p.path(files::RULES)).map(|v| v.len()), files::RULES)?;
    typed(read_jsonl::<Post>(&p.path(files::POSTS)).map(|v| v.len()), files::POSTS)?;
    typed(read_jsonl::<CrawlStatus>(&p.path(files::CRAWL_STATUS)).map(|v| v.len()), files::CRAWL_STATUS)?;
    typed(read_json::<FilterStats>(&p.path(files::FILTER_STATS)).map(|_| 1), files::FILTER_STATS)?;
    let reports = typed(read_jsonl::<SelectionReport>(&p.path(files::SELECTION_REPORT)).map(|v| v.len()), "report")?;
    let selected = typed(read_jsonl::<SelectedPost>(&p.path(files::SELECTED)).map(|v| v.len()), files::SELECTED)?;
    let verdicts: Vec<ModerationVerdict> = read_jsonl(&p.path(files::VERDICTS)).map_err(|e| e.to_string())?;
    let report: AnalyticsReport = read_json(&p.path(files::ANALYTICS_REPORT)).map_err(|e| e.to_string())?;
    let views: Vec<QuestionView> = read_json(&p.path(files::SURVEY)).map_err(|e| e.to_string())?;
    let key: AnswerKey = read_json(&p.path(files::ANSWER_KEY)).map_err(|e| e.to_string())?;
    ensure(reports == 2 && selected == 200, || format!("{reports} instances, {selected} posts selected"))?;
    ensure(verdicts.len() == selected * 6, || format!("{} verdicts", verdicts.len()))?;
    ensure(report.score_distribution.len() == 6 && report.fleiss_kappa.is_some(), || "analytics report incomplete".into())?;
    ensure(report.semantic_similarity.is_some(), || "no semantic similarity tables".into())?;
    ensure(views.len() == key.len() && !views.is_empty(), || format!("{} questions", views.len()))?;

    let calls = chat.calls();
    let again = p.moderate(&backend).map_err(|e| fail("moderate rerun", e))?;
    ensure(chat.calls() == calls && again["requested"] == 0, || format!("rerun made {} calls", chat.calls() - calls))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} verdicts, kappa_F = {:.3}, {} survey questions, {calls} backend calls then 0 on rerun, {elapsed:.2?}",
        verdicts.len(),
        report.fleiss_kappa.unwrap(),
        views.len()
    ))
}

fn survey_math() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let models: Vec<String> = (1..=6).map(|i| format!("model-{i}")).collect();
    let mut key = AnswerKey::new();
    for q in 1..=30 {
        let mut order = models.clone();
        order.shuffle(&mut rng);
        key.insert(format!("q{q:02}"), order.into_iter().enumerate().map(|(i, m)| (format!("Rater #{}", i + 1), m)).collect());
    }
    let responses: Vec<SurveyResponse> = (0..500)
        .map(|i| SurveyResponse {
            respondent_id: format!("r{}", i / 30),
            question_id: format!("q{:02}", i % 30 + 1),
            chosen_label: format!("Rater #{}", 1 + (rng.random_range(0..12) % 6).min(rng.random_range(0..6))),
            rating_score_match: 4,
            rating_justification_fit: 4,
            rating_usefulness: 4,
            strengths: String::new(),
            weaknesses: String::new(),
            submitted_at: Utc.with_ymd_and_hms(2024, 6, 1, 0, 0, 0).unwrap(),
        })
        .collect();
    let m = agreement_matrix(&responses, &key, &models);

    let chosen: Vec<(usize, &str, &str)> =
        responses.iter().enumerate().map(|(i, r)| (i, r.question_id.as_str(), key[&r.question_id][&r.chosen_label].as_str())).collect();
    let mut brute = vec![vec![0.0; 6]; 6];
    for (i, mi) in models.iter().enumerate() {
        for (j, mj) in models.iter().enumerate() {
            brute[i][j] = if i == j {
                chosen.iter().filter(|(_, _, m)| m == mi).count() as f64
            } else {
                let mut pairs = 0usize;
                for a in &chosen {
                    for b in &chosen {
                        if a.0 != b.0 && a.1 == b.1 && a.2 == mi && b.2 == mj {
                            pairs += 1;
                        }
                    }
                }
                pairs as f64
            };
        }
    }
    ensure(m.raw == brute, || "raw co-selection matrix differs from the pairwise count".into())?;
    let mut worst = 0.0f64;
    for j in 0..6 {
        let col: f64 = (0..6).map(|i| m.normalized[i][j]).sum();
        worst = worst.max((col - 1.0).abs());
        for i in 0..6 {
            let expected = brute[i][j] / (0..6).map(|k| brute[k][j]).sum::<f64>();
            ensure((m.normalized[i][j] - expected).abs() < 1e-12, || format!("cell ({i},{j})"))?;
        }
    }
    ensure(worst <= 1e-9, || format!("column sum off by {worst}"))?;
    let prefs = aggregate_preferences(&responses, &key);
    let worst_row = prefs.values().map(|row| (row.values().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    ensure(prefs.len() == 30 && worst_row <= 1e-9, || format!("preference rows off by {worst_row}"))?;
    Ok(format!("500 responses, max column error {worst:.1e}, max row error {worst_row:.1e}"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("agreement oracles", agreement_oracles),
        ("formula checks", formula_checks),
        ("selection funnel and bins", selection_funnel),
        ("constrained-output totality", output_totality),
        ("bias-probe sanity", bias_probe_sanity),
        ("end-to-end fixture run", end_to_end),
        ("survey math", survey_math),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of {} primary criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
