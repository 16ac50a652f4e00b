//! The staged pipeline. Every stage reads and writes files in the output
//! directory only, so stages can be re-run independently.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rulecheck_core::analytics::{average_scores, build_report, BinSpec, Embedder, Normalizer, ReportInput};
use rulecheck_core::corpus::{filter_english, select_posts, selected_posts, SelectedPost};
use rulecheck_core::ingest::throttle::{RateLimit, RetryPolicy};
use rulecheck_core::moderator::{build_prompt, ChatBackend, ModerationError, PromptBundle, DEFAULT_TEMPLATE};
use rulecheck_core::survey::{build_survey, sample_survey_posts, survey_report, AnswerKey, QuestionView, SurveyResponse};
use rulecheck_core::{InstanceRecord, ModelConfig, ModerationVerdict, Post, Rule, SelectionConfig, SelectionReport};

use crate::clock::Clock;
use crate::embed::{CachedEmbedder, HttpEmbedder};
use crate::error::{Error, Result};
use crate::http::{HttpClient, HttpSettings, DEFAULT_USER_AGENT};
use crate::ingest::{load_seed_list, CrawlOutcome, Crawler, DEFAULT_BASE_URL};
use crate::jsonl::{append_jsonl, read_json, read_jsonl, read_jsonl_or_empty, write_json, write_jsonl};
use crate::language::default_detectors;
use crate::llm::{run_jobs, Job};

pub mod files {
    pub const INSTANCES: &str = "instances.jsonl";
    pub const RULES: &str = "rules.jsonl";
    pub const POSTS: &str = "posts.jsonl";
    pub const CRAWL_STATUS: &str = "crawl_status.jsonl";
    pub const ENGLISH_INSTANCES: &str = "english_instances.jsonl";
    pub const ENGLISH_POSTS: &str = "english_posts.jsonl";
    pub const FILTER_STATS: &str = "filter_stats.json";
    pub const SELECTED: &str = "selected.jsonl";
    pub const SELECTION_REPORT: &str = "selection_report.jsonl";
    pub const VERDICTS: &str = "verdicts.jsonl";
    pub const MODERATION_FAILURES: &str = "moderation_failures.jsonl";
    pub const ANALYTICS_REPORT: &str = "analytics_report.json";
    pub const SURVEY: &str = "survey.json";
    pub const ANSWER_KEY: &str = "answer_key.json";
    pub const RESPONSES: &str = "responses.jsonl";
    pub const SURVEY_REPORT: &str = "survey_report.json";
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed_list: PathBuf,
    pub output_dir: PathBuf,
    /// Instance base URL; `{domain}` is substituted.
    pub base_url: String,
    pub user_agent: String,
    pub rate_limit: RateLimit,
    pub retry: RetryPolicy,
    pub request_timeout_secs: u64,
    pub max_posts: usize,
    pub max_concurrent_hosts: usize,
    pub selection: SelectionConfig,
    pub panel: Vec<ModelConfig>,
    pub max_concurrent_per_endpoint: usize,
    pub prompt_template: Option<PathBuf>,
    pub embedder_url: Option<String>,
    pub bins: BinSpec,
    pub survey_seed: u64,
    pub survey_per_bin: usize,
    pub survey_excluded: Vec<String>,
    pub operator_token: Option<String>,
    pub listen: String,
    pub cors_origins: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed_list: PathBuf::from("seeds.txt"),
            output_dir: PathBuf::from("data"),
            base_url: DEFAULT_BASE_URL.to_string(),
            user_agent: DEFAULT_USER_AGENT.to_string(),
            rate_limit: RateLimit::default(),
            retry: RetryPolicy::default(),
            request_timeout_secs: 60,
            max_posts: rulecheck_core::ingest::mastodon::DEFAULT_MAX_POSTS,
            max_concurrent_hosts: 8,
            selection: SelectionConfig::default(),
            panel: Vec::new(),
            max_concurrent_per_endpoint: 4,
            prompt_template: None,
            embedder_url: None,
            bins: BinSpec::default(),
            survey_seed: 0,
            survey_per_bin: rulecheck_core::survey::DEFAULT_PER_BIN,
            survey_excluded: Vec::new(),
            operator_token: None,
            listen: "127.0.0.1:8080".to_string(),
            cors_origins: Vec::new(),
        }
    }
}

/// Rule row as persisted in `rules.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleRow {
    pub instance: String,
    #[serde(flatten)]
    pub rule: Rule,
}

/// Latest crawl state of one instance in `crawl_status.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrawlStatus {
    pub domain: String,
    pub posts: usize,
    pub pages: usize,
    pub next_cursor: Option<String>,
    pub complete: bool,
    pub error: Option<String>,
}

/// A pair the panel could not score, kept for manual review.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModerationFailure {
    pub post_id: String,
    pub model_id: String,
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_reply: Option<String>,
}

pub struct Pipeline {
    pub config: PipelineConfig,
    clock: Arc<dyn Clock>,
}

fn require(stage: &'static str, path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingInput { stage, path })
    }
}

fn rules_map(instances: &[InstanceRecord]) -> BTreeMap<String, Vec<Rule>> {
    instances.iter().map(|i| (i.domain.clone(), i.rules.clone())).collect()
}

fn parallel_each<T: Sync, F: Fn(&T) + Sync>(items: &[T], workers: usize, f: F) {
    let queue = Mutex::new((0..items.len()).collect::<VecDeque<_>>());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let Some(i) = queue.lock().unwrap().pop_front() else { break };
                f(&items[i]);
            });
        }
    });
}

type Corpus = (Vec<SelectedPost>, BTreeMap<String, Vec<Rule>>);

impl Pipeline {
    pub fn new(config: PipelineConfig, clock: Arc<dyn Clock>) -> Self {
        Self { config, clock }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    fn ensure_output_dir(&self) -> Result<()> {
        std::fs::create_dir_all(&self.config.output_dir).map_err(|e| Error::io(&self.config.output_dir, e))
    }

    fn http(&self) -> Result<HttpClient> {
        let settings = HttpSettings {
            rate_limit: self.config.rate_limit,
            retry: self.config.retry,
            user_agent: self.config.user_agent.clone(),
            timeout: Duration::from_secs(self.config.request_timeout_secs),
        };
        Ok(HttpClient::new(&settings, self.clock.clone())?)
    }

    /// Fetches metadata for every seed and rules for verified instances.
    pub fn discover(&self) -> Result<Value> {
        self.ensure_output_dir()?;
        let seeds = load_seed_list(&self.config.seed_list).map_err(|e| Error::stage("discover", e))?;
        let http = self.http()?;
        let crawler = Crawler::new(&http, self.config.base_url.clone());
        let results: Mutex<BTreeMap<usize, std::result::Result<InstanceRecord, String>>> = Mutex::new(BTreeMap::new());
        let indexed: Vec<(usize, &String)> = seeds.iter().enumerate().collect();
        parallel_each(&indexed, self.config.max_concurrent_hosts, |(i, domain)| {
            let result = crawler.fetch_instance_info(domain).and_then(|mut record| {
                if record.verified {
                    record.rules = crawler.fetch_rules(domain)?;
                }
                Ok(record)
            });
            if let Err(e) = &result {
                tracing::warn!(%domain, error = %e, "discovery failed");
            }
            results.lock().unwrap().insert(*i, result.map_err(|e| e.to_string()));
        });
        let mut records = Vec::new();
        let mut failed = Vec::new();
        for (i, result) in results.into_inner().unwrap() {
            match result {
                Ok(r) => records.push(r),
                Err(e) => failed.push(json!({ "domain": seeds[i], "error": e })),
            }
        }
        let rule_rows: Vec<RuleRow> = records
            .iter()
            .filter(|r| r.verified)
            .flat_map(|r| r.rules.iter().map(|rule| RuleRow { instance: r.domain.clone(), rule: rule.clone() }))
            .collect();
        write_jsonl(&self.path(files::INSTANCES), &records)?;
        write_jsonl(&self.path(files::RULES), &rule_rows)?;
        Ok(json!({
            "stage": "discover",
            "seeds": seeds.len(),
            "instances": records.len(),
            "api_compatible": records.iter().filter(|r| r.api_compatible).count(),
            "verified": records.iter().filter(|r| r.verified).count(),
            "rules": rule_rows.len(),
            "failed": failed,
        }))
    }

    /// Crawls local timelines of verified instances. Complete crawls are
    /// skipped; interrupted ones continue below their saved cursor.
    pub fn crawl(&self) -> Result<Value> {
        let instances: Vec<InstanceRecord> = read_jsonl(&require("crawl", self.path(files::INSTANCES))?)?;
        let posts_path = self.path(files::POSTS);
        let status_path = self.path(files::CRAWL_STATUS);
        let mut status: BTreeMap<String, CrawlStatus> = BTreeMap::new();
        for s in read_jsonl_or_empty::<CrawlStatus>(&status_path)? {
            status.insert(s.domain.clone(), s);
        }
        let existing: Vec<Post> = read_jsonl_or_empty(&posts_path)?;
        let mut have: BTreeMap<String, usize> = BTreeMap::new();
        for p in &existing {
            *have.entry(p.instance.clone()).or_default() += 1;
        }
        let todo: Vec<(&str, usize, Option<String>)> = instances
            .iter()
            .filter(|i| i.verified)
            .filter(|i| !status.get(&i.domain).is_some_and(|s| s.complete))
            .filter_map(|i| {
                let got = have.get(&i.domain).copied().unwrap_or(0);
                let cursor = status.get(&i.domain).and_then(|s| s.next_cursor.clone());
                let budget = self.config.max_posts.saturating_sub(got);
                (budget > 0).then_some((i.domain.as_str(), budget, cursor))
            })
            .collect();
        let skipped = instances.iter().filter(|i| i.verified).count() - todo.len();

        let http = self.http()?;
        let crawler = Crawler::new(&http, self.config.base_url.clone());
        let sink = Mutex::new((Vec::<CrawlStatus>::new(), Vec::<Error>::new()));
        parallel_each(&todo, self.config.max_concurrent_hosts, |(domain, budget, cursor)| {
            let outcome = crawler.crawl_local_timeline(domain, *budget, cursor.clone());
            let mut sink = sink.lock().unwrap();
            let outcome = match outcome {
                Ok(o) => o,
                Err(e) => CrawlOutcome {
                    domain: domain.to_string(),
                    posts: Vec::new(),
                    pages: 0,
                    next_cursor: cursor.clone(),
                    complete: false,
                    error: Some(e.to_string()),
                },
            };
            let prev = have.get(*domain).copied().unwrap_or(0);
            let line = CrawlStatus {
                domain: outcome.domain.clone(),
                posts: prev + outcome.posts.len(),
                pages: outcome.pages,
                next_cursor: outcome.next_cursor.clone(),
                complete: outcome.complete,
                error: outcome.error.clone(),
            };
            let write = append_jsonl(&posts_path, &outcome.posts).and_then(|_| append_jsonl(&status_path, [&line]));
            match write {
                Ok(()) => sink.0.push(line),
                Err(e) => sink.1.push(e),
            }
        });
        let (lines, mut errors) = sink.into_inner().unwrap();
        if let Some(e) = errors.pop() {
            return Err(e);
        }
        for line in &lines {
            status.insert(line.domain.clone(), line.clone());
        }

        let order: BTreeMap<&str, usize> = instances.iter().enumerate().map(|(i, r)| (r.domain.as_str(), i)).collect();
        let mut posts: Vec<Post> = read_jsonl_or_empty(&posts_path)?;
        let mut seen = HashSet::new();
        posts.retain(|p| seen.insert((p.instance.clone(), p.post_id.clone())));
        posts.sort_by(|a, b| {
            order
                .get(a.instance.as_str())
                .cmp(&order.get(b.instance.as_str()))
                .then_with(|| rulecheck_core::ingest::compare_post_ids(&b.post_id, &a.post_id))
        });
        write_jsonl(&posts_path, &posts)?;
        let mut statuses: Vec<&CrawlStatus> = status.values().collect();
        statuses.sort_by_key(|s| order.get(s.domain.as_str()));
        write_jsonl(&status_path, statuses)?;
        Ok(json!({
            "stage": "crawl",
            "crawled": lines.len(),
            "skipped_complete": skipped,
            "incomplete": lines.iter().filter(|l| !l.complete).map(|l| &l.domain).collect::<Vec<_>>(),
            "posts": posts.len(),
        }))
    }

    /// Keeps English instances and posts.
    pub fn filter(&self) -> Result<Value> {
        let instances: Vec<InstanceRecord> = read_jsonl(&require("filter", self.path(files::INSTANCES))?)?;
        let posts: Vec<Post> = read_jsonl(&require("filter", self.path(files::POSTS))?)?;
        let verified: Vec<InstanceRecord> = instances.into_iter().filter(|i| i.verified).collect();
        let target = self.config.selection.target_language.clone();
        let (kept, kept_posts, stats) =
            filter_english(verified, posts, &default_detectors(), &target).map_err(|e| Error::stage("filter", e))?;
        write_jsonl(&self.path(files::ENGLISH_INSTANCES), &kept)?;
        write_jsonl(&self.path(files::ENGLISH_POSTS), &kept_posts)?;
        write_json(&self.path(files::FILTER_STATS), &stats)?;
        Ok(json!({ "stage": "filter", "stats": stats }))
    }

    pub fn select(&self) -> Result<Value> {
        let posts: Vec<Post> = read_jsonl(&require("select", self.path(files::ENGLISH_POSTS))?)?;
        let mut by_instance: BTreeMap<String, Vec<Post>> = BTreeMap::new();
        for p in posts {
            by_instance.entry(p.instance.clone()).or_default().push(p);
        }
        let reports: Vec<SelectionReport> = select_posts(&by_instance, &self.config.selection);
        let selected = selected_posts(&reports, &by_instance);
        write_jsonl(&self.path(files::SELECTED), &selected)?;
        write_jsonl(&self.path(files::SELECTION_REPORT), &reports)?;
        Ok(json!({
            "stage": "select",
            "instances": reports.len(),
            "selected": selected.len(),
        }))
    }

    fn template(&self) -> Result<String> {
        match &self.config.prompt_template {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e)),
            None => Ok(DEFAULT_TEMPLATE.to_string()),
        }
    }

    fn load_corpus(&self, stage: &'static str) -> Result<Corpus> {
        let selected: Vec<SelectedPost> = read_jsonl(&require(stage, self.path(files::SELECTED))?)?;
        let instances: Vec<InstanceRecord> = read_jsonl(&require(stage, self.path(files::ENGLISH_INSTANCES))?)?;
        Ok((selected, rules_map(&instances)))
    }

    /// Scores every selected post with every panel model, skipping pairs
    /// that already have a verdict.
    pub fn moderate<B: ChatBackend + ?Sized>(&self, backend: &B) -> Result<Value> {
        let (selected, rules) = self.load_corpus("moderate")?;
        if self.config.panel.is_empty() {
            return Err(Error::Config("the moderation panel is empty".into()));
        }
        for m in &self.config.panel {
            m.validate().map_err(|e| Error::Config(format!("{}: {e}", m.model_id)))?;
        }
        let template = self.template()?;
        let verdicts_path = self.path(files::VERDICTS);
        let existing: Vec<ModerationVerdict> = read_jsonl_or_empty(&verdicts_path)?;
        let done: HashSet<(String, String)> =
            existing.iter().map(|v| (v.post_id.clone(), v.model_id.clone())).collect();

        let mut bundles: Vec<PromptBundle> = Vec::new();
        let mut pending: Vec<Vec<&ModelConfig>> = Vec::new();
        for sp in &selected {
            let models: Vec<&ModelConfig> = self
                .config
                .panel
                .iter()
                .filter(|m| !done.contains(&(sp.post.post_id.clone(), m.model_id.clone())))
                .collect();
            if models.is_empty() {
                continue;
            }
            let post_rules = rules.get(&sp.post.instance).map(Vec::as_slice).unwrap_or(&[]);
            let bundle = build_prompt(post_rules, &sp.post, &template).map_err(|e| Error::Config(e.to_string()))?;
            bundles.push(bundle);
            pending.push(models);
        }
        let jobs: Vec<Job<'_>> = bundles
            .iter()
            .zip(&pending)
            .flat_map(|(bundle, models)| models.iter().map(move |model| Job { bundle, model }))
            .collect();

        let write_error: Mutex<Option<Error>> = Mutex::new(None);
        let append_lock = Mutex::new(());
        let results = run_jobs(&jobs, backend, self.config.max_concurrent_per_endpoint, |_, result| {
            if let Ok(v) = result {
                let _guard = append_lock.lock().unwrap();
                if let Err(e) = append_jsonl(&verdicts_path, [v]) {
                    *write_error.lock().unwrap() = Some(e);
                }
            }
        });
        if let Some(e) = write_error.into_inner().unwrap() {
            return Err(e);
        }

        let mut failures = Vec::new();
        let mut all = existing;
        for (job, result) in jobs.iter().zip(results) {
            match result {
                Ok(v) => all.push(v),
                Err(e) => {
                    tracing::warn!(post = %job.bundle.post_id, model = %job.model.model_id, error = %e, "no verdict");
                    let last_reply = match &e {
                        ModerationError::Unparseable { last_reply, .. } => Some(last_reply.clone()),
                        _ => None,
                    };
                    failures.push(ModerationFailure {
                        post_id: job.bundle.post_id.clone(),
                        model_id: job.model.model_id.clone(),
                        error: e.to_string(),
                        last_reply,
                    });
                }
            }
        }
        let post_rank: BTreeMap<&str, usize> =
            selected.iter().enumerate().map(|(i, s)| (s.post.post_id.as_str(), i)).collect();
        let model_rank: BTreeMap<&str, usize> =
            self.config.panel.iter().enumerate().map(|(i, m)| (m.model_id.as_str(), i)).collect();
        all.sort_by_key(|v| {
            (
                post_rank.get(v.post_id.as_str()).copied().unwrap_or(usize::MAX),
                model_rank.get(v.model_id.as_str()).copied().unwrap_or(usize::MAX),
                v.model_id.clone(),
            )
        });
        let mut seen = HashSet::new();
        all.retain(|v| seen.insert((v.post_id.clone(), v.model_id.clone())));
        write_jsonl(&verdicts_path, &all)?;
        write_jsonl(&self.path(files::MODERATION_FAILURES), &failures)?;
        Ok(json!({
            "stage": "moderate",
            "requested": jobs.len(),
            "new_verdicts": jobs.len() - failures.len(),
            "skipped_existing": done.len(),
            "failures": failures.len(),
            "verdicts": all.len(),
        }))
    }

    fn panel_ids(&self, verdicts: &[ModerationVerdict]) -> Vec<String> {
        if self.config.panel.is_empty() {
            let set: BTreeSet<&str> = verdicts.iter().map(|v| v.model_id.as_str()).collect();
            set.into_iter().map(String::from).collect()
        } else {
            self.config.panel.iter().map(|m| m.model_id.clone()).collect()
        }
    }

    /// Uses the configured embedder when there is one.
    pub fn analyze(&self) -> Result<Value> {
        let embedder = match &self.config.embedder_url {
            Some(url) => Some(CachedEmbedder::new(
                HttpEmbedder::new(url, Duration::from_secs(self.config.request_timeout_secs))
                    .map_err(|e| Error::stage("analyze", e))?,
            )),
            None => None,
        };
        self.analyze_with(embedder.as_ref().map(|e| e as &dyn Embedder))
    }

    pub fn analyze_with(&self, embedder: Option<&dyn Embedder>) -> Result<Value> {
        let verdicts: Vec<ModerationVerdict> = read_jsonl(&require("analyze", self.path(files::VERDICTS))?)?;
        let (selected, rules) = self.load_corpus("analyze")?;
        let posts: Vec<Post> = selected.into_iter().map(|s| s.post).collect();
        let models = self.panel_ids(&verdicts);
        let input = ReportInput { models: &models, verdicts: &verdicts, posts: &posts, rules_by_instance: &rules };
        let report = build_report(&input, &Normalizer::default(), embedder, &self.config.bins)
            .map_err(|e| Error::stage("analyze", e))?;
        write_json(&self.path(files::ANALYTICS_REPORT), &report)?;
        Ok(json!({
            "stage": "analyze",
            "verdicts": report.verdicts,
            "posts_rated": report.posts_rated,
            "fleiss_kappa": report.fleiss_kappa,
            "semantic_similarity": report.semantic_similarity.is_some(),
        }))
    }

    /// Samples posts across score bins and writes the questions and the
    /// server-side answer key.
    pub fn survey_build(&self) -> Result<Value> {
        let verdicts: Vec<ModerationVerdict> = read_jsonl(&require("survey-build", self.path(files::VERDICTS))?)?;
        let (selected, rules) = self.load_corpus("survey-build")?;
        let posts: BTreeMap<String, Post> = selected.into_iter().map(|s| (s.post.post_id.clone(), s.post)).collect();
        let averages = average_scores(&verdicts);
        let excluded: BTreeSet<String> = self.config.survey_excluded.iter().cloned().collect();
        let ids = sample_survey_posts(&averages, &self.config.bins, self.config.survey_per_bin, &excluded, self.config.survey_seed)
            .map_err(|e| Error::stage("survey-build", e))?;
        let (views, key) =
            build_survey(&ids, &posts, &rules, &verdicts, self.config.survey_seed).map_err(|e| Error::stage("survey-build", e))?;
        write_json(&self.path(files::SURVEY), &views)?;
        write_json(&self.path(files::ANSWER_KEY), &key)?;
        Ok(json!({ "stage": "survey-build", "questions": views.len() }))
    }

    /// Recomputes `survey_report.json` from the response log.
    pub fn survey_report(&self) -> Result<Value> {
        let key: AnswerKey = read_json(&require("survey-report", self.path(files::ANSWER_KEY))?)?;
        let responses: Vec<SurveyResponse> = read_jsonl_or_empty(&self.path(files::RESPONSES))?;
        let report = write_survey_report(&self.path(files::SURVEY_REPORT), &responses, &key, self.panel_models())?;
        Ok(json!({ "stage": "survey-report", "responses": report.responses, "respondents": report.respondents }))
    }

    pub fn panel_models(&self) -> Option<Vec<String>> {
        (!self.config.panel.is_empty()).then(|| self.config.panel.iter().map(|m| m.model_id.clone()).collect())
    }

    pub fn load_survey(&self) -> Result<(Vec<QuestionView>, AnswerKey)> {
        let views = read_json(&require("serve", self.path(files::SURVEY))?)?;
        let key = read_json(&require("serve", self.path(files::ANSWER_KEY))?)?;
        Ok((views, key))
    }
}

pub fn write_survey_report(
    path: &Path,
    responses: &[SurveyResponse],
    key: &AnswerKey,
    models: Option<Vec<String>>,
) -> Result<rulecheck_core::survey::SurveyReport> {
    let report = survey_report(responses, key, models.as_deref());
    write_json(path, &report)?;
    Ok(report)
}
