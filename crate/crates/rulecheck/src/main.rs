use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use serde_json::Value;

use rulecheck::api::{router, serve_forever, SurveyService};
use rulecheck::clock::SystemClock;
use rulecheck::jsonl::read_json;
use rulecheck::llm::HttpChatBackend;
use rulecheck::{Error, Pipeline, PipelineConfig, Result};
use rulecheck_core::ingest::throttle::RateLimit;

#[derive(Parser)]
#[command(name = "rulecheck", version, about = "Check social-media posts against their server's rules with an LLM panel")]
struct Cli {
    /// JSON pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed_list: Option<PathBuf>,
    /// Instance base URL, `{domain}` is substituted.
    #[arg(long, global = true)]
    base_url: Option<String>,
    #[arg(long, global = true)]
    requests_per_second: Option<f64>,
    #[arg(long, global = true)]
    max_posts: Option<usize>,
    /// Replaces the endpoint of every panel model.
    #[arg(long, global = true)]
    chat_endpoint: Option<String>,
    #[arg(long, global = true)]
    embedder_url: Option<String>,
    #[arg(long, global = true)]
    survey_seed: Option<u64>,
    #[arg(long, global = true, env = "RULECHECK_OPERATOR_TOKEN", hide_env_values = true)]
    operator_token: Option<String>,
    #[arg(long, global = true)]
    listen: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch instance metadata and rules for the seed list.
    Discover,
    /// Crawl local timelines of verified instances.
    Crawl,
    /// Keep English instances and posts.
    Filter,
    /// Engagement-based post selection.
    Select,
    /// Score selected posts with every panel model.
    Moderate,
    /// Agreement, similarity, bias and distribution statistics.
    Analyze,
    /// Sample posts and write the survey questions.
    SurveyBuild,
    /// Run the survey and report service.
    Serve,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = match &cli.config {
        Some(path) => read_json(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &cli.output_dir {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = &cli.seed_list {
        cfg.seed_list = v.clone();
    }
    if let Some(v) = &cli.base_url {
        cfg.base_url = v.clone();
    }
    if let Some(v) = cli.requests_per_second {
        cfg.rate_limit = RateLimit { requests_per_second: v };
    }
    if let Some(v) = cli.max_posts {
        cfg.max_posts = v;
    }
    if let Some(v) = &cli.chat_endpoint {
        for m in &mut cfg.panel {
            m.endpoint_url = v.clone();
        }
    }
    if let Some(v) = &cli.embedder_url {
        cfg.embedder_url = Some(v.clone());
    }
    if let Some(v) = cli.survey_seed {
        cfg.survey_seed = v;
    }
    if let Some(v) = &cli.operator_token {
        cfg.operator_token = Some(v.clone());
    }
    if let Some(v) = &cli.listen {
        cfg.listen = v.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Value> {
    let cfg = load_config(&cli)?;
    let pipeline = Pipeline::new(cfg, Arc::new(SystemClock::default()));
    match cli.command {
        Command::Discover => pipeline.discover(),
        Command::Crawl => pipeline.crawl(),
        Command::Filter => pipeline.filter(),
        Command::Select => pipeline.select(),
        Command::Moderate => {
            let backend = HttpChatBackend::new(Duration::from_secs(pipeline.config.request_timeout_secs))
                .map_err(|e| Error::stage("moderate", e))?;
            pipeline.moderate(&backend)
        }
        Command::Analyze => pipeline.analyze(),
        Command::SurveyBuild => pipeline.survey_build(),
        Command::Serve => {
            let (questions, key) = pipeline.load_survey()?;
            let cfg = &pipeline.config;
            let addr: SocketAddr =
                cfg.listen.parse().map_err(|e| Error::Config(format!("listen address {:?}: {e}", cfg.listen)))?;
            if cfg.operator_token.is_none() {
                tracing::warn!("no operator token configured; report endpoints will refuse every request");
            }
            let service =
                SurveyService::open(&cfg.output_dir, questions, key, pipeline.panel_models(), cfg.operator_token.clone())?;
            serve_forever(router(Arc::new(service), &cfg.cors_origins), addr)?;
            Ok(serde_json::json!({ "stage": "serve", "status": "stopped" }))
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{}", serde_json::json!({ "status": "ok", "summary": summary }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            tracing::error!("{e}");
            println!("{}", serde_json::to_string(&e.summary()).expect("summary serializes"));
            ExitCode::FAILURE
        }
    }
}
