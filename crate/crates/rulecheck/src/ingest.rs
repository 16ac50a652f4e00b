//! Mastodon REST crawling: instance metadata, rules and local timelines.

use std::path::Path;

use chrono::Utc;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use rulecheck_core::ingest::mastodon::{
    rules_from_dto, ExtendedDescription, InstanceV2, RuleDto, StatusDto, TimelineCrawl, EXTENDED_DESCRIPTION_PATH,
    INSTANCE_V2_PATH, RULES_PATH,
};
use rulecheck_core::ingest::{parse_seed_list, SeedError};
use rulecheck_core::{InstanceRecord, Post, Rule};

use crate::http::{HttpClient, HttpError};

pub const DEFAULT_BASE_URL: &str = "https://{domain}";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("{url}: malformed JSON: {message}")]
    Parse { url: String, message: String },
    #[error("{path}: {source}")]
    SeedFile { path: String, source: std::io::Error },
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error("max_posts must be at least 1")]
    ZeroMaxPosts,
}

pub fn load_seed_list(path: &Path) -> Result<Vec<String>, IngestError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| IngestError::SeedFile { path: path.display().to_string(), source })?;
    Ok(parse_seed_list(&text)?)
}

/// Result of one timeline crawl. A failed page ends the crawl early with
/// `error` set; `next_cursor` lets a later run continue from there.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrawlOutcome {
    pub domain: String,
    pub posts: Vec<Post>,
    pub pages: usize,
    pub next_cursor: Option<String>,
    pub complete: bool,
    pub error: Option<String>,
}

pub struct Crawler<'a> {
    http: &'a HttpClient,
    base_url: String,
}

impl<'a> Crawler<'a> {
    /// `base_url` may contain `{domain}`; otherwise the domain is appended
    /// as a path segment.
    pub fn new(http: &'a HttpClient, base_url: impl Into<String>) -> Self {
        Self { http, base_url: base_url.into() }
    }

    pub fn url(&self, domain: &str, path: &str) -> String {
        if self.base_url.contains("{domain}") {
            format!("{}{path}", self.base_url.replace("{domain}", domain))
        } else {
            format!("{}/{domain}{path}", self.base_url.trim_end_matches('/'))
        }
    }

    fn get_json<T: DeserializeOwned>(&self, domain: &str, path: &str) -> Result<T, IngestError> {
        let url = self.url(domain, path);
        let body = self.http.get(domain, &url)?;
        serde_json::from_str(&body).map_err(|e| IngestError::Parse { url, message: e.to_string() })
    }

    /// A missing v2 endpoint yields an `api_compatible = false` record.
    pub fn fetch_instance_info(&self, domain: &str) -> Result<InstanceRecord, IngestError> {
        let info: InstanceV2 = match self.get_json(domain, INSTANCE_V2_PATH) {
            Ok(info) => info,
            Err(IngestError::Http(e)) if e.status() == Some(404) => {
                return Ok(InstanceRecord::incompatible(domain, Utc::now()));
            }
            Err(e) => return Err(e),
        };
        let extended = match self.get_json::<ExtendedDescription>(domain, EXTENDED_DESCRIPTION_PATH) {
            Ok(ext) => Some(ext),
            Err(e) => {
                tracing::debug!(domain, error = %e, "no extended description");
                None
            }
        };
        Ok(info.into_record(domain, extended, Utc::now()))
    }

    pub fn fetch_rules(&self, domain: &str) -> Result<Vec<Rule>, IngestError> {
        let rules: Vec<RuleDto> = self.get_json(domain, RULES_PATH)?;
        Ok(rules_from_dto(rules))
    }

    /// Walks the local timeline below `cursor` until `max_posts` posts were
    /// collected or the timeline ran out.
    pub fn crawl_local_timeline(
        &self,
        domain: &str,
        max_posts: usize,
        cursor: Option<String>,
    ) -> Result<CrawlOutcome, IngestError> {
        let mut crawl = TimelineCrawl::resume(domain, max_posts, cursor).map_err(|_| IngestError::ZeroMaxPosts)?;
        let mut error = None;
        while let Some(path) = crawl.next_page_path() {
            match self.get_json::<Vec<StatusDto>>(domain, &path) {
                Ok(page) => {
                    crawl.accept_page(page);
                }
                Err(e) => {
                    tracing::warn!(domain, error = %e, "timeline crawl interrupted");
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        let complete = error.is_none();
        let next_cursor = crawl.cursor().map(String::from);
        let pages = crawl.pages();
        Ok(CrawlOutcome {
            domain: domain.to_ascii_lowercase(),
            posts: crawl.into_posts(),
            pages,
            next_cursor,
            complete,
            error,
        })
    }
}
