//! Wire shapes of the public server API and their conversion into records.
//!
//! Only the fields that are persisted are declared; account objects, media
//! attachments and every other field are dropped by the deserializer and
//! never reach a [`Post`].

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use chrono::{DateTime, Utc};
use serde::de::IgnoredAny;
use serde::Deserialize;

use super::{compare_post_ids, html_to_text, EngagementCounts, InstanceRecord, Post, Rule};

pub const INSTANCE_V2_PATH: &str = "/api/v2/instance";
pub const EXTENDED_DESCRIPTION_PATH: &str = "/api/v1/instance/extended_description";
pub const RULES_PATH: &str = "/api/v1/instance/rules";
pub const PUBLIC_TIMELINE_PATH: &str = "/api/v1/timelines/public";
/// Server-side maximum page size of the timeline endpoint.
pub const TIMELINE_PAGE_LIMIT: usize = 40;
pub const DEFAULT_MAX_POSTS: usize = 4000;

#[derive(Debug, Clone, Deserialize)]
pub struct InstanceV2 {
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub source_url: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub usage: Option<Usage>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub users: Option<UsageUsers>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct UsageUsers {
    #[serde(default)]
    pub active_month: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExtendedDescription {
    #[serde(default)]
    pub content: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RuleDto {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct StatusDto {
    pub id: String,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub content: String,
    #[serde(default)]
    pub language: Option<String>,
    #[serde(default)]
    pub sensitive: bool,
    #[serde(default)]
    pub spoiler_text: Option<String>,
    #[serde(default)]
    pub replies_count: u64,
    #[serde(default)]
    pub reblogs_count: u64,
    #[serde(default)]
    pub favourites_count: u64,
    #[serde(default)]
    pub reblog: Option<IgnoredAny>,
}

impl InstanceV2 {
    pub fn into_record(
        self,
        domain: &str,
        extended: Option<ExtendedDescription>,
        fetched_at: DateTime<Utc>,
    ) -> InstanceRecord {
        let extended_description = extended
            .and_then(|e| e.content)
            .map(|html| html_to_text(&html))
            .filter(|t| !t.trim().is_empty());
        let mut record = InstanceRecord {
            domain: domain.to_ascii_lowercase(),
            active_users: self
                .usage
                .and_then(|u| u.users)
                .and_then(|u| u.active_month)
                .unwrap_or(0),
            source_url: self.source_url.unwrap_or_default(),
            description: self.description.unwrap_or_default(),
            extended_description,
            rules: Vec::new(),
            api_compatible: true,
            verified: false,
            fetched_at,
        };
        record.refresh_verification();
        record
    }
}

/// Converts served rules, dropping blank entries and keeping server order.
pub fn rules_from_dto(rules: Vec<RuleDto>) -> Vec<Rule> {
    rules
        .into_iter()
        .filter_map(|r| Rule::new(r.id, html_to_text(&r.text)))
        .collect()
}

impl StatusDto {
    /// `None` for reposts, which are not local content.
    pub fn into_post(self, domain: &str) -> Option<Post> {
        if self.reblog.is_some() {
            return None;
        }
        let text = html_to_text(&self.content);
        let spoiler = self.spoiler_text.as_deref().map(html_to_text);
        Some(Post::from_plain_text(
            self.id,
            domain,
            self.created_at,
            &text,
            self.language,
            self.sensitive,
            spoiler.as_deref(),
            EngagementCounts {
                replies: self.replies_count,
                reblogs: self.reblogs_count,
                favorites: self.favourites_count,
            },
        ))
    }
}

/// Request path (with query) for one page of the local timeline.
pub fn timeline_page_path(cursor: Option<&str>) -> String {
    match cursor {
        Some(c) => format!("{PUBLIC_TIMELINE_PATH}?local=true&limit={TIMELINE_PAGE_LIMIT}&max_id={c}"),
        None => format!("{PUBLIC_TIMELINE_PATH}?local=true&limit={TIMELINE_PAGE_LIMIT}"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CrawlError {
    #[error("max_posts must be at least 1")]
    ZeroMaxPosts,
}

/// Cursor-driven pagination over a local timeline.
///
/// Posts are accepted only when their id is strictly below the last accepted
/// id, so the collected sequence is strictly descending and duplicate-free
/// even if the server repeats or reorders entries across pages.
#[derive(Debug, Clone)]
pub struct TimelineCrawl {
    domain: String,
    max_posts: usize,
    cursor: Option<String>,
    posts: Vec<Post>,
    seen: BTreeSet<String>,
    pages: usize,
    exhausted: bool,
}

impl TimelineCrawl {
    pub fn new(domain: &str, max_posts: usize) -> Result<Self, CrawlError> {
        Self::resume(domain, max_posts, None)
    }

    /// Continues below `cursor`; `max_posts` is the remaining budget.
    pub fn resume(domain: &str, max_posts: usize, cursor: Option<String>) -> Result<Self, CrawlError> {
        if max_posts == 0 {
            return Err(CrawlError::ZeroMaxPosts);
        }
        Ok(Self {
            domain: domain.to_ascii_lowercase(),
            max_posts,
            cursor,
            posts: Vec::new(),
            seen: BTreeSet::new(),
            pages: 0,
            exhausted: false,
        })
    }

    pub fn is_done(&self) -> bool {
        self.exhausted || self.posts.len() >= self.max_posts
    }

    /// Path of the next page, or `None` once the budget is met or the
    /// timeline ran dry.
    pub fn next_page_path(&self) -> Option<String> {
        if self.is_done() {
            None
        } else {
            Some(timeline_page_path(self.cursor.as_deref()))
        }
    }

    /// Feeds one served page; returns the number of posts accepted.
    pub fn accept_page(&mut self, page: Vec<StatusDto>) -> usize {
        self.pages += 1;
        let Some(last) = page.last() else {
            self.exhausted = true;
            return 0;
        };
        let page_floor = last.id.clone();
        let mut accepted = 0;
        for status in page {
            if self.posts.len() >= self.max_posts {
                break;
            }
            let below_floor = match (&self.cursor, self.posts.last()) {
                (_, Some(prev)) => compare_post_ids(&status.id, &prev.post_id) == Ordering::Less,
                (Some(c), None) => compare_post_ids(&status.id, c) == Ordering::Less,
                (None, None) => true,
            };
            if !below_floor || self.seen.contains(&status.id) {
                continue;
            }
            self.seen.insert(status.id.clone());
            if let Some(post) = status.into_post(&self.domain) {
                self.posts.push(post);
                accepted += 1;
            }
        }
        let advanced = self
            .cursor
            .as_deref()
            .is_none_or(|c| compare_post_ids(&page_floor, c) == Ordering::Less);
        if advanced {
            self.cursor = Some(page_floor);
        } else {
            self.exhausted = true;
        }
        accepted
    }

    pub fn cursor(&self) -> Option<&str> {
        self.cursor.as_deref()
    }

    pub fn pages(&self) -> usize {
        self.pages
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn into_posts(self) -> Vec<Post> {
        self.posts
    }
}
