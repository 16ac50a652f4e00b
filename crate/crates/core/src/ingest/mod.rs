//! Server and post records plus the pure parts of crawling: seed parsing,
//! verification, PII scrubbing, HTML reduction, timeline pagination and
//! per-host request pacing.

mod html;
pub mod mastodon;
mod scrub;
pub mod throttle;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use html::html_to_text;
pub use scrub::{scrub_pii, EMAIL_PLACEHOLDER, MENTION_PLACEHOLDER, URL_PLACEHOLDER};

/// Repository URL announced by the official server software.
pub const OFFICIAL_SOURCE_URL: &str = "https://github.com/mastodon/mastodon";

/// Owner plus at least one other active account.
pub const MIN_ACTIVE_USERS: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub rule_id: String,
    pub text: String,
    pub word_count: u32,
}

impl Rule {
    /// Returns `None` for blank rule text.
    pub fn new(rule_id: impl Into<String>, text: impl Into<String>) -> Option<Self> {
        let text = text.into().trim().to_string();
        let word_count = text.split_whitespace().count() as u32;
        if word_count == 0 {
            return None;
        }
        Some(Self {
            rule_id: rule_id.into(),
            text,
            word_count,
        })
    }
}

/// Total number of words across a rule set.
pub fn rule_set_word_count(rules: &[Rule]) -> u64 {
    rules.iter().map(|r| u64::from(r.word_count)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub domain: String,
    pub active_users: u64,
    pub source_url: String,
    pub description: String,
    #[serde(default)]
    pub extended_description: Option<String>,
    #[serde(default)]
    pub rules: Vec<Rule>,
    pub api_compatible: bool,
    #[serde(default)]
    pub verified: bool,
    pub fetched_at: DateTime<Utc>,
}

impl InstanceRecord {
    /// Record for a server that does not serve the v2 instance endpoint.
    pub fn incompatible(domain: &str, fetched_at: DateTime<Utc>) -> Self {
        Self {
            domain: domain.to_ascii_lowercase(),
            active_users: 0,
            source_url: String::new(),
            description: String::new(),
            extended_description: None,
            rules: Vec::new(),
            api_compatible: false,
            verified: false,
            fetched_at,
        }
    }

    /// Recomputes `verified` from the other fields.
    pub fn refresh_verification(&mut self) {
        self.verified = is_verified(self);
    }

    /// Description and extended description joined for language detection.
    pub fn profile_text(&self) -> String {
        match &self.extended_description {
            Some(ext) if !ext.trim().is_empty() => {
                let mut s = self.description.clone();
                s.push('\n');
                s.push_str(ext);
                s
            }
            _ => self.description.clone(),
        }
    }
}

/// Official software, current API and more than one active account.
pub fn is_verified(record: &InstanceRecord) -> bool {
    record.api_compatible
        && is_official_source(&record.source_url)
        && record.active_users >= MIN_ACTIVE_USERS
}

pub fn is_official_source(source_url: &str) -> bool {
    source_url.trim().trim_end_matches('/') == OFFICIAL_SOURCE_URL
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagementCounts {
    pub replies: u64,
    pub reblogs: u64,
    pub favorites: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub instance: String,
    pub created_at: DateTime<Utc>,
    pub content: String,
    #[serde(default)]
    pub declared_language: Option<String>,
    pub sensitive: bool,
    #[serde(default)]
    pub spoiler_text: Option<String>,
    pub engagement: EngagementCounts,
    pub char_count: u64,
}

impl Post {
    /// Builds a post from already-reduced text, applying PII scrubbing and
    /// restoring the field invariants.
    #[allow(clippy::too_many_arguments)]
    pub fn from_plain_text(
        post_id: impl Into<String>,
        instance: &str,
        created_at: DateTime<Utc>,
        text: &str,
        declared_language: Option<String>,
        sensitive: bool,
        spoiler: Option<&str>,
        engagement: EngagementCounts,
    ) -> Self {
        let content = scrub_pii(text);
        let spoiler_text = spoiler
            .map(|s| scrub_pii(s.trim()))
            .filter(|s| !s.is_empty());
        let char_count = content.chars().count() as u64;
        Self {
            post_id: post_id.into(),
            instance: instance.to_ascii_lowercase(),
            created_at,
            content,
            declared_language: declared_language.filter(|l| !l.is_empty()),
            sensitive: sensitive || spoiler_text.is_some(),
            spoiler_text,
            engagement,
            char_count,
        }
    }
}

/// Orders server-assigned numeric ids (snowflakes) numerically, falling back
/// to byte order for non-numeric ids.
pub fn compare_post_ids(a: &str, b: &str) -> Ordering {
    let numeric = |s: &str| !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit());
    if numeric(a) && numeric(b) {
        let a = a.trim_start_matches('0');
        let b = b.trim_start_matches('0');
        a.len().cmp(&b.len()).then_with(|| a.cmp(b))
    } else {
        a.cmp(b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeedError {
    #[error("seed list contains no domains")]
    Empty,
}

/// Parses a seed list: one domain per line, `#` comments, blank lines
/// ignored. Domains are lowercased and deduplicated in first-seen order.
pub fn parse_seed_list(source: &str) -> Result<Vec<String>, SeedError> {
    let mut out: Vec<String> = Vec::new();
    for line in source.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let domain = line.to_ascii_lowercase();
        if !out.contains(&domain) {
            out.push(domain);
        }
    }
    if out.is_empty() {
        Err(SeedError::Empty)
    } else {
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn record(source: &str, users: u64, compatible: bool) -> InstanceRecord {
        InstanceRecord {
            domain: "a.example".into(),
            active_users: users,
            source_url: source.into(),
            description: String::new(),
            extended_description: None,
            rules: vec![],
            api_compatible: compatible,
            verified: false,
            fetched_at: DateTime::<Utc>::UNIX_EPOCH,
        }
    }

    #[test]
    fn seed_list_dedups_and_lowercases() {
        let seeds = parse_seed_list("A.example\na.example\nb.example\n").unwrap();
        assert_eq!(seeds, vec!["a.example", "b.example"]);
    }

    #[test]
    fn seed_list_skips_comments() {
        let seeds = parse_seed_list("# comment\nmastodon.social\n").unwrap();
        assert_eq!(seeds, vec!["mastodon.social"]);
    }

    #[test]
    fn empty_seed_list_is_an_error() {
        assert_eq!(parse_seed_list(""), Err(SeedError::Empty));
        assert_eq!(parse_seed_list("# only\n\n"), Err(SeedError::Empty));
    }

    #[test]
    fn verification_requires_all_three_conditions() {
        assert!(is_verified(&record(OFFICIAL_SOURCE_URL, 120, true)));
        assert!(is_verified(&record("https://github.com/mastodon/mastodon/", 2, true)));
        assert!(!is_verified(&record("https://github.com/glitch-soc/mastodon", 120, true)));
        assert!(!is_verified(&record(OFFICIAL_SOURCE_URL, 1, true)));
        assert!(!is_verified(&record(OFFICIAL_SOURCE_URL, 120, false)));
    }

    #[test]
    fn rule_word_count_matches_whitespace_tokens() {
        let rule = Rule::new("1", "  Be   excellent\tto each other ").unwrap();
        assert_eq!(rule.word_count, 5);
        assert_eq!(rule.text, "Be   excellent\tto each other");
        assert!(Rule::new("2", "   ").is_none());
    }

    #[test]
    fn post_ids_compare_numerically() {
        assert_eq!(compare_post_ids("99", "100"), Ordering::Less);
        assert_eq!(compare_post_ids("112233", "112233"), Ordering::Equal);
        assert_eq!(compare_post_ids("b", "a"), Ordering::Greater);
    }

    #[test]
    fn spoiler_implies_sensitive() {
        let post = Post::from_plain_text(
            "1",
            "A.Example",
            DateTime::<Utc>::UNIX_EPOCH,
            "hello @bob",
            Some("en".into()),
            false,
            Some("cw"),
            EngagementCounts::default(),
        );
        assert!(post.sensitive);
        assert_eq!(post.instance, "a.example");
        assert_eq!(post.content, "hello [MENTION]");
        assert_eq!(post.char_count, 15);
    }
}
