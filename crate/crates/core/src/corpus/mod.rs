//! From crawled records to the moderation corpus: language filtering,
//! engagement scoring and the top/bottom engagement selection.

mod language;
mod selection;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ingest::{EngagementCounts, InstanceRecord, Post};

pub use language::{
    detect_language, normalize_code, LanguageDetector, LanguageError, LanguageVerdict,
    StopwordDetector, UNKNOWN_LANGUAGE,
};
pub use selection::{
    nearest_rank_percentile, select_posts, selected_posts, PercentileScope, SelectedPost,
    SelectionConfig, SelectionLabel, SelectionReport,
};

/// `replies + 2·reblogs + ½·favorites`.
pub fn engagement_score(c: &EngagementCounts) -> f64 {
    c.replies as f64 + 2.0 * c.reblogs as f64 + 0.5 * c.favorites as f64
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub instances_in: usize,
    pub instances_kept: usize,
    pub posts_in: usize,
    pub posts_after_declared: usize,
    pub posts_kept: usize,
}

/// Two-stage language filter: instances whose profile text is not in
/// `target` are dropped with all their posts; the remaining posts must both
/// declare `target` and be detected as `target`.
pub fn filter_english<D: LanguageDetector>(
    instances: Vec<InstanceRecord>,
    posts: Vec<Post>,
    detectors: &[D],
    target: &str,
) -> Result<(Vec<InstanceRecord>, Vec<Post>, FilterStats), LanguageError> {
    let mut stats = FilterStats {
        instances_in: instances.len(),
        posts_in: posts.len(),
        ..FilterStats::default()
    };
    let mut kept_instances = Vec::new();
    let mut kept_domains: BTreeSet<String> = BTreeSet::new();
    for instance in instances {
        if detect_language(&instance.profile_text(), detectors)?.is(target) {
            kept_domains.insert(instance.domain.clone());
            kept_instances.push(instance);
        }
    }
    stats.instances_kept = kept_instances.len();

    let mut kept_posts = Vec::new();
    for post in posts {
        if !kept_domains.contains(&post.instance) {
            continue;
        }
        let declared = post
            .declared_language
            .as_deref()
            .is_some_and(|l| normalize_code(l) == target);
        if !declared {
            continue;
        }
        stats.posts_after_declared += 1;
        if detect_language(&post.content, detectors)?.is(target) {
            kept_posts.push(post);
        }
    }
    stats.posts_kept = kept_posts.len();
    Ok((kept_instances, kept_posts, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use chrono::{DateTime, Utc};

    #[test]
    fn engagement_examples() {
        let e = |r, b, f| engagement_score(&EngagementCounts { replies: r, reblogs: b, favorites: f });
        assert_eq!(e(1, 2, 4), 7.0);
        assert_eq!(e(0, 0, 0), 0.0);
        assert_eq!(e(3, 0, 1), 3.5);
    }

    struct ByPrefix;
    impl LanguageDetector for ByPrefix {
        fn name(&self) -> &str {
            "prefix"
        }
        fn detect(&self, text: &str) -> Option<(String, f64)> {
            text.split(':').next().filter(|p| p.len() == 2).map(|p| (p.to_string(), 1.0))
        }
    }

    fn instance(domain: &str, description: &str) -> InstanceRecord {
        InstanceRecord {
            domain: domain.into(),
            active_users: 10,
            source_url: crate::ingest::OFFICIAL_SOURCE_URL.into(),
            description: description.into(),
            extended_description: None,
            rules: vec![],
            api_compatible: true,
            verified: true,
            fetched_at: DateTime::<Utc>::UNIX_EPOCH,
        }
    }

    fn post(id: &str, domain: &str, declared: &str, text: &str) -> Post {
        Post::from_plain_text(
            id,
            domain,
            DateTime::<Utc>::UNIX_EPOCH,
            text,
            Some(declared.into()),
            false,
            None,
            EngagementCounts::default(),
        )
    }

    #[test]
    fn german_instance_drops_all_its_posts() {
        let (i, p, stats) = filter_english(
            vec![instance("de.example", "de: Willkommen"), instance("en.example", "en: Welcome")],
            vec![post("1", "de.example", "en", "en: hi"), post("2", "en.example", "en", "en: hi")],
            &[ByPrefix],
            "en",
        )
        .unwrap();
        assert_eq!(i.len(), 1);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].post_id, "2");
        assert_eq!(stats.instances_kept, 1);
    }

    #[test]
    fn declared_english_but_detected_french_is_dropped() {
        let (_, p, stats) = filter_english(
            vec![instance("en.example", "en: Welcome")],
            vec![post("1", "en.example", "en", "fr: bonjour"), post("2", "en.example", "fr", "en: x")],
            &[ByPrefix],
            "en",
        )
        .unwrap();
        assert!(p.is_empty());
        assert_eq!(stats.posts_after_declared, 1);
    }

    #[test]
    fn english_corpus_is_a_fixed_point() {
        let instances = vec![instance("en.example", "en: Welcome")];
        let posts = vec![post("1", "en.example", "en-GB", "en: a"), post("2", "en.example", "en", "en: b")];
        let (i, p, _) = filter_english(instances.clone(), posts.clone(), &[ByPrefix], "en").unwrap();
        assert_eq!(i, instances);
        assert_eq!(p, posts);
    }
}
