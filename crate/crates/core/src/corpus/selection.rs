use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::engagement_score;
use crate::ingest::{compare_post_ids, Post};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PercentileScope {
    Global,
    PerInstance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub min_posts_per_instance: usize,
    pub top_k: usize,
    pub bottom_k: usize,
    pub percentile_low: f64,
    pub percentile_high: f64,
    pub percentile_scope: PercentileScope,
    pub target_language: String,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            min_posts_per_instance: 100,
            top_k: 50,
            bottom_k: 50,
            percentile_low: 10.0,
            percentile_high: 90.0,
            percentile_scope: PercentileScope::Global,
            target_language: String::from("en"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub instance: String,
    pub input_posts: usize,
    pub after_engagement_filter: usize,
    pub after_length_filter: usize,
    pub selected_top: Vec<String>,
    pub selected_bottom: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionLabel {
    Top,
    Bottom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedPost {
    #[serde(flatten)]
    pub post: Post,
    pub engagement_score: f64,
    pub selection: SelectionLabel,
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(p/100 · n)`, clamped to `[1, n]`.
pub fn nearest_rank_percentile(sorted: &[u64], p: f64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = libm::ceil(p / 100.0 * n as f64) as usize;
    Some(sorted[rank.clamp(1, n) - 1])
}

fn length_bounds<'a>(posts: impl Iterator<Item = &'a Post>, cfg: &SelectionConfig) -> Option<(u64, u64)> {
    let mut lengths: Vec<u64> = posts.map(|p| p.char_count).collect();
    lengths.sort_unstable();
    Some((
        nearest_rank_percentile(&lengths, cfg.percentile_low)?,
        nearest_rank_percentile(&lengths, cfg.percentile_high)?,
    ))
}

/// Highest engagement first; ties go to the newer post, then the smaller id.
fn engagement_order(a: &(f64, &Post), b: &(f64, &Post)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| b.1.created_at.cmp(&a.1.created_at))
        .then_with(|| compare_post_ids(&a.1.post_id, &b.1.post_id))
}

/// Engagement funnel over posts grouped by instance:
///
/// 1. drop posts without any engagement;
/// 2. drop instances left with fewer than `min_posts_per_instance` posts;
/// 3. keep posts whose character count lies within the nearest-rank
///    `[percentile_low, percentile_high]` range (closed), computed over the
///    remaining corpus or per instance;
/// 4. per instance, the first `top_k` posts by engagement are "top" and the
///    last `bottom_k` not already taken are "bottom".
///
/// Reports are returned for the instances that survive step 2, in key order.
pub fn select_posts(
    posts_by_instance: &BTreeMap<String, Vec<Post>>,
    cfg: &SelectionConfig,
) -> Vec<SelectionReport> {
    struct Stage<'a> {
        instance: &'a str,
        input: usize,
        engaged: Vec<(f64, &'a Post)>,
    }

    let mut stages: Vec<Stage<'_>> = posts_by_instance
        .iter()
        .map(|(instance, posts)| Stage {
            instance,
            input: posts.len(),
            engaged: posts
                .iter()
                .map(|p| (engagement_score(&p.engagement), p))
                .filter(|(e, _)| *e > 0.0)
                .collect(),
        })
        .collect();
    stages.retain(|s| s.engaged.len() >= cfg.min_posts_per_instance);

    let global_bounds = match cfg.percentile_scope {
        PercentileScope::Global => {
            length_bounds(stages.iter().flat_map(|s| s.engaged.iter().map(|(_, p)| *p)), cfg)
        }
        PercentileScope::PerInstance => None,
    };

    stages
        .into_iter()
        .map(|stage| {
            let bounds = match cfg.percentile_scope {
                PercentileScope::Global => global_bounds,
                PercentileScope::PerInstance => length_bounds(stage.engaged.iter().map(|(_, p)| *p), cfg),
            };
            let after_engagement_filter = stage.engaged.len();
            let mut eligible: Vec<(f64, &Post)> = stage
                .engaged
                .into_iter()
                .filter(|(_, p)| bounds.is_some_and(|(lo, hi)| lo <= p.char_count && p.char_count <= hi))
                .collect();
            eligible.sort_by(engagement_order);

            let top_n = cfg.top_k.min(eligible.len());
            let bottom_n = cfg.bottom_k.min(eligible.len() - top_n);
            let ids = |range: &[(f64, &Post)]| range.iter().map(|(_, p)| p.post_id.clone()).collect();
            SelectionReport {
                instance: String::from(stage.instance),
                input_posts: stage.input,
                after_engagement_filter,
                after_length_filter: eligible.len(),
                selected_top: ids(&eligible[..top_n]),
                selected_bottom: ids(&eligible[eligible.len() - bottom_n..]),
            }
        })
        .collect()
}

/// Materializes the posts named by `reports`, tops before bottoms.
pub fn selected_posts(
    reports: &[SelectionReport],
    posts_by_instance: &BTreeMap<String, Vec<Post>>,
) -> Vec<SelectedPost> {
    let mut out = Vec::new();
    for report in reports {
        let Some(posts) = posts_by_instance.get(&report.instance) else {
            continue;
        };
        let by_id: BTreeMap<&str, &Post> = posts.iter().map(|p| (p.post_id.as_str(), p)).collect();
        let mut emitted = BTreeSet::new();
        let labelled = report
            .selected_top
            .iter()
            .map(|id| (id, SelectionLabel::Top))
            .chain(report.selected_bottom.iter().map(|id| (id, SelectionLabel::Bottom)));
        for (id, selection) in labelled {
            if let Some(post) = by_id.get(id.as_str()) {
                if emitted.insert(id.clone()) {
                    out.push(SelectedPost {
                        post: (*post).clone(),
                        engagement_score: engagement_score(&post.engagement),
                        selection,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EngagementCounts;
    use alloc::format;
    use alloc::vec;
    use chrono::{DateTime, Duration, Utc};

    fn post(instance: &str, i: u64, favorites: u64, chars: usize) -> Post {
        let mut p = Post::from_plain_text(
            format!("{i}"),
            instance,
            DateTime::<Utc>::UNIX_EPOCH + Duration::minutes(i as i64),
            &"x".repeat(chars),
            Some("en".into()),
            false,
            None,
            EngagementCounts { replies: 0, reblogs: 0, favorites },
        );
        p.char_count = chars as u64;
        p
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<u64> = (1..=10).collect();
        assert_eq!(nearest_rank_percentile(&v, 10.0), Some(1));
        assert_eq!(nearest_rank_percentile(&v, 90.0), Some(9));
        assert_eq!(nearest_rank_percentile(&v, 0.0), Some(1));
        assert_eq!(nearest_rank_percentile(&v, 100.0), Some(10));
        assert_eq!(nearest_rank_percentile(&[], 50.0), None);
    }

    #[test]
    fn ninety_nine_engaged_posts_exclude_the_instance() {
        let mut map = BTreeMap::new();
        let mut posts: Vec<Post> = (1..=99).map(|i| post("small.example", i, 1, 50)).collect();
        posts.push(post("small.example", 100, 0, 50));
        map.insert("small.example".into(), posts);
        assert!(select_posts(&map, &SelectionConfig::default()).is_empty());
    }

    #[test]
    fn small_instance_assigns_top_first_without_overlap() {
        let mut map = BTreeMap::new();
        map.insert(
            "a.example".into(),
            (1..=120).map(|i| post("a.example", i, i, 50)).collect::<Vec<_>>(),
        );
        let cfg = SelectionConfig {
            percentile_low: 0.0,
            percentile_high: 100.0,
            ..SelectionConfig::default()
        };
        let reports = select_posts(&map, &cfg);
        let r = &reports[0];
        assert_eq!(r.selected_top.len(), 50);
        assert_eq!(r.selected_bottom.len(), 50);
        let tops: BTreeSet<_> = r.selected_top.iter().collect();
        assert!(r.selected_bottom.iter().all(|id| !tops.contains(id)));

        map.insert(
            "a.example".into(),
            (1..=70).map(|i| post("a.example", i, i, 50)).collect::<Vec<_>>(),
        );
        let cfg = SelectionConfig {
            min_posts_per_instance: 1,
            ..cfg
        };
        let r = &select_posts(&map, &cfg)[0];
        assert_eq!(r.selected_top.len(), 50);
        assert_eq!(r.selected_bottom.len(), 20);
    }

    #[test]
    fn ties_break_by_recency_then_id() {
        let mut map = BTreeMap::new();
        let mut posts: Vec<Post> = (1..=4).map(|i| post("a.example", i, 2, 50)).collect();
        posts[0].created_at = posts[3].created_at;
        map.insert("a.example".into(), posts);
        let cfg = SelectionConfig {
            min_posts_per_instance: 1,
            top_k: 4,
            bottom_k: 0,
            ..SelectionConfig::default()
        };
        let r = &select_posts(&map, &cfg)[0];
        assert_eq!(r.selected_top, vec!["1", "4", "3", "2"]);
    }

    #[test]
    fn length_window_is_closed() {
        let mut map = BTreeMap::new();
        let posts: Vec<Post> = (1..=10).map(|i| post("a.example", i, 1, i as usize * 10)).collect();
        map.insert("a.example".into(), posts);
        let cfg = SelectionConfig {
            min_posts_per_instance: 1,
            ..SelectionConfig::default()
        };
        let r = &select_posts(&map, &cfg)[0];
        // p10 = 10 chars, p90 = 90 chars: the 100-char post alone is dropped
        assert_eq!(r.after_length_filter, 9);
    }

    #[test]
    fn materialized_posts_carry_labels() {
        let mut map = BTreeMap::new();
        map.insert(
            "a.example".into(),
            (1..=4).map(|i| post("a.example", i, i, 50)).collect::<Vec<_>>(),
        );
        let cfg = SelectionConfig {
            min_posts_per_instance: 1,
            top_k: 1,
            bottom_k: 1,
            percentile_low: 0.0,
            percentile_high: 100.0,
            ..SelectionConfig::default()
        };
        let reports = select_posts(&map, &cfg);
        let selected = selected_posts(&reports, &map);
        assert_eq!(selected.len(), 2);
        assert_eq!(selected[0].post.post_id, "4");
        assert_eq!(selected[0].selection, SelectionLabel::Top);
        assert_eq!(selected[0].engagement_score, 2.0);
        assert_eq!(selected[1].post.post_id, "1");
        assert_eq!(selected[1].selection, SelectionLabel::Bottom);
    }
}
