use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ingest::Post;
use crate::moderator::ModerationVerdict;

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAges {
    pub score: u8,
    pub label: String,
    pub count: usize,
    pub median_age_days: f64,
    /// Verdict counts keyed by whole days of age.
    pub histogram: BTreeMap<u64, usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TemporalReport {
    pub reference: Option<DateTime<Utc>>,
    pub categories: Vec<CategoryAges>,
    pub unmatched_verdicts: usize,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Post age per score category. Age is measured back from the newest post
/// in `posts`; each verdict contributes one observation.
pub fn temporal_by_score(verdicts: &[ModerationVerdict], posts: &[Post]) -> TemporalReport {
    let Some(reference) = posts.iter().map(|p| p.created_at).max() else {
        return TemporalReport { unmatched_verdicts: verdicts.len(), ..TemporalReport::default() };
    };
    let created: BTreeMap<&str, DateTime<Utc>> = posts.iter().map(|p| (p.post_id.as_str(), p.created_at)).collect();
    let mut ages: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    let mut unmatched = 0;
    for v in verdicts {
        match created.get(v.post_id.as_str()) {
            Some(at) => {
                let days = (reference - *at).num_seconds() as f64 / SECONDS_PER_DAY;
                ages.entry(v.score.value()).or_default().push(days);
            }
            None => unmatched += 1,
        }
    }
    let categories = ages
        .into_iter()
        .map(|(score, mut days)| {
            days.sort_by(f64::total_cmp);
            let mut histogram = BTreeMap::new();
            for d in &days {
                *histogram.entry(*d as u64).or_insert(0) += 1;
            }
            CategoryAges {
                score,
                label: String::from(crate::moderator::LIKERT_LABELS[score as usize]),
                count: days.len(),
                median_age_days: median(&days),
                histogram,
            }
        })
        .collect();
    TemporalReport { reference: Some(reference), categories, unmatched_verdicts: unmatched }
}
