use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::stats::{correlate, CorrelationResult, Method, StatsError};
use super::text::{suggestion_length, LengthUnit};
use crate::corpus::engagement_score;
use crate::ingest::{rule_set_word_count, Post, Rule};
use crate::moderator::ModerationVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// Total word count of the instance's rules against the score.
    RuleComplexity,
    Engagement,
    JustificationLength(LengthUnit),
    /// No-op suggestions count as length 0.
    SuggestionLength(LengthUnit),
    Sensitive,
}

impl Probe {
    pub const ALL: [Probe; 7] = [
        Probe::RuleComplexity,
        Probe::Engagement,
        Probe::JustificationLength(LengthUnit::Words),
        Probe::JustificationLength(LengthUnit::Chars),
        Probe::SuggestionLength(LengthUnit::Words),
        Probe::SuggestionLength(LengthUnit::Chars),
        Probe::Sensitive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Probe::RuleComplexity => "rule_word_count_vs_score",
            Probe::Engagement => "engagement_vs_score",
            Probe::JustificationLength(LengthUnit::Words) => "score_vs_justification_words",
            Probe::JustificationLength(LengthUnit::Chars) => "score_vs_justification_chars",
            Probe::SuggestionLength(LengthUnit::Words) => "score_vs_suggestion_words",
            Probe::SuggestionLength(LengthUnit::Chars) => "score_vs_suggestion_chars",
            Probe::Sensitive => "sensitive_vs_score",
        }
    }

    fn value(self, verdict: &ModerationVerdict, post: &Post, rule_words: u64) -> f64 {
        match self {
            Probe::RuleComplexity => rule_words as f64,
            Probe::Engagement => engagement_score(&post.engagement),
            Probe::JustificationLength(unit) => unit.measure(&verdict.justification) as f64,
            Probe::SuggestionLength(unit) => suggestion_length(&verdict.suggestion, unit) as f64,
            Probe::Sensitive => f64::from(u8::from(post.sensitive)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub probe: String,
    pub method: Method,
    pub n: usize,
    pub correlation: Option<CorrelationResult>,
    pub error: Option<String>,
}

impl ProbeOutcome {
    pub fn result(&self) -> Result<&CorrelationResult, &str> {
        self.correlation.as_ref().ok_or(self.error.as_deref().unwrap_or(""))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BiasError {
    #[error("verdict refers to unknown post {0}")]
    UnknownPost(String),
    #[error("no rule set for instance {0}")]
    UnknownInstance(String),
}

/// Correlates every probe with the score under both methods. Each verdict
/// is one observation. Degenerate probes are reported with their error
/// instead of failing the whole table.
pub fn bias_probes(
    verdicts: &[ModerationVerdict],
    posts: &[Post],
    rules_by_instance: &BTreeMap<String, Vec<Rule>>,
) -> Result<Vec<ProbeOutcome>, BiasError> {
    let by_id: BTreeMap<&str, &Post> = posts.iter().map(|p| (p.post_id.as_str(), p)).collect();
    let mut joined = Vec::with_capacity(verdicts.len());
    for v in verdicts {
        let post = by_id
            .get(v.post_id.as_str())
            .ok_or_else(|| BiasError::UnknownPost(v.post_id.clone()))?;
        let rules = rules_by_instance
            .get(&post.instance)
            .ok_or_else(|| BiasError::UnknownInstance(post.instance.clone()))?;
        joined.push((v, *post, rule_set_word_count(rules)));
    }
    let scores: Vec<f64> = joined.iter().map(|(v, _, _)| f64::from(v.score.value())).collect();

    let mut out = Vec::with_capacity(Probe::ALL.len() * 2);
    for probe in Probe::ALL {
        let values: Vec<f64> = joined.iter().map(|(v, p, w)| probe.value(v, p, *w)).collect();
        for method in [Method::Pearson, Method::Spearman] {
            let outcome: Result<CorrelationResult, StatsError> = correlate(method, &values, &scores);
            out.push(ProbeOutcome {
                probe: String::from(probe.name()),
                method,
                n: values.len(),
                error: outcome.as_ref().err().map(ToString::to_string),
                correlation: outcome.ok(),
            });
        }
    }
    Ok(out)
}
