use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::log::SurveyResponse;
use super::question::AnswerKey;
use crate::analytics::CATEGORIES;

fn chosen_model<'k>(r: &SurveyResponse, keys: &'k AnswerKey) -> Option<&'k str> {
    keys.get(&r.question_id)?.get(&r.chosen_label).map(String::as_str)
}

/// Per question, the share of respondents who chose each model. Questions
/// without resolvable answers are absent.
pub fn aggregate_preferences(responses: &[SurveyResponse], keys: &AnswerKey) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut counts: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for r in responses {
        if let Some(model) = chosen_model(r, keys) {
            *counts.entry(r.question_id.as_str()).or_default().entry(model).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|(q, row)| {
            let total: u64 = row.values().sum();
            let shares = row.into_iter().map(|(m, c)| (String::from(m), c as f64 / total as f64)).collect();
            (String::from(q), shares)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub models: Vec<String>,
    /// Before normalization: selections on the diagonal, co-selection
    /// products elsewhere.
    pub raw: Vec<Vec<f64>>,
    /// `raw` with every nonzero column scaled to sum to 1.
    pub normalized: Vec<Vec<f64>>,
    pub empty: bool,
}

/// Model co-selection: cell `(i, i)` counts selections of model `i`, cell
/// `(i, j)` sums `c_q(i) · c_q(j)` over questions, where `c_q(m)` is how
/// many respondents chose `m` on question `q`.
pub fn agreement_matrix(responses: &[SurveyResponse], keys: &AnswerKey, models: &[String]) -> AgreementMatrix {
    let k = models.len();
    let index: BTreeMap<&str, usize> = models.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let mut per_question: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in responses {
        if let Some(&i) = chosen_model(r, keys).and_then(|m| index.get(m)) {
            per_question.entry(r.question_id.as_str()).or_insert_with(|| vec![0.0; k])[i] += 1.0;
        }
    }
    let mut raw = vec![vec![0.0; k]; k];
    for c in per_question.values() {
        for i in 0..k {
            raw[i][i] += c[i];
            for j in (0..k).filter(|&j| j != i) {
                raw[i][j] += c[i] * c[j];
            }
        }
    }
    let mut normalized = raw.clone();
    for j in 0..k {
        let total: f64 = (0..k).map(|i| raw[i][j]).sum();
        if total > 0.0 {
            for row in normalized.iter_mut() {
                row[j] /= total;
            }
        }
    }
    AgreementMatrix { models: models.to_vec(), empty: per_question.is_empty(), raw, normalized }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingSummary {
    pub histogram: [u64; CATEGORIES],
    pub count: u64,
    pub median: f64,
    pub min: u8,
}

impl RatingSummary {
    fn from_values(mut values: Vec<u8>) -> Self {
        values.sort_unstable();
        let mut histogram = [0u64; CATEGORIES];
        for &v in &values {
            histogram[v as usize] += 1;
        }
        let n = values.len();
        let median = if n % 2 == 1 {
            f64::from(values[n / 2])
        } else {
            (f64::from(values[n / 2 - 1]) + f64::from(values[n / 2])) / 2.0
        };
        Self { histogram, count: n as u64, median, min: values[0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRatings {
    pub score_match: RatingSummary,
    pub justification_fit: RatingSummary,
    pub usefulness: RatingSummary,
}

/// Rating summaries for every model that was chosen at least once.
pub fn rating_distributions(responses: &[SurveyResponse], keys: &AnswerKey) -> BTreeMap<String, ModelRatings> {
    let mut by_model: BTreeMap<&str, [Vec<u8>; 3]> = BTreeMap::new();
    for r in responses {
        if let Some(model) = chosen_model(r, keys) {
            let slots = by_model.entry(model).or_default();
            slots[0].push(r.rating_score_match);
            slots[1].push(r.rating_justification_fit);
            slots[2].push(r.rating_usefulness);
        }
    }
    by_model
        .into_iter()
        .map(|(m, [a, b, c])| {
            let ratings = ModelRatings {
                score_match: RatingSummary::from_values(a),
                justification_fit: RatingSummary::from_values(b),
                usefulness: RatingSummary::from_values(c),
            };
            (String::from(m), ratings)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub responses: usize,
    pub respondents: usize,
    pub preferences: BTreeMap<String, BTreeMap<String, f64>>,
    pub agreement: AgreementMatrix,
    pub ratings: BTreeMap<String, ModelRatings>,
}

/// All three aggregates. Models default to every model in the answer key,
/// sorted.
pub fn survey_report(responses: &[SurveyResponse], keys: &AnswerKey, models: Option<&[String]>) -> SurveyReport {
    let models: Vec<String> = match models {
        Some(m) => m.to_vec(),
        None => {
            let mut all: Vec<String> = keys.values().flat_map(|k| k.values().cloned()).collect();
            all.sort();
            all.dedup();
            all
        }
    };
    let mut respondents: Vec<&str> = responses.iter().map(|r| r.respondent_id.as_str()).collect();
    respondents.sort_unstable();
    respondents.dedup();
    SurveyReport {
        responses: responses.len(),
        respondents: respondents.len(),
        preferences: aggregate_preferences(responses, keys),
        agreement: agreement_matrix(responses, keys, &models),
        ratings: rating_distributions(responses, keys),
    }
}
