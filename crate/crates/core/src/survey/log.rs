use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::question::QuestionView;
use crate::moderator::MAX_LIKERT;

/// A stored answer. Ratings are validated Likert values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub respondent_id: String,
    pub question_id: String,
    pub chosen_label: String,
    pub rating_score_match: u8,
    pub rating_justification_fit: u8,
    pub rating_usefulness: u8,
    #[serde(default)]
    pub strengths: String,
    #[serde(default)]
    pub weaknesses: String,
    pub submitted_at: DateTime<Utc>,
}

/// An answer as submitted, before validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseSubmission {
    pub question_id: String,
    pub chosen_label: String,
    pub rating_score_match: i64,
    pub rating_justification_fit: i64,
    pub rating_usefulness: i64,
    #[serde(default)]
    pub strengths: String,
    #[serde(default)]
    pub weaknesses: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("unknown question {0}")]
    UnknownQuestion(String),
    #[error("respondent already answered {0}")]
    Duplicate(String),
    #[error("expected an answer to {expected}, got {got}")]
    OutOfOrder { expected: String, got: String },
    #[error("all questions are answered")]
    Finished,
    #[error("invalid response: {0}")]
    Validation(String),
}

impl RecordError {
    /// Conflicts with the forward-only flow, as opposed to malformed input.
    pub fn is_sequencing(&self) -> bool {
        matches!(self, RecordError::Duplicate(_) | RecordError::OutOfOrder { .. } | RecordError::Finished)
    }
}

fn rating(name: &str, value: i64) -> Result<u8, RecordError> {
    u8::try_from(value)
        .ok()
        .filter(|v| *v <= MAX_LIKERT)
        .ok_or_else(|| RecordError::Validation(format!("{name} must be an integer in 0..=5, got {value}")))
}

impl ResponseSubmission {
    pub fn into_response(self, respondent_id: impl Into<String>, submitted_at: DateTime<Utc>) -> Result<SurveyResponse, RecordError> {
        Ok(SurveyResponse {
            respondent_id: respondent_id.into(),
            rating_score_match: rating("rating_score_match", self.rating_score_match)?,
            rating_justification_fit: rating("rating_justification_fit", self.rating_justification_fit)?,
            rating_usefulness: rating("rating_usefulness", self.rating_usefulness)?,
            question_id: self.question_id,
            chosen_label: self.chosen_label,
            strengths: self.strengths,
            weaknesses: self.weaknesses,
            submitted_at,
        })
    }
}

/// Append-only store of survey answers. Every respondent answers the
/// questions in survey order, once each.
#[derive(Debug, Clone)]
pub struct ResponseLog {
    order: Vec<String>,
    labels: BTreeMap<String, BTreeSet<String>>,
    cursors: BTreeMap<String, usize>,
    responses: Vec<SurveyResponse>,
}

impl ResponseLog {
    pub fn new(questions: &[QuestionView]) -> Self {
        Self {
            order: questions.iter().map(|q| q.question_id.clone()).collect(),
            labels: questions
                .iter()
                .map(|q| (q.question_id.clone(), q.options.iter().map(|o| o.label.clone()).collect()))
                .collect(),
            cursors: BTreeMap::new(),
            responses: Vec::new(),
        }
    }

    /// Rebuilds a log by recording `responses` in order.
    pub fn replay(questions: &[QuestionView], responses: impl IntoIterator<Item = SurveyResponse>) -> Result<Self, RecordError> {
        let mut log = Self::new(questions);
        for r in responses {
            log.record(r)?;
        }
        Ok(log)
    }

    pub fn question_count(&self) -> usize {
        self.order.len()
    }

    /// Index of the respondent's next unanswered question.
    pub fn cursor(&self, respondent_id: &str) -> usize {
        self.cursors.get(respondent_id).copied().unwrap_or(0)
    }

    pub fn current_question_id(&self, respondent_id: &str) -> Option<&str> {
        self.order.get(self.cursor(respondent_id)).map(String::as_str)
    }

    /// Validates and stores `r`, returning the respondent's new cursor.
    pub fn record(&mut self, r: SurveyResponse) -> Result<usize, RecordError> {
        let position = self
            .order
            .iter()
            .position(|q| *q == r.question_id)
            .ok_or_else(|| RecordError::UnknownQuestion(r.question_id.clone()))?;
        let cursor = self.cursor(&r.respondent_id);
        if position < cursor {
            return Err(RecordError::Duplicate(r.question_id));
        }
        if position > cursor {
            return Err(RecordError::OutOfOrder { expected: self.order[cursor].clone(), got: r.question_id });
        }
        if !self.labels[&r.question_id].contains(&r.chosen_label) {
            return Err(RecordError::Validation(format!("{:?} is not an option of {}", r.chosen_label, r.question_id)));
        }
        for (name, value) in [
            ("rating_score_match", r.rating_score_match),
            ("rating_justification_fit", r.rating_justification_fit),
            ("rating_usefulness", r.rating_usefulness),
        ] {
            rating(name, i64::from(value))?;
        }
        self.cursors.insert(r.respondent_id.clone(), cursor + 1);
        self.responses.push(r);
        Ok(cursor + 1)
    }

    pub fn responses(&self) -> &[SurveyResponse] {
        &self.responses
    }

    pub fn respondents(&self) -> usize {
        self.cursors.len()
    }
}
