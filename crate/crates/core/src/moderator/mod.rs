//! LLM moderators: the prompt, the Likert output contract and the loop that
//! turns chat replies into verdicts.

mod engine;
mod grammar;
mod prompt;

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use engine::{
    collect_panel, moderate, run_panel, BackendError, ChatBackend, ChatMessage, ChatReply,
    ChatRequest, ModerationError, PanelError, PanelOutcome, Role, CORRECTIVE_SUFFIX,
};
pub use grammar::{parse_reply, score_choices, ParseError, ParsedReply, SCORE_CHOICE_REGEX};
pub use prompt::{build_prompt, PromptBundle, TemplateError, DEFAULT_SYSTEM_PROMPT, DEFAULT_TEMPLATE};

/// Canonical labels, indexed by score.
pub const LIKERT_LABELS: [&str; 6] = [
    "Totally Non-Compliant",
    "Non-Compliant",
    "Somehow Non-Compliant",
    "Reasonably Compliant",
    "Compliant",
    "Totally Compliant",
];

pub const MAX_LIKERT: u8 = 5;

/// A compliance score in `0..=5`. Construction is the only validation
/// point, so every value in circulation carries a canonical label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "LikertRepr", into = "LikertRepr")]
pub struct LikertScore(u8);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LikertError {
    #[error("score {0} is outside 0..=5")]
    OutOfRange(i64),
    #[error("label {label:?} does not match score {value}")]
    LabelMismatch { value: u8, label: String },
}

impl LikertScore {
    pub fn new(value: u8) -> Result<Self, LikertError> {
        if value <= MAX_LIKERT {
            Ok(Self(value))
        } else {
            Err(LikertError::OutOfRange(i64::from(value)))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn label(self) -> &'static str {
        LIKERT_LABELS[self.0 as usize]
    }

    pub fn all() -> impl Iterator<Item = LikertScore> {
        (0..=MAX_LIKERT).map(LikertScore)
    }
}

impl fmt::Display for LikertScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.0, self.label())
    }
}

#[derive(Serialize, Deserialize)]
struct LikertRepr {
    value: i64,
    label: String,
}

impl TryFrom<LikertRepr> for LikertScore {
    type Error = LikertError;

    fn try_from(repr: LikertRepr) -> Result<Self, Self::Error> {
        let value = u8::try_from(repr.value)
            .ok()
            .filter(|v| *v <= MAX_LIKERT)
            .ok_or(LikertError::OutOfRange(repr.value))?;
        let score = LikertScore(value);
        if score.label() != repr.label {
            return Err(LikertError::LabelMismatch {
                value,
                label: repr.label,
            });
        }
        Ok(score)
    }
}

impl From<LikertScore> for LikertRepr {
    fn from(s: LikertScore) -> Self {
        Self {
            value: i64::from(s.0),
            label: String::from(s.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrammarMode {
    /// The backend enforces the response shape through a guided-decoding
    /// extension; replies are still parsed.
    BackendConstrained,
    ParseAndRetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub model_id: String,
    pub endpoint_url: String,
    pub temperature: f64,
    /// Used instead of `temperature` when the backend rejects it.
    pub temperature_floor: Option<f64>,
    pub top_k: u32,
    pub top_p: f64,
    pub max_retries: u32,
    pub max_tokens: u32,
    pub grammar_mode: GrammarMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            model_id: String::new(),
            endpoint_url: String::new(),
            temperature: 0.0,
            temperature_floor: Some(0.01),
            top_k: 50,
            top_p: 1.0,
            max_retries: 3,
            max_tokens: 512,
            grammar_mode: GrammarMode::ParseAndRetry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelConfigError {
    #[error("model_id is empty")]
    EmptyModelId,
    #[error("temperature must be finite and >= 0, got {0}")]
    Temperature(f64),
    #[error("top_p must lie in (0, 1], got {0}")]
    TopP(f64),
    #[error("top_k must be positive")]
    TopK,
    #[error("max_retries must be positive")]
    MaxRetries,
}

impl ModelConfig {
    pub fn new(model_id: impl Into<String>, endpoint_url: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            endpoint_url: endpoint_url.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelConfigError> {
        if self.model_id.is_empty() {
            return Err(ModelConfigError::EmptyModelId);
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ModelConfigError::Temperature(self.temperature));
        }
        if let Some(floor) = self.temperature_floor {
            if !(floor.is_finite() && floor >= 0.0) {
                return Err(ModelConfigError::Temperature(floor));
            }
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ModelConfigError::TopP(self.top_p));
        }
        if self.top_k == 0 {
            return Err(ModelConfigError::TopK);
        }
        if self.max_retries == 0 {
            return Err(ModelConfigError::MaxRetries);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerationVerdict {
    pub post_id: String,
    pub model_id: String,
    pub score: LikertScore,
    pub justification: String,
    pub suggestion: String,
    pub latency_ms: u64,
    pub attempt: u32,
}
