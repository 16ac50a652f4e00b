use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::grammar::{parse_reply, ParseError, SCORE_CHOICE_REGEX};
use super::prompt::{build_prompt, PromptBundle, TemplateError};
use super::{GrammarMode, ModelConfig, ModelConfigError, ModerationVerdict};
use crate::ingest::{Post, Rule};

pub const CORRECTIVE_SUFFIX: &str = "Your previous answer did not follow the required format. Answer again with exactly three lines: \"Score: <score>: <label>\" using one of the six listed scores, \"Justification: <text>\" and \"Suggestions: <text>\".";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// Body of a chat-completions call. `guided_regex` is the guided-decoding
/// extension understood by common open inference servers; it is omitted
/// when unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guided_regex: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub content: String,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("backend rejected the requested temperature: {0}")]
    TemperatureRejected(String),
    #[error("malformed backend response: {0}")]
    Malformed(String),
}

/// A chat-completions endpoint. Implementations must tolerate concurrent
/// calls.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, endpoint_url: &str, request: &ChatRequest) -> Result<ChatReply, BackendError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn complete(&self, endpoint_url: &str, request: &ChatRequest) -> Result<ChatReply, BackendError> {
        (**self).complete(endpoint_url, request)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModerationError {
    #[error("invalid model config: {0}")]
    Config(#[from] ModelConfigError),
    #[error("model {model_id}: {source}")]
    Backend {
        model_id: String,
        #[source]
        source: BackendError,
    },
    #[error("model {model_id} produced no valid verdict for post {post_id} after {attempts} attempts: {last_error}")]
    Unparseable {
        model_id: String,
        post_id: String,
        attempts: u32,
        last_error: ParseError,
        last_reply: String,
    },
}

/// Queries one model until its reply satisfies the output contract.
///
/// Parse failures are answered with the offending reply and a corrective
/// message, up to `max_retries` attempts in total. A temperature rejection
/// switches once to `temperature_floor` without spending an attempt.
/// Transport failures end the call immediately.
pub fn moderate<B: ChatBackend + ?Sized>(
    bundle: &PromptBundle,
    cfg: &ModelConfig,
    backend: &B,
) -> Result<ModerationVerdict, ModerationError> {
    cfg.validate()?;
    let mut messages = vec![
        ChatMessage {
            role: Role::System,
            content: bundle.system_prompt.clone(),
        },
        ChatMessage {
            role: Role::User,
            content: bundle.instruction.clone(),
        },
    ];
    let guided_regex = match cfg.grammar_mode {
        GrammarMode::BackendConstrained => Some(String::from(SCORE_CHOICE_REGEX)),
        GrammarMode::ParseAndRetry => None,
    };
    let mut temperature = cfg.temperature;
    let mut floor_tried = false;
    let mut attempt = 0u32;
    let mut last_failure: Option<(ParseError, String)> = None;

    while attempt < cfg.max_retries {
        attempt += 1;
        let request = ChatRequest {
            model: cfg.model_id.clone(),
            messages: messages.clone(),
            temperature,
            top_p: cfg.top_p,
            top_k: cfg.top_k,
            max_tokens: cfg.max_tokens,
            guided_regex: guided_regex.clone(),
        };
        let reply = match backend.complete(&cfg.endpoint_url, &request) {
            Ok(reply) => reply,
            Err(BackendError::TemperatureRejected(_)) if !floor_tried && cfg.temperature_floor.is_some() => {
                floor_tried = true;
                temperature = cfg.temperature_floor.unwrap_or(temperature);
                attempt -= 1;
                continue;
            }
            Err(source) => {
                return Err(ModerationError::Backend {
                    model_id: cfg.model_id.clone(),
                    source,
                })
            }
        };
        match parse_reply(&reply.content) {
            Ok(parsed) => {
                return Ok(ModerationVerdict {
                    post_id: bundle.post_id.clone(),
                    model_id: cfg.model_id.clone(),
                    score: parsed.score,
                    justification: parsed.justification,
                    suggestion: parsed.suggestion,
                    latency_ms: reply.latency_ms,
                    attempt,
                })
            }
            Err(err) => {
                messages.push(ChatMessage {
                    role: Role::Assistant,
                    content: reply.content.clone(),
                });
                messages.push(ChatMessage {
                    role: Role::User,
                    content: format!("{CORRECTIVE_SUFFIX} ({err})"),
                });
                last_failure = Some((err, reply.content));
            }
        }
    }
    let (last_error, last_reply) = last_failure.expect("max_retries >= 1 guarantees one attempt");
    Err(ModerationError::Unparseable {
        model_id: cfg.model_id.clone(),
        post_id: bundle.post_id.clone(),
        attempts: attempt,
        last_error,
        last_reply,
    })
}

/// One panel member's result.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelOutcome {
    pub model_id: String,
    pub result: Result<ModerationVerdict, ModerationError>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PanelError {
    #[error("the panel has no models")]
    EmptyPanel,
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("every panel member failed ({} models)", .0.len())]
    AllFailed(Vec<PanelOutcome>),
}

/// Applies the panel-level rule: at least one member must succeed.
pub fn collect_panel(outcomes: Vec<PanelOutcome>) -> Result<Vec<PanelOutcome>, PanelError> {
    if outcomes.is_empty() {
        return Err(PanelError::EmptyPanel);
    }
    if outcomes.iter().all(|o| o.result.is_err()) {
        return Err(PanelError::AllFailed(outcomes));
    }
    Ok(outcomes)
}

/// Sequential panel run: every model sees the same bundle, outcomes keep
/// panel order and a failing member does not affect the others.
pub fn run_panel<B: ChatBackend + ?Sized>(
    rules: &[Rule],
    post: &Post,
    template: &str,
    panel: &[ModelConfig],
    backend: &B,
) -> Result<Vec<PanelOutcome>, PanelError> {
    if panel.is_empty() {
        return Err(PanelError::EmptyPanel);
    }
    let bundle = build_prompt(rules, post, template)?;
    let outcomes = panel
        .iter()
        .map(|cfg| PanelOutcome {
            model_id: cfg.model_id.clone(),
            result: moderate(&bundle, cfg, backend),
        })
        .collect();
    collect_panel(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EngagementCounts;
    use crate::moderator::DEFAULT_TEMPLATE;
    use alloc::collections::VecDeque;
    use alloc::string::ToString;
    use chrono::{DateTime, Utc};
    use std::sync::Mutex;

    /// Replays a fixed transcript and records the requests it saw.
    struct Scripted {
        replies: Mutex<VecDeque<Result<String, BackendError>>>,
        seen: Mutex<Vec<ChatRequest>>,
    }

    impl Scripted {
        fn new(replies: impl IntoIterator<Item = Result<&'static str, BackendError>>) -> Self {
            Self {
                replies: Mutex::new(replies.into_iter().map(|r| r.map(String::from)).collect()),
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    impl ChatBackend for Scripted {
        fn complete(&self, _: &str, request: &ChatRequest) -> Result<ChatReply, BackendError> {
            self.seen.lock().unwrap().push(request.clone());
            let next = self.replies.lock().unwrap().pop_front().expect("transcript exhausted");
            next.map(|content| ChatReply { content, latency_ms: 5 })
        }
    }

    fn bundle() -> PromptBundle {
        let post = Post::from_plain_text(
            "p1",
            "a.example",
            DateTime::<Utc>::UNIX_EPOCH,
            "I am exhausted hearing this",
            Some("en".into()),
            false,
            None,
            EngagementCounts::default(),
        );
        build_prompt(&[Rule::new("1", "No hate speech").unwrap()], &post, DEFAULT_TEMPLATE).unwrap()
    }

    const GOOD: &str = "Score: 1: Non-Compliant\nJustification: contains hate speech and violates policy 2\nSuggestions: remove the offensive language";

    #[test]
    fn valid_reply_yields_verdict() {
        let backend = Scripted::new([Ok(GOOD)]);
        let v = moderate(&bundle(), &ModelConfig::new("m1", "http://x"), &backend).unwrap();
        assert_eq!(v.score.value(), 1);
        assert_eq!(v.attempt, 1);
        assert_eq!(v.post_id, "p1");
        let seen = backend.seen.lock().unwrap();
        assert_eq!(seen[0].messages.len(), 2);
        assert_eq!(seen[0].temperature, 0.0);
        assert_eq!(seen[0].guided_regex, None);
    }

    #[test]
    fn out_of_range_three_times_is_unparseable() {
        let backend = Scripted::new([Ok("Score: 7: Super"), Ok("Score: 7: Super"), Ok("Score: 7: Super")]);
        let err = moderate(&bundle(), &ModelConfig::new("m1", "http://x"), &backend).unwrap_err();
        assert!(matches!(err, ModerationError::Unparseable { attempts: 3, .. }));
    }

    #[test]
    fn garbage_then_valid_reports_second_attempt() {
        let backend = Scripted::new([Ok("garbage"), Ok(GOOD)]);
        let v = moderate(&bundle(), &ModelConfig::new("m1", "http://x"), &backend).unwrap();
        assert_eq!(v.attempt, 2);
        let seen = backend.seen.lock().unwrap();
        let retry = &seen[1].messages;
        assert_eq!(retry.len(), 4);
        assert_eq!(retry[2].role, Role::Assistant);
        assert_eq!(retry[2].content, "garbage");
        assert!(retry[3].content.starts_with(CORRECTIVE_SUFFIX));
    }

    #[test]
    fn temperature_rejection_falls_back_once() {
        let backend = Scripted::new([Err(BackendError::TemperatureRejected("min 0.01".into())), Ok(GOOD)]);
        let v = moderate(&bundle(), &ModelConfig::new("m1", "http://x"), &backend).unwrap();
        assert_eq!(v.attempt, 1);
        assert_eq!(backend.seen.lock().unwrap()[1].temperature, 0.01);
    }

    #[test]
    fn constrained_mode_sends_the_choice_pattern() {
        let backend = Scripted::new([Ok(GOOD)]);
        let cfg = ModelConfig {
            grammar_mode: GrammarMode::BackendConstrained,
            ..ModelConfig::new("m1", "http://x")
        };
        moderate(&bundle(), &cfg, &backend).unwrap();
        assert_eq!(backend.seen.lock().unwrap()[0].guided_regex.as_deref(), Some(SCORE_CHOICE_REGEX));
    }

    #[test]
    fn transport_failure_is_a_backend_error() {
        let backend = Scripted::new([Err(BackendError::Transport("refused".into()))]);
        let err = moderate(&bundle(), &ModelConfig::new("m1", "http://x"), &backend).unwrap_err();
        assert!(matches!(err, ModerationError::Backend { .. }));
    }

    /// Answers per model id; one model is unreachable.
    struct PerModel {
        down: &'static str,
    }

    impl ChatBackend for PerModel {
        fn complete(&self, _: &str, request: &ChatRequest) -> Result<ChatReply, BackendError> {
            if request.model == self.down {
                Err(BackendError::Transport("connection refused".into()))
            } else {
                Ok(ChatReply { content: GOOD.to_string(), latency_ms: 1 })
            }
        }
    }

    fn panel(n: usize) -> Vec<ModelConfig> {
        (0..n).map(|i| ModelConfig::new(format!("model-{i}"), "http://x")).collect()
    }

    fn post() -> Post {
        Post::from_plain_text("p", "a.example", DateTime::<Utc>::UNIX_EPOCH, "hi", None, false, None, EngagementCounts::default())
    }

    #[test]
    fn panel_keeps_order_and_tolerates_one_failure() {
        let backend = PerModel { down: "model-3" };
        let outcomes = run_panel(&[], &post(), DEFAULT_TEMPLATE, &panel(6), &backend).unwrap();
        assert_eq!(outcomes.len(), 6);
        let ids: Vec<&str> = outcomes.iter().map(|o| o.model_id.as_str()).collect();
        assert_eq!(ids, ["model-0", "model-1", "model-2", "model-3", "model-4", "model-5"]);
        assert_eq!(outcomes.iter().filter(|o| o.result.is_ok()).count(), 5);
        assert!(outcomes[3].result.is_err());
    }

    #[test]
    fn empty_panel_and_total_failure() {
        let backend = PerModel { down: "model-0" };
        assert_eq!(run_panel(&[], &post(), DEFAULT_TEMPLATE, &[], &backend), Err(PanelError::EmptyPanel));
        let err = run_panel(&[], &post(), DEFAULT_TEMPLATE, &panel(1), &backend).unwrap_err();
        assert!(matches!(err, PanelError::AllFailed(ref o) if o.len() == 1));
    }
}
