//! Chat-completions client and the bounded-concurrency panel runner.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::Value;

use rulecheck_core::moderator::{
    moderate, BackendError, ChatBackend, ChatReply, ChatRequest, ModerationError, PromptBundle,
};
use rulecheck_core::{ModelConfig, ModerationVerdict};

pub const CHAT_COMPLETIONS_PATH: &str = "/v1/chat/completions";

pub struct HttpChatBackend {
    client: reqwest::blocking::Client,
}

impl HttpChatBackend {
    pub fn new(timeout: Duration) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self { client })
    }
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, endpoint_url: &str, request: &ChatRequest) -> Result<ChatReply, BackendError> {
        let url = format!("{}{CHAT_COMPLETIONS_PATH}", endpoint_url.trim_end_matches('/'));
        let started = Instant::now();
        let resp = self
            .client
            .post(&url)
            .json(request)
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        let latency_ms = started.elapsed().as_millis() as u64;
        if status == 400 && body.to_ascii_lowercase().contains("temperature") {
            return Err(BackendError::TemperatureRejected(body));
        }
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body });
        }
        let json: Value = serde_json::from_str(&body).map_err(|e| BackendError::Malformed(e.to_string()))?;
        let content = json
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Malformed("missing choices[0].message.content".into()))?;
        Ok(ChatReply { content: content.to_string(), latency_ms })
    }
}

/// One (post, model) pair to moderate.
#[derive(Debug, Clone, Copy)]
pub struct Job<'a> {
    pub bundle: &'a PromptBundle,
    pub model: &'a ModelConfig,
}

/// Runs every job, at most `per_endpoint` at a time against any one
/// endpoint URL. `on_done` sees each result as soon as it exists; the
/// returned vector is in job order.
pub fn run_jobs<B, F>(
    jobs: &[Job<'_>],
    backend: &B,
    per_endpoint: usize,
    on_done: F,
) -> Vec<Result<ModerationVerdict, ModerationError>>
where
    B: ChatBackend + ?Sized,
    F: Fn(usize, &Result<ModerationVerdict, ModerationError>) + Sync,
{
    let mut queues: BTreeMap<&str, VecDeque<usize>> = BTreeMap::new();
    for (i, job) in jobs.iter().enumerate() {
        queues.entry(job.model.endpoint_url.as_str()).or_default().push_back(i);
    }
    let queues: Vec<Mutex<VecDeque<usize>>> = queues.into_values().map(Mutex::new).collect();
    let results: Mutex<Vec<Option<Result<ModerationVerdict, ModerationError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for queue in &queues {
            for _ in 0..per_endpoint.max(1) {
                s.spawn(|| loop {
                    let Some(i) = queue.lock().unwrap().pop_front() else {
                        break;
                    };
                    let job = jobs[i];
                    let result = moderate(job.bundle, job.model, backend);
                    on_done(i, &result);
                    results.lock().unwrap()[i] = Some(result);
                });
            }
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.expect("every job runs")).collect()
}
