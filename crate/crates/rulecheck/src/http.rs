//! Blocking GET client with per-host pacing and bounded retries.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use rulecheck_core::ingest::throttle::{HostThrottle, RateLimit, RetryPolicy};

use crate::clock::Clock;

pub const DEFAULT_USER_AGENT: &str = concat!(
    "rulecheck/",
    env!("CARGO_PKG_VERSION"),
    " (research crawler; +https://github.com/rulecheck/rulecheck)"
);

#[derive(Debug, thiserror::Error)]
pub enum HttpError {
    #[error("GET {url}: {message}")]
    Transport { url: String, message: String },
    #[error("GET {url}: HTTP {status}")]
    Status { url: String, status: u16, body: String },
}

impl HttpError {
    pub fn status(&self) -> Option<u16> {
        match self {
            HttpError::Status { status, .. } => Some(*status),
            HttpError::Transport { .. } => None,
        }
    }

    fn retryable(&self) -> bool {
        match self {
            HttpError::Transport { .. } => true,
            HttpError::Status { status, .. } => *status == 429 || *status >= 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpSettings {
    pub rate_limit: RateLimit,
    pub retry: RetryPolicy,
    pub user_agent: String,
    pub timeout: Duration,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            rate_limit: RateLimit::default(),
            retry: RetryPolicy::default(),
            user_agent: DEFAULT_USER_AGENT.to_string(),
            timeout: Duration::from_secs(30),
        }
    }
}

/// Shared by all crawl threads. Requests to one host are spaced by the
/// rate limit; distinct hosts do not wait on each other.
pub struct HttpClient {
    client: reqwest::blocking::Client,
    throttle: Mutex<HostThrottle>,
    retry: RetryPolicy,
    clock: Arc<dyn Clock>,
    trace: Mutex<Vec<(String, u64)>>,
}

impl HttpClient {
    pub fn new(settings: &HttpSettings, clock: Arc<dyn Clock>) -> Result<Self, HttpError> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(settings.user_agent.clone())
            .timeout(settings.timeout)
            .build()
            .map_err(|e| HttpError::Transport { url: String::new(), message: e.to_string() })?;
        Ok(Self {
            client,
            throttle: Mutex::new(HostThrottle::new(settings.rate_limit)),
            retry: settings.retry,
            clock,
            trace: Mutex::new(Vec::new()),
        })
    }

    /// `(host, clock ms)` of every request sent so far.
    pub fn request_log(&self) -> Vec<(String, u64)> {
        self.trace.lock().unwrap().clone()
    }

    fn wait_for_slot(&self, host: &str) {
        let now = self.clock.now_ms();
        let slot = self.throttle.lock().unwrap().reserve(host, now);
        self.clock.sleep_ms(slot.saturating_sub(now));
        self.trace.lock().unwrap().push((host.to_string(), slot.max(self.clock.now_ms())));
    }

    fn attempt(&self, url: &str) -> Result<String, HttpError> {
        let resp = self
            .client
            .get(url)
            .header("Accept", "application/json")
            .send()
            .map_err(|e| HttpError::Transport { url: url.to_string(), message: e.to_string() })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| HttpError::Transport { url: url.to_string(), message: e.to_string() })?;
        if (200..300).contains(&status) {
            Ok(body)
        } else {
            Err(HttpError::Status { url: url.to_string(), status, body })
        }
    }

    /// GETs `url`, counting it against `host`. Transport errors, 429 and
    /// 5xx are retried; other statuses are returned at once.
    pub fn get(&self, host: &str, url: &str) -> Result<String, HttpError> {
        let attempts = self.retry.attempts.max(1);
        let mut attempt = 1;
        loop {
            self.clock.sleep_ms(self.retry.backoff_before(attempt));
            self.wait_for_slot(host);
            match self.attempt(url) {
                Ok(body) => return Ok(body),
                Err(e) if e.retryable() && attempt < attempts => {
                    tracing::debug!(%url, attempt, error = %e, "retrying");
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}
