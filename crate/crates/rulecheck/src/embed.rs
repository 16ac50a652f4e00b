use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use rulecheck_core::analytics::{EmbedError, Embedder};

pub const EMBEDDINGS_PATH: &str = "/v1/embeddings";

/// OpenAI-style embeddings endpoint.
pub struct HttpEmbedder {
    client: reqwest::blocking::Client,
    url: String,
    name: String,
}

impl HttpEmbedder {
    pub fn new(base_url: &str, timeout: Duration) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::Backend(e.to_string()))?;
        let base = base_url.trim_end_matches('/');
        Ok(Self { client, url: format!("{base}{EMBEDDINGS_PATH}"), name: format!("http:{base}") })
    }
}

impl Embedder for HttpEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let resp = self
            .client
            .post(&self.url)
            .json(&json!({ "input": texts }))
            .send()
            .map_err(|e| EmbedError::Backend(e.to_string()))?;
        let status = resp.status();
        let body: Value = resp.json().map_err(|e| EmbedError::Backend(e.to_string()))?;
        if !status.is_success() {
            return Err(EmbedError::Backend(format!("HTTP {status}: {body}")));
        }
        let data = body
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| EmbedError::Backend("response has no data array".into()))?;
        if data.len() != texts.len() {
            return Err(EmbedError::Count { expected: texts.len(), got: data.len() });
        }
        data.iter()
            .map(|item| {
                item.get("embedding")
                    .and_then(Value::as_array)
                    .and_then(|v| v.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                    .ok_or_else(|| EmbedError::Backend("embedding is not a number array".into()))
            })
            .collect()
    }
}

/// Memoizes vectors by SHA-256 of the text and only sends unseen texts on.
pub struct CachedEmbedder<E> {
    inner: E,
    cache: Mutex<HashMap<[u8; 32], Vec<f64>>>,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn new(inner: E) -> Self {
        Self { inner, cache: Mutex::new(HashMap::new()) }
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

fn digest(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let keys: Vec<[u8; 32]> = texts.iter().map(|t| digest(t)).collect();
        let missing: Vec<String> = {
            let cache = self.cache.lock().unwrap();
            let mut seen = std::collections::HashSet::new();
            texts
                .iter()
                .zip(&keys)
                .filter(|(_, k)| !cache.contains_key(*k) && seen.insert(**k))
                .map(|(t, _)| t.clone())
                .collect()
        };
        if !missing.is_empty() {
            let vectors = self.inner.embed(&missing)?;
            if vectors.len() != missing.len() {
                return Err(EmbedError::Count { expected: missing.len(), got: vectors.len() });
            }
            let mut cache = self.cache.lock().unwrap();
            for (t, v) in missing.iter().zip(vectors) {
                cache.insert(digest(t), v);
            }
        }
        let cache = self.cache.lock().unwrap();
        Ok(keys.iter().map(|k| cache[k].clone()).collect())
    }
}
