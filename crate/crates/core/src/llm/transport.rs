use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompt::{Message, PromptConfig};
use super::LlmError;

pub const API_KEY_VAR: &str = "FROGGER_LLM_API_KEY";
pub const BASE_URL_VAR: &str = "FROGGER_LLM_BASE_URL";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reasoning_effort: Option<String>,
}

impl ChatRequest {
    pub fn new(cfg: &PromptConfig, messages: Vec<Message>) -> Self {
        Self {
            model: cfg.model_id.clone(),
            messages,
            reasoning_effort: cfg.reasoning_effort.request_value().map(str::to_string),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub completion_tokens: u64,
    /// Seconds.
    pub latency: f64,
}

pub trait Transport {
    fn complete(&mut self, req: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

/// Hex SHA-256 of the request's JSON encoding.
pub fn request_digest(req: &ChatRequest) -> String {
    let bytes = serde_json::to_vec(req).expect("request serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Serves a fixed list of replies in order, wrapping around. Token counts are
/// the number of whitespace-separated words in the reply.
#[derive(Clone, Debug)]
pub struct ScriptedTransport {
    responses: Vec<String>,
    next: usize,
    /// Fail every request after this many have been served.
    pub fail_after: Option<usize>,
    /// Reply to requests that open with a developer message (reflection
    /// requests) without consuming the game script.
    pub critique: Option<String>,
}

impl ScriptedTransport {
    pub fn new(responses: Vec<String>) -> Self {
        assert!(!responses.is_empty(), "scripted transport needs at least one response");
        Self { responses, next: 0, fail_after: None, critique: None }
    }

    pub fn constant(reply: impl Into<String>) -> Self {
        Self::new(vec![reply.into()])
    }

    pub fn with_critique(mut self, critique: impl Into<String>) -> Self {
        self.critique = Some(critique.into());
        self
    }

    pub fn served(&self) -> usize {
        self.next
    }
}

impl Transport for ScriptedTransport {
    fn complete(&mut self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        if self.fail_after.is_some_and(|n| self.next >= n) {
            return Err(LlmError::Transport("scripted failure".into()));
        }
        let content = match &self.critique {
            Some(c) if req.messages.first().is_some_and(|m| m.role == "developer") => c.clone(),
            _ => {
                self.next += 1;
                self.responses[(self.next - 1) % self.responses.len()].clone()
            }
        };
        let completion_tokens = content.split_whitespace().count() as u64;
        Ok(ChatResponse { content, completion_tokens, latency: 0.0 })
    }
}

/// Recorded replies keyed by request digest. Identical requests are answered
/// with their recorded replies in recording order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cassette {
    pub entries: BTreeMap<String, Vec<ChatResponse>>,
}

impl Cassette {
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| LlmError::Cassette(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        let text = serde_json::to_string_pretty(self).expect("cassette serializes");
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends `other`'s replies after this cassette's, key by key.
    pub fn merge(&mut self, other: Cassette) {
        for (k, v) in other.entries {
            self.entries.entry(k).or_default().extend(v);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CassetteMode {
    Replay,
    Record,
}

pub struct CassetteTransport {
    pub cassette: Cassette,
    mode: CassetteMode,
    inner: Option<Box<dyn Transport + Send>>,
    cursors: HashMap<String, usize>,
    scope: String,
}

impl CassetteTransport {
    pub fn replay(cassette: Cassette) -> Self {
        Self { cassette, mode: CassetteMode::Replay, inner: None, cursors: HashMap::new(), scope: String::new() }
    }

    pub fn record(inner: Box<dyn Transport + Send>) -> Self {
        Self {
            cassette: Cassette::default(),
            mode: CassetteMode::Record,
            inner: Some(inner),
            cursors: HashMap::new(),
            scope: String::new(),
        }
    }

    /// Prefixes keys with `scope`, so independent runs sharing one cassette
    /// file never consume each other's replies.
    pub fn with_scope(mut self, scope: impl Into<String>) -> Self {
        self.scope = scope.into();
        self
    }

    pub fn mode(&self) -> CassetteMode {
        self.mode
    }

    /// Restarts every digest at its first recorded reply.
    pub fn rewind(&mut self) {
        self.cursors.clear();
    }
}

impl Transport for CassetteTransport {
    fn complete(&mut self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let digest = if self.scope.is_empty() {
            request_digest(req)
        } else {
            format!("{}:{}", self.scope, request_digest(req))
        };
        let cursor = self.cursors.entry(digest.clone()).or_insert(0);
        match self.mode {
            CassetteMode::Replay => {
                let resp = self
                    .cassette
                    .entries
                    .get(&digest)
                    .and_then(|v| v.get(*cursor))
                    .cloned()
                    .ok_or(LlmError::CassetteMiss(digest))?;
                *cursor += 1;
                Ok(resp)
            }
            CassetteMode::Record => {
                let resp = self.inner.as_mut().expect("record mode has an inner transport").complete(req)?;
                *cursor += 1;
                self.cassette.entries.entry(digest).or_default().push(resp.clone());
                Ok(resp)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub max_retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
    pub max_in_flight: usize,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            api_key: None,
            max_retries: 5,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(600),
            max_in_flight: 4,
        }
    }
}

impl HttpConfig {
    /// Defaults overridden by the base URL and key environment variables.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Ok(url) = std::env::var(BASE_URL_VAR) {
            cfg.base_url = url;
        }
        cfg.api_key = std::env::var(API_KEY_VAR).ok();
        cfg
    }
}

#[derive(Debug)]
struct Limiter {
    max: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

impl Limiter {
    fn acquire(self: &Arc<Self>) -> Permit {
        let mut busy = self.busy.lock().unwrap();
        while *busy >= self.max {
            busy = self.freed.wait(busy).unwrap();
        }
        *busy += 1;
        Permit(Arc::clone(self))
    }
}

struct Permit(Arc<Limiter>);

impl Drop for Permit {
    fn drop(&mut self) {
        *self.0.busy.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

/// Chat-completions client. Clones share one in-flight limit, so a pool of
/// episode workers can hold a clone each.
#[derive(Clone)]
pub struct HttpTransport {
    cfg: HttpConfig,
    agent: ureq::Agent,
    limiter: Arc<Limiter>,
}

impl HttpTransport {
    pub fn new(cfg: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(cfg.timeout))
            .build()
            .into();
        let limiter = Arc::new(Limiter { max: cfg.max_in_flight.max(1), busy: Mutex::new(0), freed: Condvar::new() });
        Self { cfg, agent, limiter }
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, req: &ChatRequest) -> Result<serde_json::Value, (bool, String)> {
        let _permit = self.limiter.acquire();
        let mut call = self.agent.post(&self.endpoint());
        if let Some(key) = &self.cfg.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call.send_json(req).map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err((true, format!("HTTP {status}")));
        }
        if status >= 400 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err((false, format!("HTTP {status}: {body}")));
        }
        resp.body_mut().read_json().map_err(|e| (false, format!("bad response body: {e}")))
    }
}

impl Transport for HttpTransport {
    fn complete(&mut self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let start = Instant::now();
        let mut delay = self.cfg.backoff;
        let mut attempt = 0;
        let body = loop {
            match self.attempt(req) {
                Ok(v) => break v,
                Err((retry, msg)) if retry && attempt < self.cfg.max_retries => {
                    log::warn!("request failed ({msg}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err((_, msg)) => return Err(LlmError::Transport(msg)),
            }
        };
        let content = body["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| LlmError::Transport("response has no message content".into()))?
            .to_string();
        let completion_tokens = body["usage"]["completion_tokens"].as_u64().unwrap_or(0);
        Ok(ChatResponse { content, completion_tokens, latency: start.elapsed().as_secs_f64() })
    }
}
