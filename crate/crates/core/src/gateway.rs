//! Cache-backed chat-completion access with offline replay.
//!
//! Responses are stored one file per request under
//! `<cache>/<first two hex digits>/<digest>.json`. The store is append-only:
//! the first write for a key wins, so interrupted recordings can be resumed.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAX_TEMPERATURE: f64 = 2.0;
pub const MAX_TOKENS_LIMIT: u32 = 32_768;

/// The whole prompt goes out as a single user message.
pub const MESSAGE_LAYOUT: &str = "single_user_message";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default)]
    pub request_tag: String,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, prompt: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            prompt: prompt.into(),
            temperature: 0.0,
            max_tokens: 1024,
            request_tag: String::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.prompt.is_empty() {
            return Err(Error::InvalidRequest("empty prompt".into()));
        }
        if self.model.trim().is_empty() {
            return Err(Error::InvalidRequest("empty model id".into()));
        }
        if !(0.0..=MAX_TEMPERATURE).contains(&self.temperature) {
            return Err(Error::InvalidRequest(format!(
                "temperature {} outside [0, {MAX_TEMPERATURE}]",
                self.temperature
            )));
        }
        if !(1..=MAX_TOKENS_LIMIT).contains(&self.max_tokens) {
            return Err(Error::InvalidRequest(format!(
                "max_tokens {} outside [1, {MAX_TOKENS_LIMIT}]",
                self.max_tokens
            )));
        }
        Ok(())
    }

    /// Content address of the request. The audit tag is not part of it.
    pub fn cache_key(&self) -> CacheKey {
        #[derive(Serialize)]
        struct Keyed<'a> {
            model: &'a str,
            prompt: &'a str,
            temperature: f64,
            max_tokens: u32,
        }
        let canonical = serde_json::to_vec(&Keyed {
            model: &self.model,
            prompt: &self.prompt,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        })
        .expect("request serializes");
        CacheKey(hex::encode(Sha256::digest(canonical)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CacheKey(pub String);

impl CacheKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for CacheKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Other,
}

impl FinishReason {
    fn from_provider(s: Option<&str>) -> Self {
        match s {
            Some("stop") => FinishReason::Stop,
            Some("length") => FinishReason::Length,
            _ => FinishReason::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub finish_reason: FinishReason,
    #[serde(default)]
    pub usage: Usage,
    #[serde(default)]
    pub cache_hit: bool,
}

impl ChatResponse {
    pub fn stop(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            finish_reason: FinishReason::Stop,
            usage: Usage::default(),
            cache_hit: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayMode {
    /// Always call the provider; the cache is neither read nor written.
    Live,
    /// Serve only from the cache.
    Replay,
    /// Serve from the cache when present, otherwise call and persist.
    Record,
}

impl std::str::FromStr for GatewayMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "live" => Ok(GatewayMode::Live),
            "replay" => Ok(GatewayMode::Replay),
            "record" => Ok(GatewayMode::Record),
            other => Err(Error::InvalidInput(format!(
                "unknown gateway mode {other:?}"
            ))),
        }
    }
}

/// Failure reported by a transport.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// Worth retrying: connection problems, timeouts, rate limits, 5xx.
    Transient(String),
    /// The provider rejected the request.
    Provider { status: u16, body: String },
}

/// Something that can execute a chat request.
pub trait Transport: Send + Sync {
    fn send(&self, request: &ChatRequest) -> std::result::Result<ChatResponse, TransportError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay_ms: 1000,
            jitter: true,
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self {
            max_attempts: 1,
            base_delay_ms: 0,
            jitter: false,
        }
    }

    fn delay(&self, attempt: u32) -> Duration {
        let base = self.base_delay_ms.saturating_mul(1u64 << attempt.min(16));
        let extra = if self.jitter && self.base_delay_ms > 0 {
            rand::thread_rng().gen_range(0..=self.base_delay_ms)
        } else {
            0
        };
        Duration::from_millis(base + extra)
    }
}

/// One cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request: ChatRequest,
    pub response: ChatResponse,
    pub timestamp: u64,
    #[serde(default)]
    pub message_layout: String,
}

/// Content-addressed response store.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    root: PathBuf,
}

impl ResponseCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.root.join(&key.0[..2]).join(format!("{}.json", key.0))
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<CacheEntry>> {
        let path = self.path_for(key);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    /// Writes `entry` unless the key already exists. Returns the entry that
    /// ends up stored.
    pub fn put(&self, key: &CacheKey, entry: &CacheEntry) -> Result<CacheEntry> {
        let path = self.path_for(key);
        let dir = path.parent().expect("cache paths have a parent");
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        let mut body = serde_json::to_vec_pretty(entry)?;
        body.push(b'\n');
        std::io::Write::write_all(&mut tmp, &body).map_err(|e| Error::io(tmp.path(), e))?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => Ok(entry.clone()),
            Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => {
                Ok(self.get(key)?.unwrap_or_else(|| entry.clone()))
            }
            Err(e) => Err(Error::io(path, e.error)),
        }
    }

    pub fn len(&self) -> usize {
        walk_json(&self.root)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn walk_json(dir: &Path) -> usize {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return 0;
    };
    entries
        .flatten()
        .map(|e| {
            let p = e.path();
            if p.is_dir() {
                walk_json(&p)
            } else {
                usize::from(p.extension().is_some_and(|x| x == "json"))
            }
        })
        .sum()
}

/// Shared entry point for all model calls.
#[derive(Clone)]
pub struct Gateway {
    cache: Option<ResponseCache>,
    transport: Option<Arc<dyn Transport>>,
    retry: RetryPolicy,
}

impl Gateway {
    pub fn new(cache: Option<ResponseCache>, transport: Option<Arc<dyn Transport>>) -> Self {
        Self {
            cache,
            transport,
            retry: RetryPolicy::default(),
        }
    }

    /// A gateway that can only replay from `cache`.
    pub fn replay_only(cache: ResponseCache) -> Self {
        Self::new(Some(cache), None)
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    pub fn complete(&self, request: &ChatRequest, mode: GatewayMode) -> Result<ChatResponse> {
        request.validate()?;
        match mode {
            GatewayMode::Live => self.call(request),
            GatewayMode::Replay => {
                let key = request.cache_key();
                match self.require_cache()?.get(&key)? {
                    Some(entry) => Ok(hit(entry)),
                    None => Err(Error::CacheMiss(key.0)),
                }
            }
            GatewayMode::Record => {
                let cache = self.require_cache()?;
                let key = request.cache_key();
                if let Some(entry) = cache.get(&key)? {
                    return Ok(hit(entry));
                }
                let response = self.call(request)?;
                let stored = cache.put(
                    &key,
                    &CacheEntry {
                        request: request.clone(),
                        response: ChatResponse {
                            cache_hit: false,
                            ..response
                        },
                        timestamp: unix_now(),
                        message_layout: MESSAGE_LAYOUT.to_string(),
                    },
                )?;
                Ok(stored.response)
            }
        }
    }

    /// Completes every request with at most `concurrency_limit` in flight.
    /// Results come back in request order; failures are reported per item.
    pub fn batch_complete(
        &self,
        requests: &[ChatRequest],
        mode: GatewayMode,
        concurrency_limit: usize,
    ) -> Result<Vec<Result<ChatResponse>>> {
        if concurrency_limit == 0 {
            return Err(Error::InvalidInput(
                "concurrency limit must be at least 1".into(),
            ));
        }
        let slots: Vec<Mutex<Option<Result<ChatResponse>>>> =
            requests.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = concurrency_limit.min(requests.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= requests.len() {
                        break;
                    }
                    let out = self.complete(&requests[i], mode);
                    *slots[i].lock().unwrap() = Some(out);
                });
            }
        });
        Ok(slots
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("every slot is filled"))
            .collect())
    }

    fn require_cache(&self) -> Result<&ResponseCache> {
        self.cache
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("this gateway mode needs a cache directory".into()))
    }

    fn call(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let transport = self
            .transport
            .as_ref()
            .ok_or_else(|| Error::Credentials("no transport configured".into()))?;
        let attempts = self.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.delay(attempt - 1));
            }
            match transport.send(request) {
                Ok(r) => return Ok(r),
                Err(TransportError::Provider { status, body }) => {
                    return Err(Error::Provider { status, body })
                }
                Err(TransportError::Transient(msg)) => {
                    log::warn!(
                        "transient error (attempt {}/{attempts}): {msg}",
                        attempt + 1
                    );
                    last = msg;
                }
            }
        }
        Err(Error::RetriesExhausted { attempts, last })
    }
}

fn hit(entry: CacheEntry) -> ChatResponse {
    ChatResponse {
        cache_hit: true,
        ..entry.response
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Chat-completions over HTTP (OpenAI-compatible JSON).
pub struct HttpTransport {
    endpoint: String,
    token: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, token: impl Into<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::InvalidInput(format!("http client: {e}")))?;
        Ok(Self {
            endpoint: endpoint.into(),
            token: token.into(),
            client,
        })
    }

    /// Reads the token from the environment variable `token_env`.
    pub fn from_env(endpoint: &str, token_env: &str) -> Result<Self> {
        let token = std::env::var(token_env).map_err(|_| {
            Error::Credentials(format!("environment variable {token_env} is not set"))
        })?;
        Self::new(endpoint, token)
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> std::result::Result<ChatResponse, TransportError> {
        let body = serde_json::json!({
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.token)
            .json(&body)
            .send()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .text()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        if status == 408 || status == 429 || status >= 500 {
            return Err(TransportError::Transient(format!(
                "status {status}: {text}"
            )));
        }
        if !(200..300).contains(&status) {
            return Err(TransportError::Provider { status, body: text });
        }
        parse_completion(&text).map_err(|e| TransportError::Provider {
            status,
            body: format!("unreadable completion ({e}): {text}"),
        })
    }
}

fn parse_completion(body: &str) -> std::result::Result<ChatResponse, String> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let choice = v["choices"].get(0).ok_or("no choices")?;
    let text = choice["message"]["content"]
        .as_str()
        .unwrap_or_default()
        .to_string();
    let finish_reason = FinishReason::from_provider(choice["finish_reason"].as_str());
    if text.is_empty() && finish_reason == FinishReason::Stop {
        return Err("empty completion with finish_reason stop".into());
    }
    let count = |k: &str| v["usage"][k].as_u64().unwrap_or(0);
    Ok(ChatResponse {
        text,
        finish_reason,
        usage: Usage {
            prompt_tokens: count("prompt_tokens"),
            completion_tokens: count("completion_tokens"),
            total_tokens: count("total_tokens"),
        },
        cache_hit: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU32;

    /// Echoes the prompt; fails transiently the first `flaky` calls.
    struct Echo {
        flaky: AtomicU32,
        calls: AtomicU32,
        in_flight: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Echo {
        fn new(flaky: u32) -> Self {
            Self {
                flaky: AtomicU32::new(flaky),
                calls: AtomicU32::new(0),
                in_flight: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
            }
        }
    }

    impl Transport for Echo {
        fn send(&self, r: &ChatRequest) -> std::result::Result<ChatResponse, TransportError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(5));
            self.in_flight.fetch_sub(1, Ordering::SeqCst);
            if r.prompt.contains("forbidden") {
                return Err(TransportError::Provider {
                    status: 400,
                    body: "bad".into(),
                });
            }
            if self
                .flaky
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
                .is_ok()
            {
                return Err(TransportError::Transient("reset".into()));
            }
            Ok(ChatResponse::stop(format!("echo: {}", r.prompt)))
        }
    }

    fn gateway(dir: &Path, echo: Arc<Echo>) -> Gateway {
        Gateway::new(Some(ResponseCache::new(dir)), Some(echo)).with_retry(RetryPolicy {
            max_attempts: 5,
            base_delay_ms: 0,
            jitter: false,
        })
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let g = gateway(dir.path(), Arc::new(Echo::new(0)));
        let req = ChatRequest::new("m", "hello");
        let recorded = g.complete(&req, GatewayMode::Record).unwrap();
        assert!(!recorded.cache_hit);
        let replayed = Gateway::replay_only(ResponseCache::new(dir.path()))
            .complete(&req, GatewayMode::Replay)
            .unwrap();
        assert!(replayed.cache_hit);
        assert_eq!(replayed.text, recorded.text);
        let key = req.cache_key();
        assert!(dir
            .path()
            .join(&key.0[..2])
            .join(format!("{key}.json"))
            .exists());
    }

    #[test]
    fn replay_miss_names_digest() {
        let dir = tempfile::tempdir().unwrap();
        let req = ChatRequest::new("m", "unseen");
        let err = Gateway::replay_only(ResponseCache::new(dir.path()))
            .complete(&req, GatewayMode::Replay)
            .unwrap_err();
        assert!(err.to_string().contains(req.cache_key().as_str()));
        assert!(err.to_string().contains("cache miss"));
    }

    #[test]
    fn key_covers_temperature_but_not_tag() {
        let a = ChatRequest::new("m", "p");
        let b = ChatRequest {
            temperature: 0.7,
            ..a.clone()
        };
        let c = ChatRequest {
            request_tag: "x".into(),
            ..a.clone()
        };
        assert_ne!(a.cache_key(), b.cache_key());
        assert_eq!(a.cache_key(), c.cache_key());
        assert!(a.cache_key().0.chars().all(|ch| ch.is_ascii_hexdigit()));
        assert_eq!(a.cache_key().0.len(), 64);
    }

    #[test]
    fn request_bounds() {
        assert!(ChatRequest::new("m", "").validate().is_err());
        assert!(ChatRequest {
            temperature: 2.5,
            ..ChatRequest::new("m", "p")
        }
        .validate()
        .is_err());
        assert!(ChatRequest {
            max_tokens: 0,
            ..ChatRequest::new("m", "p")
        }
        .validate()
        .is_err());
        assert!(ChatRequest {
            max_tokens: 40_000,
            ..ChatRequest::new("m", "p")
        }
        .validate()
        .is_err());
    }

    #[test]
    fn first_write_wins() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let req = ChatRequest::new("m", "p");
        let entry = |t: &str| CacheEntry {
            request: req.clone(),
            response: ChatResponse::stop(t),
            timestamp: 0,
            message_layout: MESSAGE_LAYOUT.into(),
        };
        cache.put(&req.cache_key(), &entry("first")).unwrap();
        let kept = cache.put(&req.cache_key(), &entry("second")).unwrap();
        assert_eq!(kept.response.text, "first");
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn record_does_not_call_twice() {
        let dir = tempfile::tempdir().unwrap();
        let echo = Arc::new(Echo::new(0));
        let g = gateway(dir.path(), echo.clone());
        let req = ChatRequest::new("m", "once");
        g.complete(&req, GatewayMode::Record).unwrap();
        assert!(g.complete(&req, GatewayMode::Record).unwrap().cache_hit);
        assert_eq!(echo.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn retries_transient_then_gives_up() {
        let dir = tempfile::tempdir().unwrap();
        let echo = Arc::new(Echo::new(3));
        let g = gateway(dir.path(), echo.clone());
        assert!(g
            .complete(&ChatRequest::new("m", "p"), GatewayMode::Live)
            .is_ok());
        assert_eq!(echo.calls.load(Ordering::SeqCst), 4);

        let g = gateway(dir.path(), Arc::new(Echo::new(10)));
        assert!(matches!(
            g.complete(&ChatRequest::new("m", "p"), GatewayMode::Live),
            Err(Error::RetriesExhausted { attempts: 5, .. })
        ));
    }

    #[test]
    fn provider_errors_are_not_retried() {
        let dir = tempfile::tempdir().unwrap();
        let echo = Arc::new(Echo::new(0));
        let g = gateway(dir.path(), echo.clone());
        let err = g
            .complete(&ChatRequest::new("m", "forbidden"), GatewayMode::Live)
            .unwrap_err();
        assert!(matches!(err, Error::Provider { status: 400, .. }));
        assert_eq!(echo.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn batch_order_and_partial_failure() {
        let dir = tempfile::tempdir().unwrap();
        let g = gateway(dir.path(), Arc::new(Echo::new(0)));
        let reqs: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|p| ChatRequest::new("m", *p))
            .collect();
        for r in &reqs[..2] {
            g.complete(r, GatewayMode::Record).unwrap();
        }
        let replay = Gateway::replay_only(ResponseCache::new(dir.path()));
        let out = replay
            .batch_complete(&reqs, GatewayMode::Replay, 2)
            .unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].as_ref().unwrap().text, "echo: a");
        assert_eq!(out[1].as_ref().unwrap().text, "echo: b");
        assert!(matches!(out[2], Err(Error::CacheMiss(_))));
        assert!(replay
            .batch_complete(&reqs, GatewayMode::Replay, 0)
            .is_err());
    }

    #[test]
    fn batch_respects_concurrency_limit() {
        let dir = tempfile::tempdir().unwrap();
        let reqs: Vec<_> = (0..12)
            .map(|i| ChatRequest::new("m", format!("p{i}")))
            .collect();
        let mut texts = Vec::new();
        for limit in [1, 3, 8] {
            let echo = Arc::new(Echo::new(0));
            let g = gateway(dir.path(), echo.clone());
            let out = g.batch_complete(&reqs, GatewayMode::Live, limit).unwrap();
            assert!(echo.peak.load(Ordering::SeqCst) <= limit);
            texts.push(out.into_iter().map(|r| r.unwrap().text).collect::<Vec<_>>());
        }
        assert_eq!(texts[0], texts[1]);
        assert_eq!(texts[0], texts[2]);
    }

    #[test]
    fn completion_body_parsing() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"Yes"},"finish_reason":"stop"}],"usage":{"prompt_tokens":5,"completion_tokens":1,"total_tokens":6}}"#;
        let r = parse_completion(body).unwrap();
        assert_eq!(r.text, "Yes");
        assert_eq!(r.usage.total_tokens, 6);
        let truncated = r#"{"choices":[{"message":{"content":""},"finish_reason":"length"}]}"#;
        assert_eq!(
            parse_completion(truncated).unwrap().finish_reason,
            FinishReason::Length
        );
        let empty_stop = r#"{"choices":[{"message":{"content":""},"finish_reason":"stop"}]}"#;
        assert!(parse_completion(empty_stop).is_err());
    }
}
