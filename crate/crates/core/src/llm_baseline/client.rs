use std::collections::VecDeque;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

const WINDOW: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmClientConfig {
    /// Base URL of an OpenAI-compatible API, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub credential_env: String,
    pub max_retries: u32,
    pub requests_per_minute: u32,
    pub cache_dir: Option<PathBuf>,
    pub initial_backoff_ms: u64,
    pub temperature: f64,
    pub timeout_secs: u64,
}

impl Default for LlmClientConfig {
    fn default() -> Self {
        LlmClientConfig {
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-3.5-turbo".into(),
            credential_env: "OPENAI_API_KEY".into(),
            max_retries: 3,
            requests_per_minute: 60,
            cache_dir: None,
            initial_backoff_ms: 1000,
            temperature: 0.0,
            timeout_secs: 60,
        }
    }
}

impl LlmClientConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.requests_per_minute == 0 {
            return Err(LlmError::InvalidConfig("requests_per_minute must be positive".into()));
        }
        if self.model.is_empty() || self.endpoint.is_empty() {
            return Err(LlmError::InvalidConfig("endpoint and model are required".into()));
        }
        Ok(())
    }
}

/// Failure of a single service call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallFailure {
    /// HTTP 429.
    RateLimited,
    /// 5xx responses and transport errors; worth retrying.
    Transient(String),
    /// Anything retrying cannot fix.
    Fatal(String),
}

/// One chat-completion round trip.
pub trait ChatService: Send + Sync {
    fn complete(&self, model: &str, prompt: &str, api_key: &str) -> Result<String, CallFailure>;
}

/// OpenAI-compatible `POST {endpoint}/chat/completions`.
pub struct HttpChatService {
    endpoint: String,
    temperature: f64,
    agent: ureq::Agent,
}

impl HttpChatService {
    pub fn new(config: &LlmClientConfig) -> Self {
        HttpChatService {
            endpoint: config.endpoint.trim_end_matches('/').to_string(),
            temperature: config.temperature,
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(config.timeout_secs))
                .build(),
        }
    }
}

impl ChatService for HttpChatService {
    fn complete(&self, model: &str, prompt: &str, api_key: &str) -> Result<String, CallFailure> {
        let body = serde_json::json!({
            "model": model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let response = self
            .agent
            .post(&format!("{}/chat/completions", self.endpoint))
            .set("Authorization", &format!("Bearer {api_key}"))
            .send_json(body);
        let value: serde_json::Value = match response {
            Ok(r) => r.into_json().map_err(|e| CallFailure::Transient(e.to_string()))?,
            Err(ureq::Error::Status(429, _)) => return Err(CallFailure::RateLimited),
            Err(ureq::Error::Status(code, r)) if code >= 500 => {
                return Err(CallFailure::Transient(format!("HTTP {code}: {}", r.into_string().unwrap_or_default())))
            }
            Err(ureq::Error::Status(code, r)) => {
                return Err(CallFailure::Fatal(format!("HTTP {code}: {}", r.into_string().unwrap_or_default())))
            }
            Err(e) => return Err(CallFailure::Transient(e.to_string())),
        };
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| CallFailure::Fatal(format!("unexpected response shape: {value}")))
    }
}

/// Time source for rate limiting and backoff.
pub trait Clock: Send + Sync {
    fn now(&self) -> Duration;
    fn sleep(&self, duration: Duration);
}

pub struct SystemClock {
    start: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock { start: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.start.elapsed()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Clock whose `sleep` advances time instantly.
#[derive(Default)]
pub struct VirtualClock {
    now: Mutex<Duration>,
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, duration: Duration) {
        *self.now.lock().unwrap() += duration;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub prompt: String,
    pub response: String,
    pub model: String,
}

/// Hex SHA-256 of the model id and prompt.
pub fn cache_key(model: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model.as_bytes());
    hasher.update([0u8]);
    hasher.update(prompt.as_bytes());
    hex::encode(hasher.finalize())
}

type EnvLookup = dyn Fn(&str) -> Option<String> + Send + Sync;

/// Chat client with a content-addressed response cache, retries with
/// exponential backoff, and a sliding-window request cap.
pub struct LlmClient {
    pub config: LlmClientConfig,
    service: Box<dyn ChatService>,
    clock: Arc<dyn Clock>,
    env: Box<EnvLookup>,
    call_times: Mutex<VecDeque<Duration>>,
    memory_cache: Mutex<std::collections::HashMap<String, String>>,
    network_calls: AtomicUsize,
    cache_hits: AtomicUsize,
}

impl LlmClient {
    pub fn new(config: LlmClientConfig, service: Box<dyn ChatService>) -> Result<Self, LlmError> {
        config.validate()?;
        Ok(LlmClient {
            config,
            service,
            clock: Arc::new(SystemClock::default()),
            env: Box::new(|name| std::env::var(name).ok()),
            call_times: Mutex::new(VecDeque::new()),
            memory_cache: Mutex::new(Default::default()),
            network_calls: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
        })
    }

    /// Client talking to the configured HTTP endpoint.
    pub fn http(config: LlmClientConfig) -> Result<Self, LlmError> {
        let service = Box::new(HttpChatService::new(&config));
        LlmClient::new(config, service)
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Replaces the environment lookup used to resolve the credential.
    pub fn with_env(mut self, env: impl Fn(&str) -> Option<String> + Send + Sync + 'static) -> Self {
        self.env = Box::new(env);
        self
    }

    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> usize {
        self.cache_hits.load(Ordering::SeqCst)
    }

    fn cache_path(&self, key: &str) -> Option<PathBuf> {
        self.config.cache_dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    fn cached(&self, key: &str) -> Option<String> {
        if let Some(hit) = self.memory_cache.lock().unwrap().get(key) {
            return Some(hit.clone());
        }
        let text = fs::read_to_string(self.cache_path(key)?).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.model == self.config.model).then_some(entry.response)
    }

    fn store(&self, key: &str, prompt: &str, response: &str) -> Result<(), LlmError> {
        self.memory_cache
            .lock()
            .unwrap()
            .insert(key.to_string(), response.to_string());
        if let Some(path) = self.cache_path(key) {
            let dir = path.parent().expect("cache file has a parent");
            fs::create_dir_all(dir)?;
            let entry = CacheEntry {
                prompt: prompt.to_string(),
                response: response.to_string(),
                model: self.config.model.clone(),
            };
            let tmp = tempfile_path(dir, key);
            fs::write(&tmp, serde_json::to_string_pretty(&entry)?)?;
            fs::rename(&tmp, &path)?;
        }
        Ok(())
    }

    /// Blocks until another request fits under the per-minute cap, then records it.
    fn acquire_slot(&self) {
        let cap = self.config.requests_per_minute as usize;
        let mut times = self.call_times.lock().unwrap();
        loop {
            let now = self.clock.now();
            while times.front().is_some_and(|&t| now.saturating_sub(t) >= WINDOW) {
                times.pop_front();
            }
            if times.len() < cap {
                times.push_back(now);
                return;
            }
            let oldest = *times.front().expect("window is full");
            self.clock.sleep(oldest + WINDOW - now);
        }
    }

    /// Response for a prompt, from the cache when possible.
    pub fn query(&self, prompt: &str) -> Result<String, LlmError> {
        let key = cache_key(&self.config.model, prompt);
        if let Some(hit) = self.cached(&key) {
            self.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(hit);
        }
        let api_key = (self.env)(&self.config.credential_env)
            .filter(|k| !k.is_empty())
            .ok_or_else(|| LlmError::AuthError(self.config.credential_env.clone()))?;
        let mut attempt = 0u32;
        loop {
            self.acquire_slot();
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            let failure = match self.service.complete(&self.config.model, prompt, &api_key) {
                Ok(response) => {
                    self.store(&key, prompt, &response)?;
                    return Ok(response);
                }
                Err(CallFailure::Fatal(msg)) => return Err(LlmError::ServiceError(msg)),
                Err(f) => f,
            };
            if attempt >= self.config.max_retries {
                return Err(match failure {
                    CallFailure::RateLimited => LlmError::RateLimitExhausted { attempts: attempt + 1 },
                    CallFailure::Transient(msg) | CallFailure::Fatal(msg) => LlmError::ServiceError(msg),
                });
            }
            let backoff = self.config.initial_backoff_ms.saturating_mul(1u64 << attempt.min(20));
            self.clock.sleep(Duration::from_millis(backoff));
            attempt += 1;
        }
    }
}

fn tempfile_path(dir: &std::path::Path, key: &str) -> PathBuf {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let n = COUNTER.fetch_add(1, Ordering::SeqCst);
    dir.join(format!(".{key}.{}.{n}.tmp", std::process::id()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fails the first `failures` calls with the given failure, then echoes the prompt.
    struct Flaky {
        failures: usize,
        failure: CallFailure,
        calls: AtomicUsize,
    }

    impl ChatService for Flaky {
        fn complete(&self, _model: &str, prompt: &str, _key: &str) -> Result<String, CallFailure> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(self.failure.clone())
            } else {
                Ok(format!("echo: {prompt}"))
            }
        }
    }

    fn client(failures: usize, failure: CallFailure, retries: u32) -> LlmClient {
        let config = LlmClientConfig {
            max_retries: retries,
            ..LlmClientConfig::default()
        };
        let service = Flaky { failures, failure, calls: AtomicUsize::new(0) };
        LlmClient::new(config, Box::new(service))
            .unwrap()
            .with_clock(Arc::new(VirtualClock::default()))
            .with_env(|_| Some("secret".into()))
    }

    #[test]
    fn missing_credential_fails_before_any_call() {
        let c = client(0, CallFailure::RateLimited, 3).with_env(|_| None);
        assert!(matches!(c.query("hi"), Err(LlmError::AuthError(_))));
        assert_eq!(c.network_calls(), 0);
    }

    #[test]
    fn retries_transient_failures() {
        let c = client(2, CallFailure::Transient("503".into()), 3);
        assert_eq!(c.query("hi").unwrap(), "echo: hi");
        assert_eq!(c.network_calls(), 3);
    }

    #[test]
    fn gives_up_after_the_retry_budget() {
        let c = client(10, CallFailure::RateLimited, 2);
        assert!(matches!(c.query("hi"), Err(LlmError::RateLimitExhausted { attempts: 3 })));
        let c = client(10, CallFailure::Transient("502".into()), 0);
        assert!(matches!(c.query("hi"), Err(LlmError::ServiceError(_))));
        let c = client(1, CallFailure::Fatal("400".into()), 5);
        assert!(matches!(c.query("hi"), Err(LlmError::ServiceError(_))));
        assert_eq!(c.network_calls(), 1);
    }

    #[test]
    fn cache_hits_skip_the_network() {
        let dir = tempfile::tempdir().unwrap();
        let config = LlmClientConfig {
            cache_dir: Some(dir.path().to_path_buf()),
            ..LlmClientConfig::default()
        };
        let make = || {
            let service = Flaky { failures: 0, failure: CallFailure::RateLimited, calls: AtomicUsize::new(0) };
            LlmClient::new(config.clone(), Box::new(service))
                .unwrap()
                .with_env(|_| Some("k".into()))
        };
        let first = make();
        first.query("prompt").unwrap();
        first.query("prompt").unwrap();
        assert_eq!((first.network_calls(), first.cache_hits()), (1, 1));
        let second = make().with_env(|_| None);
        assert_eq!(second.query("prompt").unwrap(), "echo: prompt");
        assert_eq!(second.network_calls(), 0);
        let file = dir.path().join(format!("{}.json", cache_key("gpt-3.5-turbo", "prompt")));
        let entry: CacheEntry = serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap();
        assert_eq!(entry.prompt, "prompt");
    }

    #[test]
    fn request_cap_holds_in_every_window() {
        let clock = Arc::new(VirtualClock::default());
        let config = LlmClientConfig {
            requests_per_minute: 5,
            ..LlmClientConfig::default()
        };
        let service = Flaky { failures: 0, failure: CallFailure::RateLimited, calls: AtomicUsize::new(0) };
        let c = LlmClient::new(config, Box::new(service))
            .unwrap()
            .with_clock(clock.clone())
            .with_env(|_| Some("k".into()));
        let mut stamps = Vec::new();
        for i in 0..23 {
            c.query(&format!("p{i}")).unwrap();
            stamps.push(clock.now());
            clock.sleep(Duration::from_millis(700));
        }
        for (i, &t) in stamps.iter().enumerate() {
            let in_window = stamps[i..].iter().take_while(|&&u| u < t + WINDOW).count();
            assert!(in_window <= 5, "window starting at {t:?} holds {in_window}");
        }
    }
}
