//! Block-explorer client. An address exists when the explorer lists at
//! least one transaction for it.

use std::time::{Duration, Instant};

use evmscope_core::analyzers::RegistryUnavailable;

use crate::TokenBucket;

pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

pub trait HttpTransport: Send {
    fn get(&mut self, url: &str) -> Result<HttpResponse, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        UreqTransport {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl HttpTransport for UreqTransport {
    fn get(&mut self, url: &str) -> Result<HttpResponse, String> {
        match self.agent.get(url).call() {
            Ok(r) => {
                let status = r.status();
                let body = r.into_string().map_err(|e| e.to_string())?;
                Ok(HttpResponse { status, body })
            }
            Err(ureq::Error::Status(status, r)) => Ok(HttpResponse {
                status,
                body: r.into_string().unwrap_or_default(),
            }),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExplorerConfig {
    /// Account transaction-list endpoint, without query string.
    pub url: String,
    pub api_key: Option<String>,
    /// JSON field holding the transaction array.
    pub result_field: String,
    /// JSON field holding a human-readable status message.
    pub message_field: String,
    pub requests_per_s: f64,
    pub max_retries: u32,
    pub initial_backoff: Duration,
}

pub const URL_VAR: &str = "EVMSCOPE_EXPLORER_URL";
pub const KEY_VAR: &str = "EVMSCOPE_EXPLORER_KEY";

impl Default for ExplorerConfig {
    fn default() -> Self {
        ExplorerConfig {
            url: "https://api.etherscan.io/api".into(),
            api_key: None,
            result_field: "result".into(),
            message_field: "message".into(),
            requests_per_s: 5.0,
            max_retries: 5,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

impl ExplorerConfig {
    /// Defaults overridden by `EVMSCOPE_EXPLORER_URL` and
    /// `EVMSCOPE_EXPLORER_KEY`.
    pub fn from_env() -> Self {
        let mut c = ExplorerConfig::default();
        if let Ok(u) = std::env::var(URL_VAR) {
            c.url = u;
        }
        c.api_key = std::env::var(KEY_VAR).ok().filter(|k| !k.is_empty());
        c
    }

    fn request_url(&self, address: &[u8; 20]) -> String {
        let mut u = format!(
            "{}?module=account&action=txlist&address=0x{}&page=1&offset=1&sort=asc",
            self.url,
            hex::encode(address)
        );
        if let Some(k) = &self.api_key {
            u.push_str("&apikey=");
            u.push_str(k);
        }
        u
    }
}

enum Answer {
    Exists(bool),
    Throttled,
}

pub struct ExplorerClient {
    config: ExplorerConfig,
    transport: Box<dyn HttpTransport>,
    bucket: TokenBucket,
    sleep: Box<dyn FnMut(Duration) + Send>,
}

impl ExplorerClient {
    pub fn new(config: ExplorerConfig, transport: Box<dyn HttpTransport>) -> Self {
        let bucket = TokenBucket::new(config.requests_per_s, config.requests_per_s.max(1.0));
        ExplorerClient {
            config,
            transport,
            bucket,
            sleep: Box::new(std::thread::sleep),
        }
    }

    /// Replaces the sleep used for rate limiting and backoff.
    pub fn with_sleep(mut self, sleep: impl FnMut(Duration) + Send + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    fn interpret(&self, r: &HttpResponse) -> Result<Answer, String> {
        if r.status == 429 {
            return Ok(Answer::Throttled);
        }
        if !(200..300).contains(&r.status) {
            return Err(format!("explorer returned HTTP {}", r.status));
        }
        let v: serde_json::Value =
            serde_json::from_str(&r.body).map_err(|e| format!("explorer response is not JSON: {e}"))?;
        match v.get(&self.config.result_field) {
            Some(serde_json::Value::Array(a)) => Ok(Answer::Exists(!a.is_empty())),
            Some(serde_json::Value::String(s)) if s.to_ascii_lowercase().contains("rate limit") => {
                Ok(Answer::Throttled)
            }
            other => {
                let msg = v
                    .get(&self.config.message_field)
                    .and_then(|m| m.as_str())
                    .or(other.and_then(|o| o.as_str()))
                    .unwrap_or("unexpected response shape");
                Err(format!("explorer error: {msg}"))
            }
        }
    }

    pub fn has_transactions(&mut self, address: &[u8; 20]) -> Result<bool, RegistryUnavailable> {
        let url = self.config.request_url(address);
        let mut backoff = self.config.initial_backoff;
        for attempt in 0..=self.config.max_retries {
            let wait = self.bucket.take(Instant::now());
            if !wait.is_zero() {
                (self.sleep)(wait);
            }
            let resp = self.transport.get(&url).map_err(RegistryUnavailable)?;
            match self.interpret(&resp).map_err(RegistryUnavailable)? {
                Answer::Exists(e) => return Ok(e),
                Answer::Throttled if attempt < self.config.max_retries => {
                    (self.sleep)(backoff);
                    backoff *= 2;
                }
                Answer::Throttled => {}
            }
        }
        Err(RegistryUnavailable(format!(
            "explorer kept throttling after {} retries",
            self.config.max_retries
        )))
    }
}
