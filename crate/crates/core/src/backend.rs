//! JSON-over-HTTP plumbing shared by the remote NER and embedding backends.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("backend {backend} unavailable: {reason}")]
    Unavailable { backend: String, reason: String },
    #[error("backend protocol error: {0}")]
    Protocol(String),
}

/// Where a backend lives: the built-in deterministic stub or a remote URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BackendSpec {
    Stub,
    Url(String),
}

impl std::str::FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("stub") {
            Ok(BackendSpec::Stub)
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(BackendSpec::Url(s.to_owned()))
        } else {
            Err(format!("backend must be \"stub\" or an http(s) URL, got {s:?}"))
        }
    }
}

impl TryFrom<String> for BackendSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BackendSpec> for String {
    fn from(b: BackendSpec) -> String {
        match b {
            BackendSpec::Stub => "stub".into(),
            BackendSpec::Url(u) => u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Attempts after the first one.
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            retries: 2,
            backoff_ms: 200,
            timeout_ms: 60_000,
        }
    }
}

/// A blocking JSON POST client with retry on transport failures and 5xx.
#[derive(Debug, Clone)]
pub struct JsonClient {
    url: String,
    agent: ureq::Agent,
    policy: RetryPolicy,
}

impl JsonClient {
    pub fn new(url: impl Into<String>, policy: RetryPolicy) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(policy.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url: url.into(),
            agent,
            policy,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        body: &Req,
    ) -> Result<Resp, BackendError> {
        let mut last = String::new();
        for attempt in 0..=self.policy.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(
                    self.policy.backoff_ms << (attempt - 1).min(6),
                ));
            }
            let mut resp = match self.agent.post(&self.url).send_json(body) {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            if status >= 500 {
                last = format!("HTTP {status}");
                continue;
            }
            if status >= 400 {
                return Err(BackendError::Protocol(format!("HTTP {status} from {}", self.url)));
            }
            return resp
                .body_mut()
                .with_config()
                .limit(u64::MAX)
                .read_json::<Resp>()
                .map_err(|e| BackendError::Protocol(format!("malformed reply: {e}")));
        }
        Err(BackendError::Unavailable {
            backend: self.url.clone(),
            reason: last,
        })
    }
}
