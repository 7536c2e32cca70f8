//! Blocking JSON-over-HTTP client shared by the remote detector and the
//! remote recognizer, plus the in-flight limiter both draw from.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};

/// Caps the number of concurrent remote requests across all workers.
#[derive(Debug)]
pub struct InFlightLimiter {
    max: usize,
    active: Mutex<usize>,
    freed: Condvar,
    peak: AtomicUsize,
}

pub struct Permit<'a> {
    limiter: &'a InFlightLimiter,
}

impl InFlightLimiter {
    pub fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
            peak: AtomicUsize::new(0),
        }
    }

    pub fn max(&self) -> usize {
        self.max
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut active = self.active.lock().expect("limiter lock poisoned");
        while *active >= self.max {
            active = self.freed.wait(active).expect("limiter lock poisoned");
        }
        *active += 1;
        self.peak.fetch_max(*active, Ordering::Relaxed);
        Permit { limiter: self }
    }

    /// Highest number of permits held at once so far.
    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::Relaxed)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut active = self.limiter.active.lock().expect("limiter lock poisoned");
        *active -= 1;
        self.limiter.freed.notify_one();
    }
}

/// Transport settings common to every remote service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    pub timeout_s: f64,
    /// Extra attempts after the first failure.
    pub retries: u32,
    /// First backoff delay; doubled on each further retry.
    pub backoff_base_ms: u64,
    /// Name of the environment variable holding a bearer token.
    pub auth_env: Option<String>,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            timeout_s: 60.0,
            retries: 2,
            backoff_base_ms: 200,
            auth_env: None,
        }
    }
}

#[cfg(feature = "remote")]
pub use client::JsonClient;

#[cfg(feature = "remote")]
mod client {
    use std::time::Duration;

    use super::HttpSettings;
    use crate::error::{Error, Result};

    #[derive(Debug, Clone)]
    pub struct JsonClient {
        http: reqwest::blocking::Client,
        settings: HttpSettings,
        token: Option<String>,
    }

    enum Failure {
        Timeout(String),
        Retryable(String),
        Fatal(String),
    }

    impl JsonClient {
        pub fn new(settings: HttpSettings) -> Result<Self> {
            let http = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs_f64(settings.timeout_s.max(0.001)))
                .build()
                .map_err(|e| Error::Config(format!("cannot build HTTP client: {e}")))?;
            let token = settings.auth_env.as_ref().and_then(|var| std::env::var(var).ok());
            Ok(Self { http, settings, token })
        }

        /// POSTs `body` and returns the parsed JSON response, retrying
        /// timeouts, connection errors, 429 and 5xx responses.
        pub fn post_json(&self, url: &str, body: &serde_json::Value) -> Result<serde_json::Value> {
            let attempts = self.settings.retries + 1;
            let mut last = Failure::Fatal("no attempt made".into());
            for attempt in 0..attempts {
                if attempt > 0 {
                    let delay = self.settings.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(16));
                    std::thread::sleep(Duration::from_millis(delay));
                }
                match self.attempt(url, body) {
                    Ok(v) => return Ok(v),
                    Err(Failure::Fatal(msg)) => return Err(Error::Backend(msg)),
                    Err(f) => {
                        tracing::debug!(url, attempt, "remote call failed, retrying");
                        last = f;
                    }
                }
            }
            Err(match last {
                Failure::Timeout(detail) => Error::BackendTimeout { attempts, detail },
                Failure::Retryable(msg) | Failure::Fatal(msg) => Error::Backend(msg),
            })
        }

        fn attempt(&self, url: &str, body: &serde_json::Value) -> std::result::Result<serde_json::Value, Failure> {
            let mut req = self.http.post(url).json(body);
            if let Some(token) = &self.token {
                req = req.bearer_auth(token);
            }
            let resp = req.send().map_err(|e| classify(&e))?;
            let status = resp.status();
            if status.is_server_error() || status.as_u16() == 429 {
                return Err(Failure::Retryable(format!("{url}: HTTP {status}")));
            }
            if !status.is_success() {
                return Err(Failure::Fatal(format!("{url}: HTTP {status}")));
            }
            resp.json::<serde_json::Value>().map_err(|e| classify(&e))
        }
    }

    fn classify(e: &reqwest::Error) -> Failure {
        if e.is_timeout() {
            Failure::Timeout(e.to_string())
        } else if e.is_connect() || e.is_request() || e.is_body() {
            Failure::Retryable(e.to_string())
        } else if e.is_decode() {
            Failure::Fatal(format!("malformed response: {e}"))
        } else {
            Failure::Retryable(e.to_string())
        }
    }
}
