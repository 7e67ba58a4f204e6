//! Blocking JSON-over-HTTP client shared by the external translator and
//! classifier providers.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::Value;

#[derive(Clone, Debug)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 3, base_backoff: Duration::from_millis(100), timeout: Duration::from_secs(10) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RemoteError {
    Timeout,
    Status(u16),
    Transport(String),
    Malformed(String),
}

impl std::fmt::Display for RemoteError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RemoteError::Timeout => f.write_str("request timed out"),
            RemoteError::Status(c) => write!(f, "HTTP status {c}"),
            RemoteError::Transport(m) => write!(f, "transport error: {m}"),
            RemoteError::Malformed(m) => write!(f, "malformed response: {m}"),
        }
    }
}

/// Counting semaphore bounding concurrent in-flight requests.
pub struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

pub struct Permit<'a>(&'a Limiter);

impl Limiter {
    pub fn new(n: usize) -> Self {
        Limiter { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

pub struct JsonClient {
    agent: ureq::Agent,
    policy: RetryPolicy,
    limiter: Limiter,
}

impl JsonClient {
    pub fn new(policy: RetryPolicy, max_in_flight: usize) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(policy.timeout).build();
        JsonClient { agent, policy, limiter: Limiter::new(max_in_flight) }
    }

    /// POSTs `body`, retrying timeouts, transport failures and 5xx statuses
    /// with exponential backoff.
    pub fn post(&self, url: &str, body: &Value) -> Result<Value, RemoteError> {
        let _permit = self.limiter.acquire();
        let mut attempt = 0;
        loop {
            match self.post_once(url, body) {
                Ok(v) => return Ok(v),
                Err(e @ RemoteError::Malformed(_)) => return Err(e),
                Err(RemoteError::Status(code)) if code < 500 => return Err(RemoteError::Status(code)),
                Err(e) => {
                    if attempt >= self.policy.max_retries {
                        return Err(e);
                    }
                    thread::sleep(self.policy.base_backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
            }
        }
    }

    fn post_once(&self, url: &str, body: &Value) -> Result<Value, RemoteError> {
        match self.agent.post(url).send_json(body.clone()) {
            Ok(resp) => {
                let text = resp.into_string().map_err(|e| RemoteError::Transport(e.to_string()))?;
                serde_json::from_str(&text).map_err(|e| RemoteError::Malformed(e.to_string()))
            }
            Err(ureq::Error::Status(code, _)) => Err(RemoteError::Status(code)),
            Err(ureq::Error::Transport(t)) => {
                let msg = t.to_string();
                if msg.contains("timed out") || msg.contains("Timeout") || msg.contains("WouldBlock") {
                    Err(RemoteError::Timeout)
                } else {
                    Err(RemoteError::Transport(msg))
                }
            }
        }
    }
}

pub fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}
