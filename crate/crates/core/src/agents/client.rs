//! Transport for agent prompts.
//!
//! Everything above this layer works in terms of [`LlmClient`]: hand the
//! model a prompt, get the completion text back. The trait keeps the
//! pipeline testable; deterministic stubs stand in for a live endpoint.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ClientError {
    /// The endpoint could not be reached at all.
    #[error("llm endpoint unreachable: {0}")]
    Unreachable(String),
    /// The endpoint answered but the request failed.
    #[error("llm request failed: {0}")]
    Failed(String),
    /// The endpoint returned a completion with no usable content.
    #[error("llm returned an empty completion")]
    Empty,
}

/// A blocking completion client. One prompt in, one completion out.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ClientError>;
}

/// Chat-completion client over HTTP.
///
/// Speaks the minimal widely-shared contract: POST a JSON body with
/// `model` and a single user message, read
/// `choices[0].message.content` from the response.
pub struct HttpClient {
    endpoint: String,
    model: String,
    token: Option<String>,
    inner: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpClient {
            endpoint: endpoint.into(),
            model: model.into(),
            token: std::env::var("TLABENCH_LLM_TOKEN").ok(),
            inner: reqwest::blocking::Client::new(),
        }
    }

    pub fn with_token(mut self, token: impl Into<String>) -> Self {
        self.token = Some(token.into());
        self
    }
}

impl LlmClient for HttpClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.inner.post(&self.endpoint).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| ClientError::Unreachable(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| ClientError::Failed(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Failed(format!("{status}: {text}")));
        }
        let parsed: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ClientError::Failed(e.to_string()))?;
        let content = parsed["choices"][0]["message"]["content"]
            .as_str()
            .unwrap_or("")
            .to_string();
        if content.trim().is_empty() {
            return Err(ClientError::Empty);
        }
        Ok(content)
    }
}

/// Replays a fixed sequence of canned completions and records every
/// prompt it receives. Calls past the end fail with
/// [`ClientError::Empty`], which surfaces budget bugs in tests instead
/// of silently looping.
pub struct StubClient {
    responses: Vec<Result<String, ClientError>>,
    cursor: AtomicUsize,
    sent: Mutex<Vec<String>>,
}

impl StubClient {
    pub fn new(responses: Vec<String>) -> Self {
        Self::scripted(responses.into_iter().map(Ok).collect())
    }

    /// A stub whose canned responses include failures.
    pub fn scripted(responses: Vec<Result<String, ClientError>>) -> Self {
        StubClient {
            responses,
            cursor: AtomicUsize::new(0),
            sent: Mutex::new(Vec::new()),
        }
    }

    /// Number of completions handed out so far.
    pub fn calls(&self) -> usize {
        self.cursor.load(Ordering::SeqCst).min(self.responses.len())
    }

    /// Total number of `complete` invocations, including ones that ran
    /// past the canned list.
    pub fn attempts(&self) -> usize {
        self.cursor.load(Ordering::SeqCst)
    }

    /// Prompts received so far, in call order.
    pub fn sent(&self) -> Vec<String> {
        self.sent.lock().unwrap().clone()
    }
}

impl LlmClient for StubClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        self.sent.lock().unwrap().push(prompt.to_string());
        let i = self.cursor.fetch_add(1, Ordering::SeqCst);
        match self.responses.get(i) {
            Some(r) => r.clone(),
            None => Err(ClientError::Empty),
        }
    }
}

/// Caps the number of in-flight `complete` calls on the wrapped client.
///
/// Evaluation fans out across candidate models; a shared limiter keeps
/// the fan-out from hammering a rate-limited endpoint.
pub struct LimitedClient<C> {
    inner: C,
    max_in_flight: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl<C> LimitedClient<C> {
    pub fn new(inner: C, max_in_flight: usize) -> Self {
        LimitedClient {
            inner,
            max_in_flight: max_in_flight.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }
}

impl<C: LlmClient> LlmClient for LimitedClient<C> {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.max_in_flight {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        drop(n);
        let result = self.inner.complete(prompt);
        let mut n = self.in_flight.lock().unwrap();
        *n -= 1;
        drop(n);
        self.freed.notify_one();
        result
    }
}

/// Strips a leading/trailing markdown code fence from a completion, if
/// present. Models often wrap structured output in ```yaml ... ```
/// even when told not to.
pub fn strip_code_fence(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    // Drop the info string on the opening fence line.
    let body = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => return trimmed,
    };
    match body.rfind("```") {
        Some(i) => body[..i].trim(),
        None => trimmed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_replays_in_order_then_fails() {
        let stub = StubClient::new(vec!["a".into(), "b".into()]);
        assert_eq!(stub.complete("x").unwrap(), "a");
        assert_eq!(stub.complete("x").unwrap(), "b");
        assert!(matches!(stub.complete("x"), Err(ClientError::Empty)));
        assert_eq!(stub.calls(), 2);
        assert_eq!(stub.attempts(), 3);
    }

    #[test]
    fn limiter_passes_results_through() {
        let limited = LimitedClient::new(StubClient::new(vec!["ok".into()]), 2);
        assert_eq!(limited.complete("x").unwrap(), "ok");
    }

    #[test]
    fn limiter_caps_concurrency() {
        use std::sync::Arc;

        struct Slow {
            active: AtomicUsize,
            peak: AtomicUsize,
        }
        impl LlmClient for Slow {
            fn complete(&self, _prompt: &str) -> Result<String, ClientError> {
                let now = self.active.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(std::time::Duration::from_millis(20));
                self.active.fetch_sub(1, Ordering::SeqCst);
                Ok("done".into())
            }
        }

        let limited = Arc::new(LimitedClient::new(
            Slow {
                active: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
            },
            2,
        ));
        let handles: Vec<_> = (0..6)
            .map(|_| {
                let c = Arc::clone(&limited);
                std::thread::spawn(move || c.complete("x").unwrap())
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(limited.inner.peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn fence_stripping_handles_plain_and_fenced() {
        assert_eq!(strip_code_fence("plain"), "plain");
        assert_eq!(strip_code_fence("```yaml\nkey: v\n```"), "key: v");
        assert_eq!(strip_code_fence("```\nbody\n```\n"), "body");
        assert_eq!(strip_code_fence("``` incomplete"), "``` incomplete");
    }
}
