//! Client for an OpenAI-compatible chat-completion endpoint.

use std::time::Duration;

use serde_json::{json, Value};

use super::Reformatter;
use crate::error::{Error, Result};

pub const ENV_ENDPOINT: &str = "GAT_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "GAT_LLM_API_KEY";

pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;
const TOP_LOGPROBS: u32 = 5;

#[derive(Debug, Clone)]
pub struct ChatClient {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    max_attempts: u32,
    backoff: Duration,
    http: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, model: impl Into<String>) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::BadConfig(format!("http client: {e}")))?;
        Ok(ChatClient {
            endpoint: endpoint.into(),
            api_key,
            model: model.into(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            backoff: Duration::from_millis(500),
            http,
        })
    }

    /// Reads the endpoint and key from the environment.
    pub fn from_env(model: impl Into<String>) -> Result<Self> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| Error::BadConfig(format!("{ENV_ENDPOINT} is not set")))?;
        let key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        ChatClient::new(endpoint, key, model)
    }

    /// Attempts per request and the initial backoff (doubled after each failure).
    pub fn with_retries(mut self, max_attempts: u32, backoff: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.backoff = backoff;
        self
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Posts `body`, retrying transport errors, 429 and 5xx responses.
    pub fn post(&self, body: &Value) -> Result<Value> {
        let mut last = String::new();
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            let mut req = self.http.post(&self.endpoint).json(body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp.json::<Value>().map_err(|e| Error::RemoteFailure {
                            attempts: attempt + 1,
                            message: format!("bad response body: {e}"),
                        });
                    }
                    last = format!("HTTP {status}");
                    if !(status.is_server_error() || status.as_u16() == 429) {
                        return Err(Error::RemoteFailure { attempts: attempt + 1, message: last });
                    }
                }
                Err(e) => last = e.to_string(),
            }
            log::warn!("request to {} failed (attempt {}): {last}", self.endpoint, attempt + 1);
        }
        Err(Error::RemoteFailure { attempts: self.max_attempts, message: last })
    }

    /// Masses for each label, from the first generated token.
    pub fn label_masses(&self, prompt: &str, labels: &[Label]) -> Result<(Vec<f64>, Option<String>)> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
            "max_tokens": 1,
            "logprobs": true,
            "top_logprobs": TOP_LOGPROBS,
        });
        let resp = self.post(&body)?;
        let masses = masses_from_response(&resp, labels)?;
        Ok((masses, response_text(&resp)))
    }

    pub fn complete(&self, system: &str, user: &str) -> Result<String> {
        let mut messages = Vec::new();
        if !system.is_empty() {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": user}));
        let body = json!({"model": self.model, "messages": messages, "temperature": 0});
        let resp = self.post(&body)?;
        response_text(&resp)
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .ok_or_else(|| Error::RemoteFailure { attempts: 1, message: "empty completion".into() })
    }
}

/// An answer label: its option letter and an equivalent word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label {
    pub letter: &'static str,
    pub word: &'static str,
}

pub const NLV_LABELS: [Label; 2] = [
    Label { letter: "A", word: "TRUE" },
    Label { letter: "B", word: "FALSE" },
];

fn normalize_token(t: &str) -> String {
    t.trim()
        .trim_matches(|c: char| matches!(c, '.' | ')' | '(' | ':' | ',' | '"' | '\''))
        .to_ascii_uppercase()
}

fn label_of(token: &str, labels: &[Label]) -> Option<usize> {
    let t = normalize_token(token);
    labels.iter().position(|l| t == l.letter || t == l.word)
}

fn response_text(resp: &Value) -> Option<String> {
    resp.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
}

/// Extracts per-label masses from a chat-completion response.
///
/// Uses the top log-probabilities of the first token when present (summing
/// variants such as `A` and ` A.`); otherwise a one-hot vector on the
/// label named by the generated text.
pub fn masses_from_response(resp: &Value, labels: &[Label]) -> Result<Vec<f64>> {
    let mut masses = vec![0.0; labels.len()];
    if let Some(top) = resp
        .pointer("/choices/0/logprobs/content/0/top_logprobs")
        .and_then(Value::as_array)
    {
        for item in top {
            let (Some(tok), Some(lp)) = (
                item.get("token").and_then(Value::as_str),
                item.get("logprob").and_then(Value::as_f64),
            ) else {
                continue;
            };
            if let Some(i) = label_of(tok, labels) {
                masses[i] += lp.exp();
            }
        }
        if masses.iter().sum::<f64>() > 0.0 {
            return Ok(masses);
        }
    }
    let text = response_text(resp).unwrap_or_default();
    let first = text.split_whitespace().next().unwrap_or("");
    match label_of(first, labels) {
        Some(i) => {
            masses[i] = 1.0;
            Ok(masses)
        }
        None => Err(Error::RemoteFailure {
            attempts: 1,
            message: format!("no label in response {text:?}"),
        }),
    }
}

/// Reformatter backed by the chat endpoint and an operator-supplied
/// instruction.
#[derive(Debug, Clone)]
pub struct RemoteReformatter {
    client: ChatClient,
    instruction: String,
}

impl RemoteReformatter {
    pub fn new(client: ChatClient, instruction: impl Into<String>) -> Self {
        RemoteReformatter { client, instruction: instruction.into() }
    }
}

impl Reformatter for RemoteReformatter {
    fn reformat(&self, question: &str, option: &str) -> Result<String> {
        let user = format!("Question: {question}\nAnswer: {option}");
        self.client
            .complete(&self.instruction, &user)
            .map_err(|e| Error::ReformatterFailure(e.to_string()))
    }
}
