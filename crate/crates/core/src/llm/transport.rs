//! Chat-completion transports.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::LlmError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
}

pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

/// Any function from request to reply, e.g. a scripted model in tests.
impl<F> ChatTransport for F
where
    F: Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        self(request)
    }
}

/// Returns canned assistant messages in order.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    replies: Mutex<VecDeque<String>>,
}

impl ReplayTransport {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
        }
    }

    /// Assistant messages of a `role: text` dialogue (see [`parse_dialogue`]).
    pub fn from_dialogue(text: &str) -> Self {
        Self::new(
            parse_dialogue(text)
                .into_iter()
                .filter(|m| m.role == Role::Assistant)
                .map(|m| m.content),
        )
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().expect("replay lock").len()
    }
}

impl ChatTransport for ReplayTransport {
    fn complete(&self, _request: &ChatRequest) -> Result<String, LlmError> {
        self.replies
            .lock()
            .expect("replay lock")
            .pop_front()
            .ok_or(LlmError::ReplayExhausted)
    }
}

/// Splits a dialogue whose messages start with `assistant: `, `user: ` or
/// `system: `. Lines without a prefix continue the previous message.
pub fn parse_dialogue(text: &str) -> Vec<ChatMessage> {
    let mut out: Vec<ChatMessage> = Vec::new();
    for line in text.lines() {
        let started = [
            ("assistant: ", Role::Assistant),
            ("user: ", Role::User),
            ("system: ", Role::System),
        ]
        .into_iter()
        .find_map(|(p, r)| line.strip_prefix(p).map(|rest| (r, rest)));
        match (started, out.last_mut()) {
            (Some((role, rest)), _) => out.push(ChatMessage::new(role, rest)),
            (None, Some(last)) => {
                last.content.push('\n');
                last.content.push_str(line);
            }
            (None, None) => {}
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub request: ChatRequest,
    pub response: Result<String, String>,
}

/// Wraps a transport and keeps every request and response.
pub struct RecordingTransport<T> {
    inner: T,
    log: Mutex<Vec<Exchange>>,
}

impl<T: ChatTransport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.log.lock().expect("log lock").clone()
    }

    /// One JSON object per exchange.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), LlmError> {
        for e in self.log.lock().expect("log lock").iter() {
            serde_json::to_writer(&mut w, e).map_err(|e| LlmError::Io(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| LlmError::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn into_inner(self) -> T {
        self.inner
    }
}

impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let r = self.inner.complete(request);
        self.log.lock().expect("log lock").push(Exchange {
            request: request.clone(),
            response: r.as_ref().map(Clone::clone).map_err(ToString::to_string),
        });
        r
    }
}

#[cfg(feature = "http")]
pub use http::HttpTransport;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use super::{ChatRequest, ChatTransport};
    use crate::llm::LlmError;

    /// OpenAI-compatible `/chat/completions` endpoint.
    pub struct HttpTransport {
        client: reqwest::blocking::Client,
        url: String,
        api_key: String,
        retries: u32,
    }

    impl HttpTransport {
        pub fn new(base_url: &str, api_key: String) -> Result<Self, LlmError> {
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .map_err(|e| LlmError::Transport(e.to_string()))?;
            Ok(Self {
                client,
                url: format!("{}/chat/completions", base_url.trim_end_matches('/')),
                api_key,
                retries: 3,
            })
        }

        /// Reads the key from the named environment variable.
        pub fn from_env(base_url: &str, key_var: &str) -> Result<Self, LlmError> {
            let key = std::env::var(key_var)
                .map_err(|_| LlmError::Transport(format!("{key_var} is not set")))?;
            Self::new(base_url, key)
        }

        pub fn with_retries(mut self, retries: u32) -> Self {
            self.retries = retries;
            self
        }

        fn once(&self, request: &ChatRequest) -> Result<String, LlmError> {
            let resp = self
                .client
                .post(&self.url)
                .bearer_auth(&self.api_key)
                .json(request)
                .send()
                .map_err(|e| LlmError::Transport(e.to_string()))?;
            let status = resp.status();
            let body: serde_json::Value = resp
                .json()
                .map_err(|e| LlmError::Transport(e.to_string()))?;
            if !status.is_success() {
                return Err(LlmError::Transport(format!("{status}: {body}")));
            }
            body["choices"][0]["message"]["content"]
                .as_str()
                .map(String::from)
                .ok_or_else(|| LlmError::Transport(format!("no content in {body}")))
        }
    }

    impl ChatTransport for HttpTransport {
        fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
            let mut last = None;
            for attempt in 0..=self.retries {
                match self.once(request) {
                    Ok(s) => return Ok(s),
                    Err(e) => {
                        last = Some(e);
                        std::thread::sleep(Duration::from_millis(500 << attempt.min(6)));
                    }
                }
            }
            Err(last.expect("at least one attempt"))
        }
    }
}
