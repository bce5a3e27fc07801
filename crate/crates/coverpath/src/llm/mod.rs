//! Provider-agnostic chat-completion client.
//!
//! Every planner call goes through the [`ChatProvider`] trait. Live adapters
//! speak the OpenAI-compatible, Gemini, and Anthropic HTTP schemas; the
//! [`ScriptedOracle`] replays canned responses for deterministic tests and
//! offline experiments. Providers are selected by name through
//! [`ProviderConfig`].

mod anthropic;
mod gemini;
mod http;
mod openai;
mod scripted;

pub use anthropic::AnthropicProvider;
pub use gemini::GeminiProvider;
pub use openai::OpenAiProvider;
pub use scripted::ScriptedOracle;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

pub const OPENAI_KEY_ENV: &str = "COVERPATH_OPENAI_KEY";
pub const GEMINI_KEY_ENV: &str = "COVERPATH_GEMINI_KEY";
pub const ANTHROPIC_KEY_ENV: &str = "COVERPATH_ANTHROPIC_KEY";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("network error: {0}")]
    Network(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("scripted oracle has no responses left")]
    ScriptExhausted,
    #[error("scripted oracle needs at least one response")]
    EmptyScript,
    #[error("script file error: {0}")]
    ScriptFile(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Network(_) | LlmError::RateLimited(_))
    }
}

/// One chat completion request: a system prompt plus an ordered user-message
/// history (retries append to it).
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub user_messages: Vec<String>,
    pub temperature: f64,
    pub model_id: String,
}

impl ChatRequest {
    pub fn new(
        system_prompt: impl Into<String>,
        user_messages: Vec<String>,
        temperature: f64,
        model_id: impl Into<String>,
    ) -> Result<Self, LlmError> {
        if user_messages.is_empty() {
            return Err(LlmError::InvalidRequest(
                "at least one user message is required".into(),
            ));
        }
        if !(0.0..=2.0).contains(&temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature must be in [0, 2], got {temperature}"
            )));
        }
        Ok(ChatRequest {
            system_prompt: system_prompt.into(),
            user_messages,
            temperature,
            model_id: model_id.into(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ChatResponse {
    /// Model text verbatim, minus trailing whitespace.
    pub text: String,
    pub latency: Duration,
    pub provider_meta: BTreeMap<String, String>,
}

/// A chat-completion backend. Implementations must be safe to call from
/// parallel episode workers.
pub trait ChatProvider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

/// Retry schedule for transient provider failures: exponential backoff,
/// doubling from `base_backoff`, at most `max_retries` retries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_backoff: Duration::from_secs(1),
        }
    }
}

/// Run `attempt` under a retry policy. `sleep` is injectable so tests can
/// observe the schedule without waiting.
pub(crate) fn with_retry<T>(
    policy: &RetryPolicy,
    sleep: &mut dyn FnMut(Duration),
    mut attempt: impl FnMut() -> Result<T, LlmError>,
) -> Result<T, LlmError> {
    let mut backoff = policy.base_backoff;
    let mut retries = 0;
    loop {
        match attempt() {
            Ok(value) => return Ok(value),
            Err(err) if err.is_retryable() && retries < policy.max_retries => {
                sleep(backoff);
                backoff = backoff.saturating_mul(2);
                retries += 1;
            }
            Err(err) => return Err(err),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    OpenAi,
    Gemini,
    Anthropic,
    Scripted,
}

impl ProviderKind {
    pub fn key_env(self) -> Option<&'static str> {
        match self {
            ProviderKind::OpenAi => Some(OPENAI_KEY_ENV),
            ProviderKind::Gemini => Some(GEMINI_KEY_ENV),
            ProviderKind::Anthropic => Some(ANTHROPIC_KEY_ENV),
            ProviderKind::Scripted => None,
        }
    }
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "openai" => Ok(ProviderKind::OpenAi),
            "gemini" => Ok(ProviderKind::Gemini),
            "anthropic" => Ok(ProviderKind::Anthropic),
            "scripted" => Ok(ProviderKind::Scripted),
            other => Err(format!(
                "unknown provider kind {other:?} (expected openai, gemini, anthropic, or scripted)"
            )),
        }
    }
}

/// How to construct a provider: which adapter, where to reach it, and how to
/// authenticate. API keys fall back to the per-provider environment variable.
#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    /// Script file for the scripted kind.
    pub script: Option<PathBuf>,
}

impl ProviderConfig {
    pub fn new(kind: ProviderKind) -> Self {
        ProviderConfig {
            kind,
            base_url: None,
            api_key: None,
            timeout: Duration::from_secs(60),
            retry: RetryPolicy::default(),
            script: None,
        }
    }

    fn resolve_key(&self) -> Result<String, LlmError> {
        if let Some(key) = &self.api_key {
            return Ok(key.clone());
        }
        let env = self
            .kind
            .key_env()
            .expect("only live providers need a key");
        std::env::var(env).map_err(|_| {
            LlmError::Auth(format!("no API key given and {env} is not set"))
        })
    }

    /// Instantiate the configured provider.
    pub fn build(&self) -> Result<Box<dyn ChatProvider>, LlmError> {
        match self.kind {
            ProviderKind::Scripted => {
                let path = self.script.as_ref().ok_or_else(|| {
                    LlmError::ScriptFile("scripted provider requires a script file".into())
                })?;
                Ok(Box::new(ScriptedOracle::from_file(path)?))
            }
            ProviderKind::OpenAi => Ok(Box::new(OpenAiProvider::new(
                self.resolve_key()?,
                self.base_url.clone(),
                self.timeout,
                self.retry,
            ))),
            ProviderKind::Gemini => Ok(Box::new(GeminiProvider::new(
                self.resolve_key()?,
                self.base_url.clone(),
                self.timeout,
                self.retry,
            ))),
            ProviderKind::Anthropic => Ok(Box::new(AnthropicProvider::new(
                self.resolve_key()?,
                self.base_url.clone(),
                self.timeout,
                self.retry,
            ))),
        }
    }
}
