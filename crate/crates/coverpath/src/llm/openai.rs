//! OpenAI-compatible chat completions adapter (`/v1/chat/completions`).

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::http::HttpClient;
use super::{with_retry, ChatProvider, ChatRequest, ChatResponse, LlmError, RetryPolicy};

const DEFAULT_BASE_URL: &str = "https://api.openai.com";

pub struct OpenAiProvider {
    api_key: String,
    base_url: String,
    client: HttpClient,
    retry: RetryPolicy,
}

#[derive(Debug, Deserialize)]
struct CompletionReply {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Debug, Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

impl OpenAiProvider {
    pub fn new(
        api_key: String,
        base_url: Option<String>,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Self {
        OpenAiProvider {
            api_key,
            base_url: base_url
                .unwrap_or_else(|| DEFAULT_BASE_URL.to_string())
                .trim_end_matches('/')
                .to_string(),
            client: HttpClient::new(timeout),
            retry,
        }
    }

    fn attempt(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let mut messages = vec![json!({"role": "system", "content": req.system_prompt})];
        messages.extend(
            req.user_messages
                .iter()
                .map(|m| json!({"role": "user", "content": m})),
        );
        let body = json!({
            "model": req.model_id,
            "messages": messages,
            "temperature": req.temperature,
        });
        let url = format!("{}/v1/chat/completions", self.base_url);
        let auth = format!("Bearer {}", self.api_key);
        let reply = self
            .client
            .post_json(&url, &[("authorization", auth.as_str())], &body)?;
        let parsed: CompletionReply = reply.parse_success()?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::MalformedResponse("no choices in completion".into()))
    }
}

impl ChatProvider for OpenAiProvider {
    fn name(&self) -> &str {
        "openai"
    }

    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let started = Instant::now();
        let text = with_retry(&self.retry, &mut std::thread::sleep, || self.attempt(req))?;
        Ok(ChatResponse {
            text: text.trim_end().to_string(),
            latency: started.elapsed(),
            provider_meta: BTreeMap::from([
                ("provider".to_string(), "openai".to_string()),
                ("model".to_string(), req.model_id.clone()),
            ]),
        })
    }
}
