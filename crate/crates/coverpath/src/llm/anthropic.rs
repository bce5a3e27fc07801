//! Anthropic Messages API adapter.
//!
//! The Messages API wants alternating roles, so the ordered user-message
//! history is folded into a single user turn.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::http::HttpClient;
use super::{with_retry, ChatProvider, ChatRequest, ChatResponse, LlmError, RetryPolicy};

const DEFAULT_BASE_URL: &str = "https://api.anthropic.com";
const API_VERSION: &str = "2023-06-01";
const MAX_TOKENS: u32 = 4096;

pub struct AnthropicProvider {
    api_key: String,
    base_url: String,
    client: HttpClient,
    retry: RetryPolicy,
}

#[derive(Debug, Deserialize)]
struct MessagesReply {
    content: Vec<ContentBlock>,
}

#[derive(Debug, Deserialize)]
struct ContentBlock {
    #[serde(default)]
    text: String,
}

impl AnthropicProvider {
    pub fn new(
        api_key: String,
        base_url: Option<String>,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Self {
        AnthropicProvider {
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
        let user_turn = req.user_messages.join("\n\n");
        let body = json!({
            "model": req.model_id,
            "system": req.system_prompt,
            "messages": [{"role": "user", "content": user_turn}],
            "max_tokens": MAX_TOKENS,
            "temperature": req.temperature,
        });
        let url = format!("{}/v1/messages", self.base_url);
        let reply = self.client.post_json(
            &url,
            &[
                ("x-api-key", self.api_key.as_str()),
                ("anthropic-version", API_VERSION),
            ],
            &body,
        )?;
        let parsed: MessagesReply = reply.parse_success()?;
        if parsed.content.is_empty() {
            return Err(LlmError::MalformedResponse("empty content array".into()));
        }
        Ok(parsed
            .content
            .into_iter()
            .map(|b| b.text)
            .collect::<Vec<_>>()
            .join(""))
    }
}

impl ChatProvider for AnthropicProvider {
    fn name(&self) -> &str {
        "anthropic"
    }

    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let started = Instant::now();
        let text = with_retry(&self.retry, &mut std::thread::sleep, || self.attempt(req))?;
        Ok(ChatResponse {
            text: text.trim_end().to_string(),
            latency: started.elapsed(),
            provider_meta: BTreeMap::from([
                ("provider".to_string(), "anthropic".to_string()),
                ("model".to_string(), req.model_id.clone()),
            ]),
        })
    }
}
