//! Gemini `generateContent` adapter.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::http::HttpClient;
use super::{with_retry, ChatProvider, ChatRequest, ChatResponse, LlmError, RetryPolicy};

const DEFAULT_BASE_URL: &str = "https://generativelanguage.googleapis.com";

pub struct GeminiProvider {
    api_key: String,
    base_url: String,
    client: HttpClient,
    retry: RetryPolicy,
}

#[derive(Debug, Deserialize)]
struct GenerateReply {
    candidates: Vec<Candidate>,
}

#[derive(Debug, Deserialize)]
struct Candidate {
    content: CandidateContent,
}

#[derive(Debug, Deserialize)]
struct CandidateContent {
    #[serde(default)]
    parts: Vec<Part>,
}

#[derive(Debug, Deserialize)]
struct Part {
    #[serde(default)]
    text: String,
}

impl GeminiProvider {
    pub fn new(
        api_key: String,
        base_url: Option<String>,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Self {
        GeminiProvider {
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
        let contents: Vec<_> = req
            .user_messages
            .iter()
            .map(|m| json!({"role": "user", "parts": [{"text": m}]}))
            .collect();
        let body = json!({
            "system_instruction": {"parts": [{"text": req.system_prompt}]},
            "contents": contents,
            "generationConfig": {"temperature": req.temperature},
        });
        let url = format!(
            "{}/v1beta/models/{}:generateContent",
            self.base_url, req.model_id
        );
        let reply = self
            .client
            .post_json(&url, &[("x-goog-api-key", self.api_key.as_str())], &body)?;
        let parsed: GenerateReply = reply.parse_success()?;
        let candidate = parsed
            .candidates
            .into_iter()
            .next()
            .ok_or_else(|| LlmError::MalformedResponse("no candidates in reply".into()))?;
        Ok(candidate
            .content
            .parts
            .into_iter()
            .map(|p| p.text)
            .collect::<Vec<_>>()
            .join(""))
    }
}

impl ChatProvider for GeminiProvider {
    fn name(&self) -> &str {
        "gemini"
    }

    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let started = Instant::now();
        let text = with_retry(&self.retry, &mut std::thread::sleep, || self.attempt(req))?;
        Ok(ChatResponse {
            text: text.trim_end().to_string(),
            latency: started.elapsed(),
            provider_meta: BTreeMap::from([
                ("provider".to_string(), "gemini".to_string()),
                ("model".to_string(), req.model_id.clone()),
            ]),
        })
    }
}
