//! Shared HTTP plumbing for the live provider adapters.

use std::time::Duration;

use serde::de::DeserializeOwned;

use super::LlmError;

pub(crate) struct HttpClient {
    agent: ureq::Agent,
}

pub(crate) struct HttpReply {
    pub status: u16,
    pub body: String,
}

impl HttpClient {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        HttpClient {
            agent: config.into(),
        }
    }

    /// POST a JSON body; transport failures map to retryable network errors,
    /// HTTP statuses are returned for the adapter to interpret.
    pub fn post_json(
        &self,
        url: &str,
        headers: &[(&str, &str)],
        body: &serde_json::Value,
    ) -> Result<HttpReply, LlmError> {
        let mut req = self.agent.post(url);
        for (name, value) in headers {
            req = req.header(*name, *value);
        }
        let mut response = req
            .send_json(body)
            .map_err(|e| LlmError::Network(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Network(format!("reading response body: {e}")))?;
        Ok(HttpReply { status, body })
    }
}

impl HttpReply {
    /// Map the provider-agnostic status classes, then parse the body.
    pub fn parse_success<T: DeserializeOwned>(&self) -> Result<T, LlmError> {
        match self.status {
            200..=299 => serde_json::from_str(&self.body).map_err(|e| {
                LlmError::MalformedResponse(format!("{e}; body: {}", snippet(&self.body)))
            }),
            401 | 403 => Err(LlmError::Auth(format!(
                "HTTP {}: {}",
                self.status,
                snippet(&self.body)
            ))),
            429 => Err(LlmError::RateLimited(snippet(&self.body))),
            500..=599 => Err(LlmError::Network(format!(
                "HTTP {}: {}",
                self.status,
                snippet(&self.body)
            ))),
            other => Err(LlmError::MalformedResponse(format!(
                "unexpected HTTP {other}: {}",
                snippet(&self.body)
            ))),
        }
    }
}

fn snippet(body: &str) -> String {
    const LIMIT: usize = 200;
    if body.len() <= LIMIT {
        body.to_string()
    } else {
        let mut end = LIMIT;
        while !body.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &body[..end])
    }
}
