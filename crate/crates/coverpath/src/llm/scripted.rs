//! Deterministic stand-in for a hosted LLM: replays canned responses in
//! order, then errors. The cursor is behind a mutex so a single oracle can be
//! shared across threads without reordering surprises within one episode.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use super::{ChatProvider, ChatRequest, ChatResponse, LlmError};

pub struct ScriptedOracle {
    responses: Mutex<VecDeque<String>>,
}

impl ScriptedOracle {
    pub fn new(responses: Vec<String>) -> Result<Self, LlmError> {
        if responses.is_empty() {
            return Err(LlmError::EmptyScript);
        }
        Ok(ScriptedOracle {
            responses: Mutex::new(responses.into()),
        })
    }

    /// Load a script file: one response per record, records separated by a
    /// line containing only `---`.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            LlmError::ScriptFile(format!("{}: {e}", path.as_ref().display()))
        })?;
        ScriptedOracle::new(parse_script(&text))
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().expect("oracle lock poisoned").len()
    }
}

/// Split script text into records on `---` separator lines.
pub fn parse_script(text: &str) -> Vec<String> {
    let mut records = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim_end() == "---" {
            records.push(current.join("\n"));
            current.clear();
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        records.push(current.join("\n"));
    }
    records
        .into_iter()
        .map(|r| r.trim_end().to_string())
        .filter(|r| !r.is_empty())
        .collect()
}

impl ChatProvider for ScriptedOracle {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, _req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let mut responses = self.responses.lock().expect("oracle lock poisoned");
        let text = responses.pop_front().ok_or(LlmError::ScriptExhausted)?;
        Ok(ChatResponse {
            text,
            latency: Duration::ZERO,
            provider_meta: BTreeMap::from([("provider".to_string(), "scripted".to_string())]),
        })
    }
}
