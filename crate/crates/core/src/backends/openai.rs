//! Keyframe selector over an OpenAI-compatible `/v1/chat/completions` endpoint.
//!
//! Each call is one user turn carrying the prompt text and a PNG as a base64 data
//! URL, which works for hosted GPT-4o-class models and for local open-model servers
//! that speak the same API.

use std::time::Duration;

use base64::Engine;
use reqwest::blocking::Client;
use serde::Deserialize;
use serde_json::{json, Value};
use tracing::debug;

use super::retry::{self, RetryPolicy};
use super::{BackendError, KeyframeSelector, SelectorConfig};
use crate::io::encode_frame_png;
use crate::model::Frame;
use crate::sampling::GridImage;

pub struct ChatCompletionsSelector {
    cfg: SelectorConfig,
    http: Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<Value>,
}

impl ChatCompletionsSelector {
    pub fn new(cfg: SelectorConfig) -> Result<Self, BackendError> {
        cfg.validate()?;
        let http = retry::client(cfg.timeout())?;
        Ok(Self { cfg, http })
    }

    pub fn config(&self) -> &SelectorConfig {
        &self.cfg
    }

    /// Request body for one prompt + image turn.
    pub fn request_body(&self, prompt: &str, png: &[u8]) -> Value {
        let data_url = format!(
            "data:image/png;base64,{}",
            base64::engine::general_purpose::STANDARD.encode(png)
        );
        let mut body = json!({
            "model": self.cfg.model,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "text", "text": prompt},
                    {"type": "image_url", "image_url": {"url": data_url}},
                ],
            }],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
        });
        if let Some(seed) = self.cfg.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn complete(&self, prompt: &str, png: &[u8]) -> Result<String, BackendError> {
        let body = self.request_body(prompt, png);
        let policy = RetryPolicy {
            max_attempts: self.cfg.max_attempts,
            backoff: Duration::from_millis(self.cfg.backoff_ms),
        };
        let resp = retry::send(policy, "chat completion", || {
            let req = self.http.post(&self.cfg.endpoint).json(&body);
            match &self.cfg.api_key {
                Some(key) => req.bearer_auth(key),
                None => req,
            }
        })?;
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| BackendError::Decode(format!("chat completion body: {e}")))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .map(content_text)
            .unwrap_or_default();
        if content.trim().is_empty() {
            return Err(BackendError::EmptyResponse);
        }
        debug!(chars = content.len(), "selector answered");
        Ok(content)
    }
}

/// `content` is either a string or a list of typed parts.
fn content_text(content: Value) -> String {
    match content {
        Value::String(s) => s,
        Value::Array(parts) => parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join(""),
        _ => String::new(),
    }
}

impl KeyframeSelector for ChatCompletionsSelector {
    fn select_keyframes(&self, grid: &GridImage, prompt: &str) -> Result<String, BackendError> {
        let png = grid.to_png().map_err(|e| BackendError::Usage(e.to_string()))?;
        self.complete(prompt, &png)
    }

    fn judge_frame(&self, frame: &Frame, prompt: &str) -> Result<String, BackendError> {
        let png = encode_frame_png(frame).map_err(|e| BackendError::Usage(e.to_string()))?;
        self.complete(prompt, &png)
            .map_err(|e| e.context(format!("frame {}", frame.index())))
    }
}
