use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::BackendError;

pub const DEFAULT_TEMPERATURE: f64 = 0.5;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2500;
pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;
pub const DEFAULT_BACKOFF_MS: u64 = 1000;

fn default_endpoint() -> String {
    "https://api.openai.com/v1/chat/completions".into()
}

fn default_model() -> String {
    "gpt-4o-2024-05-13".into()
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

fn default_max_tokens() -> u32 {
    DEFAULT_MAX_OUTPUT_TOKENS
}

fn default_timeout() -> u64 {
    120
}

fn default_attempts() -> u32 {
    DEFAULT_MAX_ATTEMPTS
}

fn default_backoff() -> u64 {
    DEFAULT_BACKOFF_MS
}

/// Settings for the chat-completions keyframe selector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorConfig {
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model: String,
    /// Bearer token. Never read from or written to config files.
    #[serde(skip)]
    pub api_key: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Total attempts per request, including the first.
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    /// First retry delay; doubles on each further retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Sampling seed, sent only when set (not every endpoint honours it).
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            endpoint: default_endpoint(),
            model: default_model(),
            api_key: None,
            temperature: DEFAULT_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            timeout_secs: default_timeout(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            backoff_ms: DEFAULT_BACKOFF_MS,
            seed: None,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(BackendError::Usage(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(BackendError::Usage("max_output_tokens must be >= 1".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

fn default_server_url() -> String {
    "http://127.0.0.1:8000".into()
}

fn default_server_timeout() -> u64 {
    300
}

/// Settings for the segmentation/propagation model server.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelServerConfig {
    #[serde(default = "default_server_url")]
    pub url: String,
    #[serde(default = "default_server_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

impl Default for ModelServerConfig {
    fn default() -> Self {
        Self {
            url: default_server_url(),
            timeout_secs: default_server_timeout(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            backoff_ms: DEFAULT_BACKOFF_MS,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reported_settings() {
        let c = SelectorConfig::default();
        assert_eq!(c.temperature, 0.5);
        assert_eq!(c.max_output_tokens, 2500);
        assert_eq!(c.max_attempts, 3);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn validation() {
        let mut c = SelectorConfig {
            temperature: -0.1,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.temperature = f64::NAN;
        assert!(c.validate().is_err());
        c.temperature = 0.0;
        c.max_output_tokens = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_rejects_unknown_and_skips_key() {
        let c: SelectorConfig = toml::from_str("model = \"m\"\ntemperature = 0.2").unwrap();
        assert_eq!((c.model.as_str(), c.temperature), ("m", 0.2));
        assert!(toml::from_str::<SelectorConfig>("modle = \"m\"").is_err());
        assert!(toml::from_str::<SelectorConfig>("api_key = \"s\"").is_err());
    }
}
