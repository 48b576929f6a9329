//! `reasonseg.toml` settings with environment and flag overrides.
//!
//! Precedence, highest first: command-line flags, environment, config file,
//! built-in defaults. The environment carries secrets (the selector API key) and a
//! few endpoint settings; nothing else is read from it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{ModelServerConfig, SelectorConfig};
use crate::pipeline::{RunConfig, DEFAULT_ONLINE_XI};

pub const ENV_API_KEY: &str = "REASONSEG_API_KEY";
pub const ENV_OPENAI_API_KEY: &str = "OPENAI_API_KEY";
pub const ENV_SELECTOR_ENDPOINT: &str = "REASONSEG_SELECTOR_ENDPOINT";
pub const ENV_MODEL_SERVER_URL: &str = "REASONSEG_MODEL_SERVER_URL";
pub const ENV_LOG: &str = "REASONSEG_LOG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid setting: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    /// Judgment period in frames.
    pub xi: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self { xi: DEFAULT_ONLINE_XI }
    }
}

/// Runs every agent from a mock fixture scenario instead of remote services.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockConfig {
    pub scenario: String,
    /// Fixture file; the built-in fixture when absent.
    #[serde(default)]
    pub fixture: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    /// `tracing` filter directive, e.g. `info` or `reasonseg=debug`.
    pub log_level: String,
    pub selector: SelectorConfig,
    pub model_server: ModelServerConfig,
    pub offline: RunConfig,
    pub online: OnlineConfig,
    pub mock: Option<MockConfig>,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            log_level: "info".into(),
            selector: SelectorConfig::default(),
            model_server: ModelServerConfig::default(),
            offline: RunConfig::default(),
            online: OnlineConfig::default(),
            mock: None,
        }
    }
}

/// Values given on the command line; `None` leaves lower layers in effect.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub log_level: Option<String>,
    pub selector_endpoint: Option<String>,
    pub selector_model: Option<String>,
    pub seed: Option<u64>,
    pub model_server_url: Option<String>,
    pub candidate_target: Option<usize>,
    pub grid_side_cap: Option<u32>,
    pub workers: Option<usize>,
    pub xi: Option<usize>,
    pub mock_scenario: Option<String>,
    pub mock_fixture: Option<PathBuf>,
}

impl CliConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn apply_env(&mut self, env: &dyn Fn(&str) -> Option<String>) {
        let get = |k: &str| env(k).filter(|v| !v.trim().is_empty());
        if let Some(key) = get(ENV_API_KEY).or_else(|| get(ENV_OPENAI_API_KEY)) {
            self.selector.api_key = Some(key);
        }
        if let Some(v) = get(ENV_SELECTOR_ENDPOINT) {
            self.selector.endpoint = v;
        }
        if let Some(v) = get(ENV_MODEL_SERVER_URL) {
            self.model_server.url = v;
        }
        if let Some(v) = get(ENV_LOG) {
            self.log_level = v;
        }
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        set(&mut self.log_level, &o.log_level);
        set(&mut self.selector.endpoint, &o.selector_endpoint);
        set(&mut self.selector.model, &o.selector_model);
        if o.seed.is_some() {
            self.selector.seed = o.seed;
        }
        set(&mut self.model_server.url, &o.model_server_url);
        set(&mut self.offline.candidate_target, &o.candidate_target);
        set(&mut self.offline.grid_side_cap, &o.grid_side_cap);
        set(&mut self.offline.workers, &o.workers);
        set(&mut self.online.xi, &o.xi);
        if let Some(scenario) = &o.mock_scenario {
            self.mock = Some(MockConfig {
                scenario: scenario.clone(),
                fixture: o.mock_fixture.clone(),
            });
        } else if let (Some(mock), Some(fixture)) = (self.mock.as_mut(), &o.mock_fixture) {
            mock.fixture = Some(fixture.clone());
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(ConfigError::Invalid(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        positive("offline.candidate_target", self.offline.candidate_target)?;
        positive("offline.grid_side_cap", self.offline.grid_side_cap as usize)?;
        positive("offline.workers", self.offline.workers)?;
        positive("online.xi", self.online.xi)?;
        positive("selector.max_attempts", self.selector.max_attempts as usize)?;
        self.selector
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        tracing_subscriber::EnvFilter::try_new(&self.log_level)
            .map_err(|e| ConfigError::Invalid(format!("log_level {:?}: {e}", self.log_level)))?;
        Ok(())
    }

    /// File (if any), then environment, then flags; validated.
    pub fn resolve(
        file: Option<&Path>,
        env: &dyn Fn(&str) -> Option<String>,
        overrides: &Overrides,
    ) -> Result<Self, ConfigError> {
        let mut cfg = match file {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        cfg.apply_env(env);
        cfg.apply_overrides(overrides);
        cfg.validate()?;
        Ok(cfg)
    }
}
