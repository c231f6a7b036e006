//! Server settings: one TOML file plus environment overrides.
//!
//! ```toml
//! bind = "127.0.0.1:8080"
//! data_dir = "data"
//! scenarios = []            # extra scenario files; the bundled one is always loaded
//! cors_origin = "*"
//!
//! [provider]
//! stub = true
//! stub_script = "stub.toml" # optional, defaults to the bundled script
//! endpoint = "https://api.example.com/v1/chat/completions"
//! model = "some-model"
//! timeout_secs = 30
//! max_retries = 1
//! retry_backoff_ms = 200
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use ecoecho_core::llm::ProviderConfig;

pub const ENV_BIND: &str = "ECOECHO_BIND";
pub const ENV_PORT: &str = "ECOECHO_PORT";
pub const ENV_DATA_DIR: &str = "ECOECHO_DATA_DIR";
pub const ENV_STUB: &str = "ECOECHO_STUB";
pub const ENV_ENDPOINT: &str = "ECOECHO_PROVIDER_ENDPOINT";
pub const ENV_MODEL: &str = "ECOECHO_PROVIDER_MODEL";
pub const ENV_CORS_ORIGIN: &str = "ECOECHO_CORS_ORIGIN";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{var}: {message}")]
    Env { var: &'static str, message: String },
    #[error("live provider needs `endpoint` and `model` (or set stub = true)")]
    IncompleteProvider,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSettings {
    pub stub: bool,
    pub stub_script: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self {
            stub: true,
            stub_script: None,
            endpoint: None,
            model: None,
            timeout_secs: 30,
            max_retries: 1,
            retry_backoff_ms: 200,
        }
    }
}

impl ProviderSettings {
    /// Settings for the live provider, or `None` when running on the stub.
    pub fn live(&self) -> Result<Option<ProviderConfig>, ConfigError> {
        if self.stub {
            return Ok(None);
        }
        let (Some(endpoint), Some(model)) = (&self.endpoint, &self.model) else {
            return Err(ConfigError::IncompleteProvider);
        };
        let mut config = ProviderConfig::from_env(endpoint.clone(), model.clone());
        config.timeout = Duration::from_secs(self.timeout_secs);
        config.max_retries = self.max_retries;
        config.retry_backoff = Duration::from_millis(self.retry_backoff_ms);
        Ok(Some(config))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    pub scenarios: Vec<PathBuf>,
    /// Allowed browser origin; `*` allows any.
    pub cors_origin: String,
    pub provider: ProviderSettings,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("data"),
            scenarios: Vec::new(),
            cors_origin: "*".into(),
            provider: ProviderSettings::default(),
        }
    }
}

impl ServerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` if given, then applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.into(), source })?;
                Self::from_toml_str(&text)?
            }
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    /// Applies overrides from `lookup`, which maps a variable name to its
    /// value.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        let bad = |var: &'static str, message: String| ConfigError::Env { var, message };
        if let Some(v) = lookup(ENV_BIND) {
            self.bind = v.parse().map_err(|e| bad(ENV_BIND, format!("{e}")))?;
        }
        if let Some(v) = lookup(ENV_PORT) {
            self.bind.set_port(v.parse().map_err(|e| bad(ENV_PORT, format!("{e}")))?);
        }
        if let Some(v) = lookup(ENV_DATA_DIR) {
            self.data_dir = v.into();
        }
        if let Some(v) = lookup(ENV_STUB) {
            self.provider.stub = match v.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" | "on" => true,
                "0" | "false" | "no" | "off" => false,
                _ => return Err(bad(ENV_STUB, format!("expected true or false, got {v:?}"))),
            };
        }
        if let Some(v) = lookup(ENV_ENDPOINT) {
            self.provider.endpoint = Some(v);
        }
        if let Some(v) = lookup(ENV_MODEL) {
            self.provider.model = Some(v);
        }
        if let Some(v) = lookup(ENV_CORS_ORIGIN) {
            self.cors_origin = v;
        }
        Ok(())
    }
}
