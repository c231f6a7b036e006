//! Provider backed by an OpenAI-compatible chat completions endpoint.
//!
//! Request and response bodies are documented in `docs/provider-api.md`.

use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use super::{history_messages, ChatMessage, ClassifyRequest, Classification, Provider, ProviderError, ReplyRequest, RetryPolicy, Role};
use crate::ids::IntentId;

/// Environment variable holding the provider API key.
pub const API_KEY_ENV: &str = "ECOECHO_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderConfig {
    /// Full URL of the chat completions endpoint.
    pub endpoint: String,
    pub model_name: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub retry_backoff: Duration,
    pub api_key: Option<String>,
}

impl ProviderConfig {
    /// Builds a config whose API key comes from [`API_KEY_ENV`].
    pub fn from_env(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model_name: model_name.into(),
            timeout: Duration::from_secs(30),
            max_retries: RetryPolicy::default().max_retries,
            retry_backoff: RetryPolicy::default().backoff,
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
        }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy { max_retries: self.max_retries, backoff: self.retry_backoff }
    }
}

#[derive(Debug, Clone)]
pub struct HttpProvider {
    config: ProviderConfig,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        if config.timeout.is_zero() {
            return Err(ProviderError::Failed("timeout must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ProviderError::Failed(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn complete(&self, body: &Value) -> Result<String, ProviderError> {
        let mut req = self.client.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(map_transport)?;
        let status = resp.status();
        let bytes = resp.bytes().map_err(map_transport)?;
        if !status.is_success() {
            return Err(ProviderError::Failed(format!("provider returned HTTP {}", status.as_u16())));
        }
        parse_completion_body(&bytes)
    }
}

fn map_transport(e: reqwest::Error) -> ProviderError {
    if e.is_timeout() {
        ProviderError::Timeout
    } else {
        ProviderError::Failed(e.to_string())
    }
}

/// Chat messages for a character reply.
pub fn reply_messages(req: &ReplyRequest<'_>) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::new(Role::System, req.bundle.render())];
    messages.extend(history_messages(req.history));
    messages.push(ChatMessage::new(Role::User, req.player_input));
    messages
}

/// Chat messages for a constrained intent classification.
pub fn classify_messages(req: &ClassifyRequest<'_>) -> Vec<ChatMessage> {
    let mut system = String::from(
        "You detect the intent of a player talking to a game character. \
Answer with a JSON object {\"intent\": <id or null>, \"confidence\": <number 0-1>}. \
Use only these intent ids:\n",
    );
    for spec in req.candidates {
        system.push_str(&format!("- {}: {}", spec.id, spec.task_label));
        if !spec.description.is_empty() {
            system.push_str(&format!(". {}", spec.description));
        }
        system.push('\n');
    }
    system.push_str("Answer null when the player expresses none of them.");
    let mut transcript = String::new();
    for m in history_messages(req.history) {
        let who = if m.role == Role::User { "Player" } else { "Character" };
        transcript.push_str(&format!("{who}: {}\n", m.content));
    }
    transcript.push_str(&format!("Player: {}", req.player_input));
    vec![ChatMessage::new(Role::System, system), ChatMessage::new(Role::User, transcript)]
}

impl Provider for HttpProvider {
    fn reply(&self, req: &ReplyRequest<'_>) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.config.model_name,
            "messages": reply_messages(req),
        });
        self.complete(&body)
    }

    fn classify(&self, req: &ClassifyRequest<'_>) -> Result<Classification, ProviderError> {
        let body = json!({
            "model": self.config.model_name,
            "messages": classify_messages(req),
            "temperature": 0,
            "response_format": {"type": "json_object"},
        });
        parse_classification(&self.complete(&body)?)
    }
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

/// Extracts the first choice's message content from a completions body.
pub fn parse_completion_body(bytes: &[u8]) -> Result<String, ProviderError> {
    let body: CompletionBody = serde_json::from_slice(bytes)
        .map_err(|e| ProviderError::Failed(format!("malformed completion body: {e}")))?;
    body.choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| ProviderError::Failed("completion has no content".into()))
}

/// Parses the classifier's JSON answer. Code fences around the object are
/// tolerated; `null`, `""` and `"none"` all mean no intent.
pub fn parse_classification(content: &str) -> Result<Classification, ProviderError> {
    let trimmed = content.trim();
    let inner = trimmed
        .strip_prefix("```json")
        .or_else(|| trimmed.strip_prefix("```"))
        .and_then(|s| s.strip_suffix("```"))
        .unwrap_or(trimmed)
        .trim();
    let v: Value = serde_json::from_str(inner)
        .map_err(|e| ProviderError::Failed(format!("malformed classification: {e}")))?;
    let obj = v
        .as_object()
        .ok_or_else(|| ProviderError::Failed("classification is not an object".into()))?;
    let intent = match obj.get("intent") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.trim().is_empty() || s.trim().eq_ignore_ascii_case("none") => None,
        Some(Value::String(s)) => Some(IntentId::from(s.trim())),
        Some(other) => {
            return Err(ProviderError::Failed(format!("intent must be a string, got {other}")));
        }
    };
    let confidence = match obj.get("confidence") {
        None | Some(Value::Null) => 0.0,
        Some(v) => v
            .as_f64()
            .ok_or_else(|| ProviderError::Failed("confidence must be a number".into()))?,
    };
    let confidence = if confidence.is_finite() { confidence.clamp(0.0, 1.0) } else { 0.0 };
    Ok(match intent {
        Some(intent) => Classification { intent: Some(intent), confidence },
        None => Classification::none(),
    })
}
