//! Text-generation provider abstraction.
//!
//! The engine makes two provider calls per player turn: an intent
//! classification constrained to the NPC's declared intents, then (when the
//! pipeline decides on a fresh reply) a character reply. Both go through a
//! [`Gateway`], which owns the retry policy and sanitizes what comes back.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{DecidedLayer, DialogueTurn, IntentResult, Speaker};
use crate::ids::{IntentId, NpcId};
use crate::scenario::IntentSpec;

pub mod http;
pub mod prompt;
pub mod stub;

pub use http::{HttpProvider, ProviderConfig};
pub use prompt::{build_character_prompt, PromptBundle};
pub use stub::{StubProvider, StubScript};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider timed out")]
    Timeout,
    #[error("provider error: {0}")]
    Failed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

/// Maps a conversation onto chat roles from the NPC's point of view.
pub fn history_messages(history: &[DialogueTurn]) -> Vec<ChatMessage> {
    history
        .iter()
        .map(|t| {
            let role = match t.speaker {
                Speaker::Player => Role::User,
                Speaker::Npc => Role::Assistant,
            };
            ChatMessage::new(role, t.text.clone())
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct ReplyRequest<'a> {
    pub bundle: &'a PromptBundle,
    /// Earlier turns with this NPC, oldest first.
    pub history: &'a [DialogueTurn],
    pub player_input: &'a str,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyRequest<'a> {
    pub npc: &'a NpcId,
    pub history: &'a [DialogueTurn],
    pub player_input: &'a str,
    pub candidates: &'a [&'a IntentSpec],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub intent: Option<IntentId>,
    pub confidence: f64,
}

impl Classification {
    pub fn none() -> Self {
        Self { intent: None, confidence: 0.0 }
    }
}

pub trait Provider: Send + Sync {
    fn reply(&self, req: &ReplyRequest<'_>) -> Result<String, ProviderError>;
    fn classify(&self, req: &ClassifyRequest<'_>) -> Result<Classification, ProviderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 1, backoff: Duration::from_millis(200) }
    }
}

impl RetryPolicy {
    /// No waiting between attempts. Used with the stub.
    pub fn immediate(max_retries: u32) -> Self {
        Self { max_retries, backoff: Duration::ZERO }
    }
}

#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn Provider>,
    retry: RetryPolicy,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("retry", &self.retry).finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn Provider>, retry: RetryPolicy) -> Self {
        Self { provider, retry }
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<T, ProviderError>) -> Result<T, ProviderError> {
        let mut attempt = 0;
        loop {
            match call() {
                Ok(v) => return Ok(v),
                Err(e) if attempt >= self.retry.max_retries => return Err(e),
                Err(e) => {
                    tracing::debug!(attempt, error = %e, "provider call failed, retrying");
                    attempt += 1;
                    if !self.retry.backoff.is_zero() {
                        std::thread::sleep(self.retry.backoff);
                    }
                }
            }
        }
    }

    /// A fresh in-character reply. Blank replies count as failures.
    pub fn generate_reply(
        &self,
        bundle: &PromptBundle,
        history: &[DialogueTurn],
        player_input: &str,
    ) -> Result<String, ProviderError> {
        let req = ReplyRequest { bundle, history, player_input };
        self.with_retries(|| {
            let text = self.provider.reply(&req)?;
            let text = text.trim();
            if text.is_empty() {
                Err(ProviderError::Failed("empty reply".into()))
            } else {
                Ok(text.to_owned())
            }
        })
    }

    /// Agent-layer classification. Ids outside `specs` are discarded and
    /// the confidence is clamped to [0, 1].
    pub fn classify_intent(
        &self,
        npc: &NpcId,
        player_input: &str,
        history: &[DialogueTurn],
        specs: &[&IntentSpec],
    ) -> Result<IntentResult, ProviderError> {
        let req = ClassifyRequest { npc, history, player_input, candidates: specs };
        let c = self.with_retries(|| self.provider.classify(&req))?;
        let intent = c.intent.filter(|id| specs.iter().any(|s| s.id == *id));
        Ok(match intent {
            Some(intent) => IntentResult {
                intent: Some(intent),
                confidence: if c.confidence.is_nan() { 0.0 } else { c.confidence.clamp(0.0, 1.0) },
                layer: DecidedLayer::Agent,
            },
            None => IntentResult::none(),
        })
    }
}
