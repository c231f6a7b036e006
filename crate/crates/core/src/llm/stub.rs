//! Deterministic scripted provider for tests and offline play.
//!
//! A stub script is a TOML file of ordered rules. Each rule matches a
//! phrase in the player input (same normalization as the keyword layer) and
//! can name an intent for the classifier, offer replies, or simulate a
//! failure. When a rule lists several replies, one is picked by a ChaCha
//! generator seeded from the script seed, the NPC, the conversation length
//! and the input, so identical runs pick identical replies.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ClassifyRequest, Classification, Provider, ProviderError, ReplyRequest};
use crate::ids::IntentId;
use crate::text::{contains_phrase, normalize};

const DEFAULT_PROMPT_REPLY: &str = "Go on, say something. I'm listening.";
const DEFAULT_RULE_CONFIDENCE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    Timeout,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubRule {
    /// Restricts the rule to one NPC.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub npc: Option<String>,
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<IntentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default)]
    pub replies: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail: Option<FailureMode>,
}

impl StubRule {
    fn matches(&self, npc: &str, normalized_input: &str) -> bool {
        self.npc.as_deref().is_none_or(|n| n == npc) && contains_phrase(normalized_input, &self.pattern)
    }

    fn failure(&self) -> Option<ProviderError> {
        self.fail.map(|f| match f {
            FailureMode::Timeout => ProviderError::Timeout,
            FailureMode::Error => ProviderError::Failed(format!("scripted failure on `{}`", self.pattern)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubScript {
    #[serde(default)]
    pub seed: u64,
    /// Every call fails, as if the provider were unreachable.
    #[serde(default)]
    pub offline: bool,
    /// Reply to blank input.
    #[serde(default = "default_prompt_reply")]
    pub prompt_reply: String,
    /// Replies used when no rule matches.
    #[serde(default)]
    pub default_replies: Vec<String>,
    /// Per-NPC replacements for `default_replies`.
    #[serde(default)]
    pub npc_defaults: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub rules: Vec<StubRule>,
}

fn default_prompt_reply() -> String {
    DEFAULT_PROMPT_REPLY.to_owned()
}

impl Default for StubScript {
    fn default() -> Self {
        Self {
            seed: 0,
            offline: false,
            prompt_reply: default_prompt_reply(),
            default_replies: Vec::new(),
            npc_defaults: BTreeMap::new(),
            rules: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum StubError {
    #[error("malformed stub script: {0}")]
    Parse(String),
    #[error("invalid stub rule {index}: {message}")]
    Rule { index: usize, message: String },
}

/// The stub script shipped next to the bundled scenario.
pub const BUNDLED_STUB: &str = include_str!("../../content/stub.toml");

impl StubScript {
    pub fn from_toml_str(text: &str) -> Result<Self, StubError> {
        let script: StubScript = toml::from_str(text).map_err(|e| StubError::Parse(e.to_string()))?;
        for (index, rule) in script.rules.iter().enumerate() {
            if normalize(&rule.pattern).is_empty() {
                return Err(StubError::Rule { index, message: "empty pattern".into() });
            }
            if let Some(c) = rule.confidence {
                if !(0.0..=1.0).contains(&c) {
                    return Err(StubError::Rule { index, message: format!("confidence {c} outside [0, 1]") });
                }
            }
            if rule.intent.is_none() && rule.replies.is_empty() && rule.fail.is_none() {
                return Err(StubError::Rule {
                    index,
                    message: "rule needs an intent, replies or a failure mode".into(),
                });
            }
        }
        Ok(script)
    }

    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_STUB).expect("bundled stub script is valid")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct StubProvider {
    script: StubScript,
}

impl StubProvider {
    pub fn new(script: StubScript) -> Self {
        Self { script }
    }

    pub fn script(&self) -> &StubScript {
        &self.script
    }

    fn rng(&self, npc: &str, turns: usize, input: &str) -> ChaCha8Rng {
        // FNV-1a keeps the seed stable across platforms and toolchains.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(&self.script.seed.to_le_bytes());
        feed(npc.as_bytes());
        feed(&[0xff]);
        feed(&(turns as u64).to_le_bytes());
        feed(input.as_bytes());
        ChaCha8Rng::seed_from_u64(h)
    }

    fn pick(&self, options: &[String], npc: &str, turns: usize, input: &str) -> Option<String> {
        options.choose(&mut self.rng(npc, turns, input)).cloned()
    }
}

impl Provider for StubProvider {
    fn reply(&self, req: &ReplyRequest<'_>) -> Result<String, ProviderError> {
        if self.script.offline {
            return Err(ProviderError::Failed("stub provider is offline".into()));
        }
        let npc = req.bundle.npc_id.as_str();
        let input = normalize(req.player_input);
        if input.is_empty() {
            return Ok(self.script.prompt_reply.clone());
        }
        let turns = req.history.len();
        for rule in &self.script.rules {
            if !rule.matches(npc, &input) {
                continue;
            }
            if let Some(err) = rule.failure() {
                return Err(err);
            }
            if let Some(reply) = self.pick(&rule.replies, npc, turns, &input) {
                return Ok(reply);
            }
        }
        let defaults = self
            .script
            .npc_defaults
            .get(npc)
            .filter(|d| !d.is_empty())
            .unwrap_or(&self.script.default_replies);
        Ok(self
            .pick(defaults, npc, turns, &input)
            .unwrap_or_else(|| "...".to_owned()))
    }

    fn classify(&self, req: &ClassifyRequest<'_>) -> Result<Classification, ProviderError> {
        if self.script.offline {
            return Err(ProviderError::Failed("stub provider is offline".into()));
        }
        let input = normalize(req.player_input);
        for rule in &self.script.rules {
            if !rule.matches(req.npc.as_str(), &input) {
                continue;
            }
            if let Some(err) = rule.failure() {
                return Err(err);
            }
            if let Some(intent) = &rule.intent {
                if req.candidates.iter().any(|c| c.id == *intent) {
                    return Ok(Classification {
                        intent: Some(intent.clone()),
                        confidence: rule.confidence.unwrap_or(DEFAULT_RULE_CONFIDENCE),
                    });
                }
            }
        }
        Ok(Classification::none())
    }
}
