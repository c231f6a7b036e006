//! The per-utterance decision pipeline.
//!
//! An utterance is classified by the agent layer, falling back to keyword
//! matching when the agent abstains, is unsure or fails. A matched intent
//! whose required items are held fires its game actions. Otherwise the NPC
//! answers with a predefined line once the player has used up the turn
//! limit for that NPC, or with a freshly generated reply. Whatever the NPC
//! says is scanned for item trigger phrases.
//!
//! The level 2 guard is rule-gated and bypasses the provider entirely.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::EventKind;
use crate::game::{self, GameError, GateDecision, Stage, Tx};
use crate::ids::{IntentId, ItemId, NpcId};
use crate::llm::{build_character_prompt, Gateway, ProviderError};
use crate::scenario::{GameAction, IntentSpec, ItemDef, NpcProfile, ScenarioDefinition};
use crate::text::{contains_phrase, match_prefix, normalize};

/// Longest accepted player utterance, in characters.
pub const MAX_INPUT_CHARS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Player,
    Npc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecidedLayer {
    Agent,
    Keyword,
    Predefined,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTurn {
    /// The NPC this conversation is with.
    pub npc: NpcId,
    pub speaker: Speaker,
    pub text: String,
    /// Position within the conversation with `npc`.
    pub turn_index: u32,
    #[serde(default)]
    pub detected_intent: Option<IntentId>,
    pub decided_layer: DecidedLayer,
    #[serde(default)]
    pub granted_items: Vec<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentResult {
    pub intent: Option<IntentId>,
    pub confidence: f64,
    pub layer: DecidedLayer,
}

impl IntentResult {
    pub fn none() -> Self {
        Self { intent: None, confidence: 0.0, layer: DecidedLayer::None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    GeneratedReply,
    PredefinedAnswer,
    ItemOrAction,
}

/// A trigger phrase found in an NPC utterance. `start..end` is a byte range
/// of the utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Highlight {
    pub start: usize,
    pub end: usize,
    pub item: ItemId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnOutcome {
    pub npc: NpcId,
    pub npc_utterance: String,
    pub strategy: Strategy,
    pub intent: IntentResult,
    pub actions: Vec<GameAction>,
    pub highlights: Vec<Highlight>,
    /// Items newly added to the inventory by this turn.
    pub granted_items: Vec<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DialogueError {
    #[error("input is empty")]
    EmptyInput,
    #[error("input is {len} characters, the limit is {max}")]
    Oversize { len: usize, max: usize },
    #[error("unknown npc `{0}`")]
    UnknownNpc(NpcId),
    #[error("`{npc}` cannot be reached at stage {stage:?}")]
    WrongStage { npc: NpcId, stage: Stage },
    #[error("unknown intent `{0}`")]
    UnknownIntent(IntentId),
    #[error("no reply available: {0}")]
    ProviderUnavailable(ProviderError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Fallback classification by phrase containment. The intent with the most
/// matched phrases wins; ties go to the earliest declared.
pub fn keyword_match(text: &str, specs: &[&IntentSpec]) -> IntentResult {
    let normalized = normalize(text);
    let mut best: Option<(&IntentSpec, usize)> = None;
    for spec in specs {
        let hits = spec.keywords.iter().filter(|k| contains_phrase(&normalized, k)).count();
        if hits > 0 && best.is_none_or(|(_, h)| hits > h) {
            best = Some((spec, hits));
        }
    }
    match best {
        Some((spec, _)) => IntentResult {
            intent: Some(spec.id.clone()),
            confidence: 1.0,
            layer: DecidedLayer::Keyword,
        },
        None => IntentResult::none(),
    }
}

/// Finds trigger phrases in an utterance. Matches are leftmost-longest and
/// never overlap. Items not yet held are granted once each, in span order.
pub fn extract_items(
    utterance: &str,
    items: &[ItemDef],
    inventory: &BTreeSet<ItemId>,
) -> (Vec<Highlight>, Vec<ItemId>) {
    let phrases: Vec<(String, &ItemId)> = items
        .iter()
        .flat_map(|item| {
            item.trigger_phrases
                .iter()
                .map(|p| normalize(p))
                .filter(|p| !p.is_empty())
                .map(move |p| (p, &item.id))
        })
        .collect();

    let mut highlights = Vec::new();
    let mut granted: Vec<ItemId> = Vec::new();
    let mut pos = 0;
    while pos < utterance.len() {
        let rest = &utterance[pos..];
        let best = phrases
            .iter()
            .filter_map(|(p, id)| match_prefix(rest, p).map(|len| (len, *id)))
            // Longest wins; among equal lengths the first declared.
            .fold(None, |acc: Option<(usize, &ItemId)>, (len, id)| match acc {
                Some((l, _)) if l >= len => acc,
                _ => Some((len, id)),
            });
        match best {
            Some((len, id)) => {
                highlights.push(Highlight {
                    start: pos,
                    end: pos + len,
                    item: id.clone(),
                    text: rest[..len].to_owned(),
                });
                if !inventory.contains(id) && !granted.contains(id) {
                    granted.push(id.clone());
                }
                pos += len;
            }
            None => pos += rest.chars().next().map_or(1, char::len_utf8),
        }
    }
    (highlights, granted)
}

/// The intent's effects if every required item is held, otherwise nothing.
pub fn evaluate_triggers(
    scenario: &ScenarioDefinition,
    intent: &IntentId,
    inventory: &BTreeSet<ItemId>,
) -> Result<Vec<GameAction>, DialogueError> {
    let spec = scenario
        .intent(intent.as_str())
        .ok_or_else(|| DialogueError::UnknownIntent(intent.clone()))?;
    if spec.required_items.iter().all(|i| inventory.contains(i)) {
        Ok(spec.effects.clone())
    } else {
        Ok(Vec::new())
    }
}

fn check_input(text: &str) -> Result<&str, DialogueError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(DialogueError::EmptyInput);
    }
    let len = trimmed.chars().count();
    if len > MAX_INPUT_CHARS {
        return Err(DialogueError::Oversize { len, max: MAX_INPUT_CHARS });
    }
    Ok(trimmed)
}

struct Decision {
    utterance: String,
    strategy: Strategy,
    intent: IntentResult,
    actions: Vec<GameAction>,
    reply_layer: DecidedLayer,
}

fn cycle(lines: &[String], n: u32) -> Option<String> {
    if lines.is_empty() {
        None
    } else {
        Some(lines[n as usize % lines.len()].clone())
    }
}

fn decide_gate(
    scenario: &ScenarioDefinition,
    tx: &Tx,
    npc: &NpcProfile,
    input: &str,
) -> Result<Decision, DialogueError> {
    let gate = &scenario.security_gate;
    let state = tx.state();
    let mentions = |text: &str| {
        let n = normalize(text);
        gate.mention_phrases.iter().any(|p| contains_phrase(&n, p))
    };
    // Naming the person once is enough for the rest of the visit.
    let mentioned = mentions(input)
        || state
            .conversation(npc.id.as_str())
            .any(|t| t.speaker == Speaker::Player && mentions(&t.text));
    let normalized = normalize(input);
    let presented = gate.accepted_items.iter().find(|id| {
        state.has_item(id.as_str())
            && scenario.item(id.as_str()).is_some_and(|def| {
                contains_phrase(&normalized, &def.display_name)
                    || def.trigger_phrases.iter().any(|p| contains_phrase(&normalized, p))
            })
    });
    let (utterance, strategy, actions, reply_layer) =
        match game::security_gate(state, scenario, mentioned, presented)? {
            GateDecision::Deny(line) | GateDecision::RequestId(line) => {
                (line, Strategy::PredefinedAnswer, Vec::new(), DecidedLayer::Predefined)
            }
            GateDecision::Allow => (
                gate.allow_line.clone(),
                Strategy::ItemOrAction,
                vec![GameAction::AdvanceStage],
                DecidedLayer::None,
            ),
        };
    Ok(Decision { utterance, strategy, intent: IntentResult::none(), actions, reply_layer })
}

fn decide_agent(
    scenario: &ScenarioDefinition,
    gateway: &Gateway,
    tx: &Tx,
    npc: &NpcProfile,
    input: &str,
) -> Result<Decision, DialogueError> {
    let state = tx.state();
    let history: Vec<_> = state.conversation(npc.id.as_str()).cloned().collect();
    let specs = scenario.intents_for(npc.id.as_str());

    let intent = if specs.is_empty() {
        IntentResult::none()
    } else {
        match gateway.classify_intent(&npc.id, input, &history, &specs) {
            Ok(r) if r.intent.is_some() && r.confidence >= scenario.confidence_threshold => r,
            Ok(_) => keyword_match(input, &specs),
            Err(e) => {
                tracing::warn!(npc = %npc.id, error = %e, "classifier unavailable, using keywords");
                keyword_match(input, &specs)
            }
        }
    };

    let actions = match &intent.intent {
        Some(id) => evaluate_triggers(scenario, id, &state.inventory)?,
        None => Vec::new(),
    };
    let prior = state.turn_counter(npc.id.as_str());
    let predefined = &npc.predefined_responses;

    if !actions.is_empty() {
        let spec = intent.intent.as_ref().and_then(|id| scenario.intent(id.as_str()));
        let scripted = actions
            .iter()
            .find_map(|a| match a {
                GameAction::ReturnPredefined { index } => predefined.get(*index).cloned(),
                _ => None,
            })
            .or_else(|| spec.and_then(|s| s.reply.clone()))
            .or_else(|| cycle(predefined, prior));
        let utterance = match scripted {
            Some(u) => u,
            None => gateway
                .generate_reply(&build_character_prompt(npc), &history, input)
                .map_err(DialogueError::ProviderUnavailable)?,
        };
        let reply_layer = intent.layer;
        return Ok(Decision { utterance, strategy: Strategy::ItemOrAction, intent, actions, reply_layer });
    }

    if prior >= scenario.turn_limit {
        if let Some(utterance) = cycle(predefined, prior - scenario.turn_limit) {
            return Ok(Decision {
                utterance,
                strategy: Strategy::PredefinedAnswer,
                intent,
                actions,
                reply_layer: DecidedLayer::Predefined,
            });
        }
    }

    match gateway.generate_reply(&build_character_prompt(npc), &history, input) {
        Ok(utterance) => {
            let reply_layer = intent.layer;
            Ok(Decision { utterance, strategy: Strategy::GeneratedReply, intent, actions, reply_layer })
        }
        Err(e) => {
            tracing::warn!(npc = %npc.id, error = %e, "reply generation failed, using a predefined line");
            let utterance = cycle(predefined, prior).ok_or(DialogueError::ProviderUnavailable(e))?;
            Ok(Decision {
                utterance,
                strategy: Strategy::PredefinedAnswer,
                intent,
                actions,
                reply_layer: DecidedLayer::Predefined,
            })
        }
    }
}

/// Runs one player utterance through the pipeline, emitting its events
/// into `tx`. On error nothing has been emitted.
pub fn process_player_input(
    scenario: &ScenarioDefinition,
    gateway: &Gateway,
    tx: &mut Tx,
    npc_id: &NpcId,
    text: &str,
) -> Result<TurnOutcome, DialogueError> {
    let npc = scenario
        .npc(npc_id.as_str())
        .ok_or_else(|| DialogueError::UnknownNpc(npc_id.clone()))?;
    let stage = tx.state().stage;
    let reachable = scenario
        .stage_entry(stage)
        .and_then(|e| e.npc.as_ref()) == Some(npc_id);
    if !reachable {
        return Err(DialogueError::WrongStage { npc: npc_id.clone(), stage });
    }
    let input = check_input(text)?;

    let decision = if stage == Stage::Level2SecurityGate && scenario.security_gate.npc == *npc_id {
        decide_gate(scenario, tx, npc, input)?
    } else {
        decide_agent(scenario, gateway, tx, npc, input)?
    };

    let state = tx.state();
    let (highlights, mut granted) = extract_items(&decision.utterance, &scenario.items, &state.inventory);
    for action in &decision.actions {
        if let GameAction::GrantItem { item } = action {
            if !state.has_item(item.as_str()) && !granted.contains(item) {
                granted.push(item.clone());
            }
        }
    }
    let index = state.conversation(npc_id.as_str()).count() as u32;

    tx.emit(EventKind::PlayerInput {
        turn: DialogueTurn {
            npc: npc_id.clone(),
            speaker: Speaker::Player,
            text: input.to_owned(),
            turn_index: index,
            detected_intent: decision.intent.intent.clone(),
            decided_layer: decision.intent.layer,
            granted_items: Vec::new(),
        },
    });
    tx.emit(EventKind::IntentDecided {
        npc: npc_id.clone(),
        intent: decision.intent.intent.clone(),
        confidence: decision.intent.confidence,
        layer: decision.intent.layer,
    });
    tx.emit(EventKind::NpcReply {
        turn: DialogueTurn {
            npc: npc_id.clone(),
            speaker: Speaker::Npc,
            text: decision.utterance.clone(),
            turn_index: index + 1,
            detected_intent: decision.intent.intent.clone(),
            decided_layer: decision.reply_layer,
            granted_items: granted.clone(),
        },
        strategy: decision.strategy,
    });
    for item in &granted {
        tx.emit(EventKind::ItemGranted { item: item.clone() });
    }
    for action in &decision.actions {
        game::apply_action(tx, action)?;
    }

    Ok(TurnOutcome {
        npc: npc_id.clone(),
        npc_utterance: decision.utterance,
        strategy: decision.strategy,
        intent: decision.intent,
        actions: decision.actions,
        highlights,
        granted_items: granted,
    })
}
