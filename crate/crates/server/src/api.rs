//! Request and response bodies. Field-by-field documentation lives in
//! `docs/http-api.md`.

use serde::{Deserialize, Serialize};

use ecoecho_core::assessment::VoteRecord;
use ecoecho_core::dialogue::{DecidedLayer, DialogueTurn, Highlight, Strategy};
use ecoecho_core::game::{Ending, SessionState, Stage};
use ecoecho_core::scenario::ScenarioDefinition;
use ecoecho_core::{IntentId, ItemId, NpcId, SessionId};

/// Number of transcript turns included in a state view.
pub const TRANSCRIPT_TAIL: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Defaults to the bundled scenario.
    #[serde(default)]
    pub scenario_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteRequest {
    pub round: u8,
    pub votes: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    /// `true` supports the repeal.
    pub support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: SessionId,
    pub scenario_id: String,
    pub stage: Stage,
    pub narration: String,
    pub pending_vote: Option<u8>,
    pub vote_prompt: Option<String>,
    pub world_scene: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub id: ItemId,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageChange {
    pub from: Stage,
    pub to: Stage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnView {
    pub npc: NpcId,
    pub utterance: String,
    pub strategy: Strategy,
    pub intent: Option<IntentId>,
    pub layer: DecidedLayer,
    pub granted_items: Vec<ItemView>,
    pub highlights: Vec<Highlight>,
    pub stage_change: Option<StageChange>,
    pub stage: Stage,
    /// Narration of the new stage, present when the stage changed.
    pub narration: Option<String>,
    pub world_scene: u8,
    pub pending_vote: Option<u8>,
    pub vote_prompt: Option<String>,
    pub final_decision_prompt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteView {
    pub round: u8,
    pub votes: u8,
    pub stage: Stage,
    pub narration: String,
    pub pending_vote: Option<u8>,
    pub vote_prompt: Option<String>,
    pub world_scene: u8,
    pub final_decision_prompt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionView {
    pub ending: Ending,
    pub ending_text: String,
    pub ending_asset: String,
    pub world_scene: u8,
    pub stage: Stage,
    pub pending_vote: Option<u8>,
    pub vote_prompt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub session_id: SessionId,
    pub scenario_id: String,
    pub stage: Stage,
    pub narration: String,
    pub inventory: Vec<ItemView>,
    pub world_scene: u8,
    pub scene_asset: Option<String>,
    pub transcript_tail: Vec<DialogueTurn>,
    pub pending_vote: Option<u8>,
    pub vote_prompt: Option<String>,
    pub votes: Vec<VoteRecord>,
    pub ending: Option<Ending>,
    pub final_decision_prompt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub scenarios: Vec<String>,
}

pub(crate) fn narration(s: &ScenarioDefinition, stage: Stage) -> String {
    s.stage_entry(stage).map(|e| e.narration.clone()).unwrap_or_default()
}

pub(crate) fn vote_prompt(s: &ScenarioDefinition, state: &SessionState) -> Option<String> {
    state.pending_vote().and_then(|r| s.assessment_round(r)).map(|r| r.prompt.clone())
}

pub(crate) fn final_prompt(s: &ScenarioDefinition, state: &SessionState) -> Option<String> {
    (state.stage == Stage::FinalDecision).then(|| s.final_decision.prompt.clone())
}

pub(crate) fn item_view(s: &ScenarioDefinition, id: &ItemId) -> ItemView {
    match s.item(id.as_str()) {
        Some(def) => ItemView { id: id.clone(), name: def.display_name.clone(), description: def.description.clone() },
        None => ItemView { id: id.clone(), name: id.to_string(), description: String::new() },
    }
}

pub(crate) fn summary(s: &ScenarioDefinition, state: &SessionState) -> SessionSummary {
    SessionSummary {
        session_id: state.session_id.clone(),
        scenario_id: state.scenario_id.clone(),
        stage: state.stage,
        narration: narration(s, state.stage),
        pending_vote: state.pending_vote(),
        vote_prompt: vote_prompt(s, state),
        world_scene: state.world_scene(),
    }
}

pub(crate) fn state_view(s: &ScenarioDefinition, state: &SessionState) -> StateView {
    let ending_def = match state.ending {
        Some(Ending::Bad) => s.endings.bad.as_ref(),
        Some(Ending::Alternate) => s.endings.alternate.as_ref(),
        None => None,
    };
    let scene_asset = match ending_def {
        Some(e) => Some(e.asset.clone()),
        None => s.world_scenes.get(usize::from(state.world_scene())).cloned(),
    };
    let skip = state.transcript.len().saturating_sub(TRANSCRIPT_TAIL);
    StateView {
        session_id: state.session_id.clone(),
        scenario_id: state.scenario_id.clone(),
        stage: state.stage,
        narration: narration(s, state.stage),
        inventory: state.inventory.iter().map(|i| item_view(s, i)).collect(),
        world_scene: state.world_scene(),
        scene_asset,
        transcript_tail: state.transcript[skip..].to_vec(),
        pending_vote: state.pending_vote(),
        vote_prompt: vote_prompt(s, state),
        votes: state.votes.clone(),
        ending: state.ending,
        final_decision_prompt: final_prompt(s, state),
    }
}
