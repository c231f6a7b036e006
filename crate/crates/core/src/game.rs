//! The narrative state machine.
//!
//! Stages run in a fixed linear order. Interlude stages (the opening and
//! the three returns to the future) carry no NPC task: the game moves past
//! them as soon as their assessment vote, if any, has been recorded. Level
//! stages advance only through an `AdvanceStage` action fired by a trigger
//! or by the security gate.
//!
//! Every mutation goes through a [`Tx`], which applies [`EventKind`]s to a
//! working copy of the session so that the live state and a fold over the
//! stored log are produced by the same code.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::VoteRecord;
use crate::dialogue::DialogueTurn;
use crate::event::EventKind;
use crate::ids::{ItemId, NpcId, SessionId};
use crate::scenario::{GameAction, ScenarioDefinition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "opening")]
    Opening,
    #[serde(rename = "level1_media")]
    Level1Media,
    #[serde(rename = "return1")]
    Return1,
    #[serde(rename = "level2_security_gate")]
    Level2SecurityGate,
    #[serde(rename = "level3_union")]
    Level3Union,
    #[serde(rename = "return2")]
    Return2,
    #[serde(rename = "level4_government")]
    Level4Government,
    #[serde(rename = "return3")]
    Return3,
    #[serde(rename = "final_decision")]
    FinalDecision,
    #[serde(rename = "ended")]
    Ended,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Opening,
        Stage::Level1Media,
        Stage::Return1,
        Stage::Level2SecurityGate,
        Stage::Level3Union,
        Stage::Return2,
        Stage::Level4Government,
        Stage::Return3,
        Stage::FinalDecision,
        Stage::Ended,
    ];

    pub fn index(self) -> usize {
        Stage::ALL.iter().position(|s| *s == self).unwrap_or(0)
    }

    pub fn successor(self) -> Option<Stage> {
        Stage::ALL.get(self.index() + 1).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Opening => "opening",
            Stage::Level1Media => "level1_media",
            Stage::Return1 => "return1",
            Stage::Level2SecurityGate => "level2_security_gate",
            Stage::Level3Union => "level3_union",
            Stage::Return2 => "return2",
            Stage::Level4Government => "level4_government",
            Stage::Return3 => "return3",
            Stage::FinalDecision => "final_decision",
            Stage::Ended => "ended",
        }
    }

    /// Assessment round offered at this stage.
    pub fn vote_round(self) -> Option<u8> {
        match self {
            Stage::Opening => Some(1),
            Stage::Return1 => Some(2),
            Stage::Return2 => Some(3),
            Stage::Ended => Some(4),
            _ => None,
        }
    }

    /// Gated level played at this stage.
    pub fn level(self) -> Option<u8> {
        match self {
            Stage::Level1Media => Some(1),
            Stage::Level2SecurityGate => Some(2),
            Stage::Level3Union => Some(3),
            Stage::Level4Government => Some(4),
            _ => None,
        }
    }

    /// Zero-based position among the returns to the future.
    pub fn return_index(self) -> Option<u8> {
        match self {
            Stage::Return1 => Some(0),
            Stage::Return2 => Some(1),
            Stage::Return3 => Some(2),
            _ => None,
        }
    }

    /// Stages the game leaves on its own once their vote is recorded.
    pub fn is_interlude(self) -> bool {
        matches!(self, Stage::Opening | Stage::Return1 | Stage::Return2 | Stage::Return3)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    /// 0 clean-energy future, 1 factories persist, 2 uninhabitable.
    pub degradation: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ending {
    Bad,
    Alternate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: SessionId,
    pub scenario_id: String,
    pub stage: Stage,
    pub inventory: BTreeSet<ItemId>,
    pub turn_counters: BTreeMap<NpcId, u32>,
    pub transcript: Vec<DialogueTurn>,
    pub votes: Vec<VoteRecord>,
    pub world: WorldState,
    pub ending: Option<Ending>,
    pub created_at: DateTime<Utc>,
}

impl SessionState {
    /// Round waiting for a vote before the story can continue.
    pub fn pending_vote(&self) -> Option<u8> {
        self.stage
            .vote_round()
            .filter(|round| !self.votes.iter().any(|v| v.round == *round))
    }

    pub fn turn_counter(&self, npc: &str) -> u32 {
        self.turn_counters.get(npc).copied().unwrap_or(0)
    }

    /// Scene index shown through the window. The alternate ending restores
    /// the clean future; degradation itself never decreases.
    pub fn world_scene(&self) -> u8 {
        match self.ending {
            Some(Ending::Alternate) => 0,
            _ => self.world.degradation,
        }
    }

    /// Turns exchanged with one NPC, oldest first.
    pub fn conversation<'a>(&'a self, npc: &'a str) -> impl Iterator<Item = &'a DialogueTurn> + 'a {
        self.transcript.iter().filter(move |t| t.npc == npc)
    }

    pub fn has_item(&self, item: &str) -> bool {
        self.inventory.contains(item)
    }

    /// Applies one event. The live engine and the log fold both go through
    /// here.
    pub fn apply(&mut self, kind: &EventKind, at: DateTime<Utc>) {
        match kind {
            EventKind::SessionStarted { scenario_id, inventory } => {
                self.scenario_id = scenario_id.clone();
                self.inventory = inventory.iter().cloned().collect();
                self.created_at = at;
            }
            EventKind::PlayerInput { turn } => {
                *self.turn_counters.entry(turn.npc.clone()).or_insert(0) += 1;
                self.transcript.push(turn.clone());
            }
            EventKind::IntentDecided { .. } => {}
            EventKind::NpcReply { turn, .. } => self.transcript.push(turn.clone()),
            EventKind::ItemGranted { item } => {
                self.inventory.insert(item.clone());
            }
            EventKind::StageChanged { to, .. } => self.stage = *to,
            EventKind::WorldChanged { degradation } => {
                self.world.degradation = self.world.degradation.max(*degradation);
            }
            EventKind::VoteCast { round, votes, stage_at_vote } => self.votes.push(VoteRecord {
                round: *round,
                votes: *votes,
                stage_at_vote: *stage_at_vote,
                timestamp: at,
            }),
            EventKind::DecisionMade { .. } => {}
            EventKind::EndingReached { ending } => self.ending = Some(*ending),
        }
    }

    fn blank(session_id: SessionId, at: DateTime<Utc>) -> Self {
        Self {
            session_id,
            scenario_id: String::new(),
            stage: Stage::Opening,
            inventory: BTreeSet::new(),
            turn_counters: BTreeMap::new(),
            transcript: Vec::new(),
            votes: Vec::new(),
            world: WorldState::default(),
            ending: None,
            created_at: at,
        }
    }

    /// Starts a state from its first event.
    pub fn from_start(session_id: SessionId, kind: &EventKind, at: DateTime<Utc>) -> Option<Self> {
        match kind {
            EventKind::SessionStarted { .. } => {
                let mut s = Self::blank(session_id, at);
                s.apply(kind, at);
                Some(s)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("illegal transition from {from:?}: {reason}")]
    IllegalTransition { from: Stage, reason: String },
    #[error("not available at stage {stage:?}")]
    WrongStage { stage: Stage },
    #[error("action {action:?} is not valid at stage {stage:?}")]
    IllegalAction { action: GameAction, stage: Stage },
}

/// A working copy of a session plus the events that produced it.
///
/// Nothing reaches the caller's state until [`Tx::commit`], so a failed
/// operation leaves the session untouched.
#[derive(Debug)]
pub struct Tx {
    state: SessionState,
    at: DateTime<Utc>,
    events: Vec<EventKind>,
}

impl Tx {
    pub fn begin(state: &SessionState, at: DateTime<Utc>) -> Self {
        Self { state: state.clone(), at, events: Vec::new() }
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn at(&self) -> DateTime<Utc> {
        self.at
    }

    pub fn emit(&mut self, kind: EventKind) {
        self.state.apply(&kind, self.at);
        self.events.push(kind);
    }

    pub fn events(&self) -> &[EventKind] {
        &self.events
    }

    /// Publishes the working copy and returns the events to persist.
    pub fn commit(self, target: &mut SessionState) -> Vec<EventKind> {
        *target = self.state;
        self.events
    }
}

/// Creates a session at the opening with the scenario's starting items.
pub fn new_session(
    scenario: &ScenarioDefinition,
    session_id: SessionId,
    at: DateTime<Utc>,
) -> (SessionState, Vec<EventKind>) {
    let start = EventKind::SessionStarted {
        scenario_id: scenario.id.clone(),
        inventory: scenario.starting_items.clone(),
    };
    let state = SessionState::from_start(session_id, &start, at).expect("start event");
    (state, vec![start])
}

/// Moves to the unique successor stage. Entering a return applies world
/// degradation.
pub fn advance_stage(tx: &mut Tx) -> Result<Stage, GameError> {
    let from = tx.state().stage;
    let illegal = |reason: &str| GameError::IllegalTransition { from, reason: reason.to_owned() };
    if from == Stage::Ended {
        return Err(illegal("the session has ended"));
    }
    if from == Stage::FinalDecision {
        return Err(illegal("the final decision must be made explicitly"));
    }
    if let Some(round) = tx.state().pending_vote() {
        return Err(illegal(&format!("vote round {round} has not been recorded")));
    }
    let to = from.successor().ok_or_else(|| illegal("no successor"))?;
    tx.emit(EventKind::StageChanged { from, to });
    if to.return_index().is_some() {
        apply_world_degradation(tx);
    }
    Ok(to)
}

/// Degradation on a return equals the number of returns already completed
/// (0, 1, 2). Idempotent within a stage and never lowers the level.
pub fn apply_world_degradation(tx: &mut Tx) -> WorldState {
    if let Some(target) = tx.state().stage.return_index() {
        if target > tx.state().world.degradation {
            tx.emit(EventKind::WorldChanged { degradation: target });
        }
    }
    tx.state().world
}

/// Leaves interlude stages whose vote is settled.
pub fn settle(tx: &mut Tx) -> Result<(), GameError> {
    while tx.state().stage.is_interlude() && tx.state().pending_vote().is_none() {
        advance_stage(tx)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "line", rename_all = "snake_case")]
pub enum GateDecision {
    Deny(String),
    RequestId(String),
    Allow,
}

/// The access rules of the level 2 guard.
pub fn security_gate(
    state: &SessionState,
    scenario: &ScenarioDefinition,
    mentioned_target: bool,
    presented_item: Option<&ItemId>,
) -> Result<GateDecision, GameError> {
    if state.stage != Stage::Level2SecurityGate {
        return Err(GameError::WrongStage { stage: state.stage });
    }
    let gate = &scenario.security_gate;
    if !mentioned_target {
        return Ok(GateDecision::Deny(gate.deny_line.clone()));
    }
    let valid = presented_item
        .map(|item| gate.accepted_items.contains(item) && state.has_item(item.as_str()))
        .unwrap_or(false);
    if valid {
        Ok(GateDecision::Allow)
    } else {
        Ok(GateDecision::RequestId(gate.request_id_line.clone()))
    }
}

/// Resolves the final yes/no question. Supporting the repeal leads to the
/// bad ending.
pub fn final_decision(tx: &mut Tx, support_repeal: bool) -> Result<Ending, GameError> {
    let stage = tx.state().stage;
    if stage != Stage::FinalDecision {
        return Err(GameError::WrongStage { stage });
    }
    let ending = if support_repeal { Ending::Bad } else { Ending::Alternate };
    tx.emit(EventKind::DecisionMade { support_repeal });
    tx.emit(EventKind::StageChanged { from: stage, to: Stage::Ended });
    tx.emit(EventKind::EndingReached { ending });
    Ok(ending)
}

/// Executes one trigger effect against the session.
pub fn apply_action(tx: &mut Tx, action: &GameAction) -> Result<(), GameError> {
    let stage = tx.state().stage;
    let illegal = || GameError::IllegalAction { action: action.clone(), stage };
    match action {
        GameAction::AdvanceStage => {
            if stage.level().is_none() {
                return Err(illegal());
            }
            advance_stage(tx)?;
            settle(tx)?;
        }
        GameAction::GrantItem { item } => {
            if !tx.state().has_item(item.as_str()) {
                tx.emit(EventKind::ItemGranted { item: item.clone() });
            }
        }
        GameAction::SetWorldDegradation { level } => {
            if *level > 2 {
                return Err(illegal());
            }
            if *level > tx.state().world.degradation {
                tx.emit(EventKind::WorldChanged { degradation: *level });
            }
        }
        GameAction::OpenVote { round } => {
            if tx.state().pending_vote() != Some(*round) {
                return Err(illegal());
            }
        }
        GameAction::OfferFinalDecision => {
            if stage != Stage::FinalDecision {
                return Err(illegal());
            }
        }
        GameAction::ReturnPredefined { .. } => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::bundled_ecoecho;

    fn at() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2026-01-01T00:00:00Z").unwrap().with_timezone(&Utc)
    }

    fn fresh() -> (ScenarioDefinition, SessionState) {
        let s = bundled_ecoecho();
        let (state, _) = new_session(&s, SessionId::from("t"), at());
        (s, state)
    }

    fn vote(tx: &mut Tx, round: u8) {
        let stage = tx.state().stage;
        tx.emit(EventKind::VoteCast { round, votes: 3, stage_at_vote: stage });
    }

    fn at_stage(target: Stage) -> SessionState {
        let (_, mut state) = fresh();
        let mut tx = Tx::begin(&state, at());
        while tx.state().stage != target {
            if let Some(r) = tx.state().pending_vote() {
                vote(&mut tx, r);
            }
            if tx.state().stage == target {
                break;
            }
            advance_stage(&mut tx).unwrap();
        }
        tx.commit(&mut state);
        state
    }

    #[test]
    fn new_session_starts_at_opening_with_key_item() {
        let (_, state) = fresh();
        assert_eq!(state.stage, Stage::Opening);
        assert_eq!(state.world.degradation, 0);
        assert!(state.votes.is_empty());
        assert_eq!(
            state.inventory.iter().map(ItemId::as_str).collect::<Vec<_>>(),
            vec!["gasoline_quest_key"]
        );
        assert_eq!(state.pending_vote(), Some(1));
    }

    #[test]
    fn opening_needs_round_one_vote() {
        let (_, state) = fresh();
        let mut tx = Tx::begin(&state, at());
        assert!(matches!(advance_stage(&mut tx), Err(GameError::IllegalTransition { .. })));
        vote(&mut tx, 1);
        assert_eq!(advance_stage(&mut tx).unwrap(), Stage::Level1Media);
    }

    #[test]
    fn level_one_advances_to_return_one() {
        let state = at_stage(Stage::Level1Media);
        let mut tx = Tx::begin(&state, at());
        assert_eq!(advance_stage(&mut tx).unwrap(), Stage::Return1);
        assert_eq!(tx.state().world.degradation, 0);
    }

    #[test]
    fn ended_rejects_everything() {
        let state = at_stage(Stage::FinalDecision);
        let mut tx = Tx::begin(&state, at());
        assert!(matches!(advance_stage(&mut tx), Err(GameError::IllegalTransition { .. })));
        final_decision(&mut tx, true).unwrap();
        assert_eq!(tx.state().stage, Stage::Ended);
        vote(&mut tx, 4);
        assert!(matches!(advance_stage(&mut tx), Err(GameError::IllegalTransition { .. })));
        assert!(matches!(final_decision(&mut tx, false), Err(GameError::WrongStage { .. })));
    }

    #[test]
    fn degradation_schedule_across_returns() {
        let state = at_stage(Stage::Return2);
        assert_eq!(state.world.degradation, 1);
        let mut tx = Tx::begin(&state, at());
        assert_eq!(apply_world_degradation(&mut tx).degradation, 1);
        assert!(tx.events().is_empty(), "second call in the same return is a no-op");
        let state = at_stage(Stage::Return3);
        assert_eq!(state.world.degradation, 2);
    }

    #[test]
    fn gate_rules() {
        let mut state = at_stage(Stage::Level2SecurityGate);
        let s = bundled_ecoecho();
        assert_eq!(
            security_gate(&state, &s, false, None).unwrap(),
            GateDecision::Deny("Sorry, I can't let you in without knowing who you're looking for.".into())
        );
        assert_eq!(
            security_gate(&state, &s, true, None).unwrap(),
            GateDecision::RequestId("Please show your identification.".into())
        );
        let card = ItemId::from("press_card");
        // Presenting a card the player does not hold is not identification.
        assert!(matches!(security_gate(&state, &s, true, Some(&card)).unwrap(), GateDecision::RequestId(_)));
        state.inventory.insert(card.clone());
        assert_eq!(security_gate(&state, &s, true, Some(&card)).unwrap(), GateDecision::Allow);
    }

    #[test]
    fn gate_outside_level_two_is_wrong_stage() {
        let (s, state) = fresh();
        assert_eq!(
            security_gate(&state, &s, true, None),
            Err(GameError::WrongStage { stage: Stage::Opening })
        );
    }

    #[test]
    fn final_decision_branches() {
        let state = at_stage(Stage::FinalDecision);
        let mut tx = Tx::begin(&state, at());
        assert_eq!(final_decision(&mut tx, true).unwrap(), Ending::Bad);
        assert_eq!(tx.state().world_scene(), 2);
        assert_eq!(tx.state().pending_vote(), Some(4));

        let mut tx = Tx::begin(&state, at());
        assert_eq!(final_decision(&mut tx, false).unwrap(), Ending::Alternate);
        assert_eq!(tx.state().world_scene(), 0);
        assert_eq!(tx.state().world.degradation, 2);
    }

    #[test]
    fn final_decision_at_level_three_is_wrong_stage() {
        let state = at_stage(Stage::Level3Union);
        let mut tx = Tx::begin(&state, at());
        assert_eq!(
            final_decision(&mut tx, true),
            Err(GameError::WrongStage { stage: Stage::Level3Union })
        );
    }

    #[test]
    fn settle_leaves_return_three_immediately() {
        let state = at_stage(Stage::Level4Government);
        let mut tx = Tx::begin(&state, at());
        apply_action(&mut tx, &GameAction::AdvanceStage).unwrap();
        assert_eq!(tx.state().stage, Stage::FinalDecision);
        assert_eq!(tx.state().world.degradation, 2);
        apply_action(&mut tx, &GameAction::OfferFinalDecision).unwrap();
    }

    #[test]
    fn failed_tx_leaves_state_untouched() {
        let (_, state) = fresh();
        let before = state.clone();
        let mut tx = Tx::begin(&state, at());
        assert!(apply_action(&mut tx, &GameAction::AdvanceStage).is_err());
        drop(tx);
        assert_eq!(state, before);
    }

    #[test]
    fn full_legal_run_offers_four_votes() {
        let (_, state) = fresh();
        let mut tx = Tx::begin(&state, at());
        let mut offered = 0;
        loop {
            if let Some(r) = tx.state().pending_vote() {
                offered += 1;
                vote(&mut tx, r);
            }
            match tx.state().stage {
                Stage::FinalDecision => {
                    final_decision(&mut tx, true).unwrap();
                }
                Stage::Ended => {
                    if tx.state().pending_vote().is_none() {
                        break;
                    }
                }
                _ => {
                    advance_stage(&mut tx).unwrap();
                }
            }
        }
        assert_eq!(offered, 4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        #[derive(Debug, Clone)]
        enum Op {
            Advance,
            Vote,
            Decide(bool),
            Degrade(u8),
        }

        fn op() -> impl Strategy<Value = Op> {
            prop_oneof![
                4 => Just(Op::Advance),
                3 => Just(Op::Vote),
                1 => any::<bool>().prop_map(Op::Decide),
                1 => (0u8..3).prop_map(Op::Degrade),
            ]
        }

        proptest! {
            #[test]
            fn stage_sequence_is_a_prefix_of_canonical_order(ops in prop::collection::vec(op(), 0..60)) {
                let (_, state) = fresh();
                let mut tx = Tx::begin(&state, at());
                let mut visited = vec![Stage::Opening];
                let mut last_degradation = 0;
                for op in ops {
                    let before = tx.state().stage;
                    let result = match op {
                        Op::Advance => advance_stage(&mut tx).map(|_| ()),
                        Op::Vote => {
                            if let Some(r) = tx.state().pending_vote() { vote(&mut tx, r); }
                            Ok(())
                        }
                        Op::Decide(b) => final_decision(&mut tx, b).map(|_| ()),
                        Op::Degrade(l) => apply_action(&mut tx, &GameAction::SetWorldDegradation { level: l }),
                    };
                    let after = tx.state().stage;
                    if result.is_ok() && after != before {
                        prop_assert_eq!(after.index(), before.index() + 1);
                        visited.push(after);
                    } else {
                        prop_assert_eq!(after, before);
                    }
                    prop_assert!(tx.state().world.degradation >= last_degradation);
                    last_degradation = tx.state().world.degradation;
                    prop_assert_eq!(tx.state().ending.is_some(), tx.state().stage == Stage::Ended);
                    prop_assert!(tx.state().votes.len() <= 4);
                }
                prop_assert_eq!(&visited[..], &Stage::ALL[..visited.len()]);
            }
        }
    }
}
