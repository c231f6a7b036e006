//! One-session facade over dialogue, game rules and votes.
//!
//! Every operation works on a copy of the session and hands back the new
//! state together with the stamped events that produced it. Callers
//! persist the events first and only then [`LiveSession::accept`] the
//! step, so a failed write never leaves memory ahead of the log.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::assessment::{record_vote, VoteError, VoteRecord};
use crate::dialogue::{process_player_input, DialogueError, TurnOutcome};
use crate::event::{fold, stamp, FoldError, SessionEvent};
use crate::game::{self, Ending, GameError, SessionState, Tx};
use crate::ids::{NpcId, SessionId};
use crate::llm::Gateway;
use crate::scenario::ScenarioDefinition;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Vote(#[from] VoteError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error("log belongs to scenario `{found}`, engine runs `{expected}`")]
    ScenarioMismatch { expected: String, found: String },
}

/// A session's current state and the sequence number of its next event.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveSession {
    pub state: SessionState,
    pub next_sequence: u64,
}

impl LiveSession {
    /// Takes over the state computed by a step and returns its value.
    pub fn accept<T>(&mut self, step: Step<T>) -> T {
        self.next_sequence += step.events.len() as u64;
        self.state = step.state;
        step.value
    }
}

/// Result of one engine operation, not yet applied to the live session.
#[derive(Debug, Clone)]
pub struct Step<T> {
    pub value: T,
    pub events: Vec<SessionEvent>,
    pub state: SessionState,
}

#[derive(Debug, Clone)]
pub struct Engine {
    scenario: Arc<ScenarioDefinition>,
    gateway: Gateway,
}

impl Engine {
    pub fn new(scenario: Arc<ScenarioDefinition>, gateway: Gateway) -> Self {
        Self { scenario, gateway }
    }

    pub fn scenario(&self) -> &ScenarioDefinition {
        &self.scenario
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn new_session(&self, id: SessionId, at: DateTime<Utc>) -> (LiveSession, Vec<SessionEvent>) {
        let (state, kinds) = game::new_session(&self.scenario, id, at);
        let events = stamp(&state.session_id, 0, at, kinds);
        let session = LiveSession { state, next_sequence: events.len() as u64 };
        (session, events)
    }

    /// Rebuilds a live session from its stored log.
    pub fn resume(&self, events: &[SessionEvent]) -> Result<LiveSession, EngineError> {
        let state = fold(events)?;
        if state.scenario_id != self.scenario.id {
            return Err(EngineError::ScenarioMismatch {
                expected: self.scenario.id.clone(),
                found: state.scenario_id,
            });
        }
        Ok(LiveSession { state, next_sequence: events.len() as u64 })
    }

    pub fn message(
        &self,
        session: &LiveSession,
        npc: &NpcId,
        text: &str,
        at: DateTime<Utc>,
    ) -> Result<Step<TurnOutcome>, EngineError> {
        let mut tx = Tx::begin(&session.state, at);
        let outcome = process_player_input(&self.scenario, &self.gateway, &mut tx, npc, text)?;
        Ok(finish(session, tx, outcome))
    }

    pub fn vote(
        &self,
        session: &LiveSession,
        round: u8,
        votes: i64,
        at: DateTime<Utc>,
    ) -> Result<Step<VoteRecord>, EngineError> {
        let mut tx = Tx::begin(&session.state, at);
        let record = record_vote(&mut tx, round, votes)?;
        Ok(finish(session, tx, record))
    }

    pub fn decide(
        &self,
        session: &LiveSession,
        support_repeal: bool,
        at: DateTime<Utc>,
    ) -> Result<Step<Ending>, EngineError> {
        let mut tx = Tx::begin(&session.state, at);
        let ending = game::final_decision(&mut tx, support_repeal)?;
        Ok(finish(session, tx, ending))
    }
}

fn finish<T>(session: &LiveSession, tx: Tx, value: T) -> Step<T> {
    let at = tx.at();
    let mut state = session.state.clone();
    let kinds = tx.commit(&mut state);
    let events = stamp(&state.session_id, session.next_sequence, at, kinds);
    Step { value, events, state }
}
