//! Session events: the only way session state changes.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{DecidedLayer, DialogueTurn, Strategy};
use crate::game::{Ending, SessionState, Stage};
use crate::ids::{IntentId, ItemId, NpcId, SessionId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    SessionStarted {
        scenario_id: String,
        inventory: Vec<ItemId>,
    },
    PlayerInput {
        turn: DialogueTurn,
    },
    IntentDecided {
        npc: NpcId,
        intent: Option<IntentId>,
        confidence: f64,
        layer: DecidedLayer,
    },
    NpcReply {
        turn: DialogueTurn,
        strategy: Strategy,
    },
    ItemGranted {
        item: ItemId,
    },
    StageChanged {
        from: Stage,
        to: Stage,
    },
    WorldChanged {
        degradation: u8,
    },
    VoteCast {
        round: u8,
        votes: u8,
        stage_at_vote: Stage,
    },
    DecisionMade {
        support_repeal: bool,
    },
    EndingReached {
        ending: Ending,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SessionStarted { .. } => "session_started",
            EventKind::PlayerInput { .. } => "player_input",
            EventKind::IntentDecided { .. } => "intent_decided",
            EventKind::NpcReply { .. } => "npc_reply",
            EventKind::ItemGranted { .. } => "item_granted",
            EventKind::StageChanged { .. } => "stage_changed",
            EventKind::WorldChanged { .. } => "world_changed",
            EventKind::VoteCast { .. } => "vote_cast",
            EventKind::DecisionMade { .. } => "decision_made",
            EventKind::EndingReached { .. } => "ending_reached",
        }
    }
}

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session_id: SessionId,
    /// Position in the session log, starting at 0 with no gaps.
    pub sequence: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl SessionEvent {
    /// Parses one JSON log line.
    pub fn from_json_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events always serialize")
    }
}

/// Stamps a batch of events with consecutive sequence numbers.
pub fn stamp(
    session_id: &SessionId,
    first_sequence: u64,
    at: DateTime<Utc>,
    kinds: Vec<EventKind>,
) -> Vec<SessionEvent> {
    kinds
        .into_iter()
        .enumerate()
        .map(|(i, kind)| SessionEvent {
            session_id: session_id.clone(),
            sequence: first_sequence + i as u64,
            timestamp: at,
            kind,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error("event log is empty")]
    Empty,
    #[error("first event must be session_started, found {0}")]
    MissingStart(&'static str),
    #[error("sequence gap: expected {expected}, found {found}")]
    Gap { expected: u64, found: u64 },
    #[error("event {sequence} belongs to session {found}")]
    ForeignEvent { sequence: u64, found: SessionId },
}

/// Rebuilds session state from its log.
pub fn fold(events: &[SessionEvent]) -> Result<SessionState, FoldError> {
    let first = events.first().ok_or(FoldError::Empty)?;
    let mut state = SessionState::from_start(first.session_id.clone(), &first.kind, first.timestamp)
        .ok_or(FoldError::MissingStart(first.kind.name()))?;
    for (i, event) in events.iter().enumerate() {
        if event.sequence != i as u64 {
            return Err(FoldError::Gap { expected: i as u64, found: event.sequence });
        }
        if event.session_id != first.session_id {
            return Err(FoldError::ForeignEvent {
                sequence: event.sequence,
                found: event.session_id.clone(),
            });
        }
        if i > 0 {
            state.apply(&event.kind, event.timestamp);
        }
    }
    Ok(state)
}

/// Event kinds in order, without timestamps or sequence numbers.
pub fn strip_timestamps(events: &[SessionEvent]) -> Vec<EventKind> {
    events.iter().map(|e| e.kind.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn sample() -> Vec<SessionEvent> {
        let id = SessionId::from("s1");
        stamp(
            &id,
            0,
            at("2026-01-01T00:00:00Z"),
            vec![
                EventKind::SessionStarted {
                    scenario_id: "ecoecho".into(),
                    inventory: vec![ItemId::from("gasoline_quest_key")],
                },
                EventKind::VoteCast { round: 1, votes: 4, stage_at_vote: Stage::Opening },
                EventKind::StageChanged { from: Stage::Opening, to: Stage::Level1Media },
                EventKind::ItemGranted { item: ItemId::from("press_card") },
            ],
        )
    }

    #[test]
    fn json_line_shape() {
        let e = &sample()[1];
        let v: serde_json::Value = serde_json::from_str(&e.to_json_line()).unwrap();
        assert_eq!(v["kind"], "vote_cast");
        assert_eq!(v["sequence"], 1);
        assert_eq!(v["payload"]["votes"], 4);
        assert_eq!(v["payload"]["stage_at_vote"], "opening");
    }

    #[test]
    fn json_round_trip() {
        for e in sample() {
            assert_eq!(SessionEvent::from_json_line(&e.to_json_line()).unwrap(), e);
        }
    }

    #[test]
    fn fold_builds_state() {
        let s = fold(&sample()).unwrap();
        assert_eq!(s.stage, Stage::Level1Media);
        assert_eq!(s.votes.len(), 1);
        assert!(s.has_item("press_card"));
        assert!(s.has_item("gasoline_quest_key"));
    }

    #[test]
    fn fold_rejects_bad_logs() {
        assert_eq!(fold(&[]), Err(FoldError::Empty));
        let mut events = sample();
        events[2].sequence = 7;
        assert_eq!(fold(&events), Err(FoldError::Gap { expected: 2, found: 7 }));
        let events = sample();
        assert_eq!(fold(&events[1..]), Err(FoldError::MissingStart("vote_cast")));
        let mut events = sample();
        events[3].session_id = SessionId::from("other");
        assert!(matches!(fold(&events), Err(FoldError::ForeignEvent { sequence: 3, .. })));
    }

    #[test]
    fn strip_timestamps_ignores_clock() {
        let a = sample();
        let mut b = sample();
        for e in &mut b {
            e.timestamp = at("2030-05-05T12:00:00Z");
        }
        assert_ne!(a, b);
        assert_eq!(strip_timestamps(&a), strip_timestamps(&b));
    }
}
