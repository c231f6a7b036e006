//! Scripted, headless play against a provider.
//!
//! A player script is an ordered list of steps:
//!
//! ```toml
//! name = "example"
//!
//! [[steps]]
//! kind = "vote"
//! votes = 4
//!
//! [[steps]]
//! kind = "say"
//! npc = "lisa"
//! text = "I have a scoop about T energy."
//!
//! [[steps]]
//! kind = "decide"
//! support_repeal = true
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Engine, EngineError, LiveSession};
use crate::event::{EventKind, SessionEvent};
use crate::game::{Ending, Stage};
use crate::ids::{ItemId, NpcId, SessionId};
use crate::llm::{Gateway, RetryPolicy, StubProvider, StubScript};
use crate::scenario::ScenarioDefinition;
use crate::store::{SessionStore, StoreError};

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptStep {
    Say {
        npc: NpcId,
        text: String,
    },
    /// Votes for `round`, or for the pending round when omitted.
    Vote {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        round: Option<u8>,
        votes: i64,
    },
    Decide {
        support_repeal: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerScript {
    #[serde(default)]
    pub name: String,
    pub steps: Vec<ScriptStep>,
}

impl PlayerScript {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scripts always serialize")
    }
}

/// Inputs recorded in a session log, as a script that replays them.
pub fn script_from_log(events: &[SessionEvent]) -> PlayerScript {
    let steps = events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::PlayerInput { turn } => Some(ScriptStep::Say { npc: turn.npc.clone(), text: turn.text.clone() }),
            EventKind::VoteCast { round, votes, .. } => {
                Some(ScriptStep::Vote { round: Some(*round), votes: i64::from(*votes) })
            }
            EventKind::DecisionMade { support_repeal } => Some(ScriptStep::Decide { support_repeal: *support_repeal }),
            _ => None,
        })
        .collect();
    PlayerScript { name: "replay".into(), steps }
}

/// Where event timestamps come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    System,
    /// Starts at the given instant and advances one second per step, so
    /// repeated runs produce byte-identical logs.
    Fixed(DateTime<Utc>),
}

impl Clock {
    fn at(self, step: usize) -> DateTime<Utc> {
        match self {
            Clock::System => Utc::now(),
            Clock::Fixed(start) => start + Duration::seconds(step as i64),
        }
    }
}

#[derive(Debug, Error)]
pub enum PlaythroughError {
    #[error("step {index} ({step}): {source}")]
    Step {
        index: usize,
        step: String,
        #[source]
        source: EngineError,
    },
    #[error("step {index}: no vote is pending at stage {stage:?}")]
    NoPendingVote { index: usize, stage: Stage },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaythroughSummary {
    pub session_id: SessionId,
    pub script: String,
    pub steps: usize,
    pub final_stage: Stage,
    pub ending: Option<Ending>,
    pub world_scene: u8,
    /// Votes by round 1..=4; `None` where the round was never reached.
    pub votes: [Option<u8>; 4],
    pub items: Vec<ItemId>,
    pub events: u64,
    pub log: PathBuf,
}

/// Executes `script` and returns the live session with its full log.
pub fn play(
    engine: &Engine,
    session_id: SessionId,
    script: &PlayerScript,
    clock: Clock,
) -> Result<(LiveSession, Vec<SessionEvent>), PlaythroughError> {
    let (mut session, mut log) = engine.new_session(session_id, clock.at(0));
    for (index, step) in script.steps.iter().enumerate() {
        let at = clock.at(index + 1);
        let fail = |source: EngineError| PlaythroughError::Step { index, step: describe(step), source };
        match step {
            ScriptStep::Say { npc, text } => {
                let s = engine.message(&session, npc, text, at).map_err(fail)?;
                log.extend(s.events.iter().cloned());
                session.accept(s);
            }
            ScriptStep::Vote { round, votes } => {
                let round = match round.or(session.state.pending_vote()) {
                    Some(r) => r,
                    None => return Err(PlaythroughError::NoPendingVote { index, stage: session.state.stage }),
                };
                let s = engine.vote(&session, round, *votes, at).map_err(fail)?;
                log.extend(s.events.iter().cloned());
                session.accept(s);
            }
            ScriptStep::Decide { support_repeal } => {
                let s = engine.decide(&session, *support_repeal, at).map_err(fail)?;
                log.extend(s.events.iter().cloned());
                session.accept(s);
            }
        }
    }
    Ok((session, log))
}

fn describe(step: &ScriptStep) -> String {
    match step {
        ScriptStep::Say { npc, .. } => format!("say to {npc}"),
        ScriptStep::Vote { votes, .. } => format!("vote {votes}"),
        ScriptStep::Decide { support_repeal } => format!("decide {support_repeal}"),
    }
}

/// An engine backed by the deterministic stub provider.
pub fn stub_engine(scenario: Arc<ScenarioDefinition>, stub: StubScript) -> Engine {
    let gateway = Gateway::new(Arc::new(StubProvider::new(stub)), RetryPolicy::immediate(0));
    Engine::new(scenario, gateway)
}

/// Plays `script` against the stub seeded with `seed`, writing the session
/// log under `out_dir/sessions/` and a summary to `out_dir/summary.json`.
/// A previous log of the same session id is replaced.
pub fn run_playthrough(
    scenario: Arc<ScenarioDefinition>,
    script: &PlayerScript,
    stub: StubScript,
    seed: u64,
    out_dir: &Path,
    clock: Clock,
) -> Result<PlaythroughSummary, PlaythroughError> {
    let engine = stub_engine(scenario, stub.with_seed(seed));
    let id = SessionId::from(format!("playthrough-{seed}"));
    let (session, log) = play(&engine, id.clone(), script, clock)?;

    let store = SessionStore::open(out_dir)?;
    let path = store.log_path(&id)?;
    match fs::remove_file(&path) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
        Err(source) => return Err(PlaythroughError::Io { path, source }),
    }
    store.append_events(&log)?;

    let state = &session.state;
    let mut votes = [None; 4];
    for v in &state.votes {
        if let Some(slot) = votes.get_mut(usize::from(v.round).wrapping_sub(1)) {
            *slot = Some(v.votes);
        }
    }
    let summary = PlaythroughSummary {
        session_id: id,
        script: script.name.clone(),
        steps: script.steps.len(),
        final_stage: state.stage,
        ending: state.ending,
        world_scene: state.world_scene(),
        votes,
        items: state.inventory.iter().cloned().collect(),
        events: session.next_sequence,
        log: path,
    };
    let summary_path = out_dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, json + "\n").map_err(|source| PlaythroughError::Io { path: summary_path, source })?;
    Ok(summary)
}

/// The bundled scripts, by name.
pub fn bundled_script(name: &str) -> Option<PlayerScript> {
    let text = match name {
        "bad_ending" | "bad-ending" => include_str!("../content/scripts/bad_ending.toml"),
        "alternate_ending" | "alternate-ending" => include_str!("../content/scripts/alternate_ending.toml"),
        _ => return None,
    };
    Some(PlayerScript::from_toml_str(text).expect("bundled scripts parse"))
}
