use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::EventKind;
use crate::game::{self, GameError, Stage, Tx};

pub const MAX_VOTES: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub round: u8,
    pub votes: u8,
    pub stage_at_vote: Stage,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VoteError {
    #[error("{votes} votes is outside 0..={MAX_VOTES}")]
    OutOfRange { votes: i64 },
    #[error("round {round} is not open (pending: {pending:?})")]
    WrongRound { round: u8, pending: Option<u8> },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Records the pending round's vote and lets the story continue.
pub fn record_vote(tx: &mut Tx, round: u8, votes: i64) -> Result<VoteRecord, VoteError> {
    let votes = u8::try_from(votes)
        .ok()
        .filter(|v| *v <= MAX_VOTES)
        .ok_or(VoteError::OutOfRange { votes })?;
    let pending = tx.state().pending_vote();
    if pending != Some(round) {
        return Err(VoteError::WrongRound { round, pending });
    }
    let stage_at_vote = tx.state().stage;
    tx.emit(EventKind::VoteCast { round, votes, stage_at_vote });
    let record = tx.state().votes.last().cloned().expect("vote just applied");
    game::settle(tx)?;
    Ok(record)
}
