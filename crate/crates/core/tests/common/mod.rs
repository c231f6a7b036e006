#![allow(dead_code)]

use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use ecoecho_core::engine::{Engine, LiveSession};
use ecoecho_core::event::SessionEvent;
use ecoecho_core::llm::StubScript;
use ecoecho_core::playthrough::stub_engine;
use ecoecho_core::scenario::bundled_ecoecho;
use ecoecho_core::{NpcId, SessionId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lines that move the bundled story forward, mixed with small talk.
pub const LINES: &[(&str, &str)] = &[
    ("lisa", "Hello, who are you?"),
    ("lisa", "I have a scoop about T energy from the future."),
    ("lisa", "My dad didn't die naturally, did he?"),
    ("lisa", "Tell me the truth about Kane."),
    ("security", "Let me in."),
    ("security", "I need to see Bob."),
    ("security", "Here is my press card."),
    ("bob", "How are the workers?"),
    ("bob", "Let's rally everyone for a general strike."),
    ("jonathan", "Nice office."),
    ("jonathan", "The people are against T energy."),
    ("emilia", "What is this petition about?"),
];

pub fn epoch() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2026-05-01T12:00:00Z").unwrap().with_timezone(&Utc)
}

pub fn engine() -> Engine {
    stub_engine(Arc::new(bundled_ecoecho()), StubScript::bundled())
}

/// Drives a session with `steps` random operations, keeping only the
/// legal ones. Returns the live session and its full log.
pub fn random_playthrough(engine: &Engine, seed: u64, steps: usize) -> (LiveSession, Vec<SessionEvent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut session, mut log) = engine.new_session(SessionId::from(format!("rand-{seed}")), epoch());
    for i in 0..steps {
        let at = epoch() + Duration::seconds(i as i64 + 1);
        match rng.gen_range(0..10) {
            0..=2 => {
                let round = session.state.pending_vote().unwrap_or(rng.gen_range(1..=4));
                if let Ok(step) = engine.vote(&session, round, rng.gen_range(-1..=6), at) {
                    log.extend(step.events.iter().cloned());
                    session.accept(step);
                }
            }
            3 => {
                if let Ok(step) = engine.decide(&session, rng.gen_bool(0.5), at) {
                    log.extend(step.events.iter().cloned());
                    session.accept(step);
                }
            }
            _ => {
                let (npc, text) = LINES.choose(&mut rng).unwrap();
                if let Ok(step) = engine.message(&session, &NpcId::from(*npc), text, at) {
                    log.extend(step.events.iter().cloned());
                    session.accept(step);
                }
            }
        }
    }
    (session, log)
}
