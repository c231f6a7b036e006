use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use ecoecho_core::event::{strip_timestamps, EventKind};
use ecoecho_core::game::{Ending, Stage};
use ecoecho_core::llm::StubScript;
use ecoecho_core::playthrough::{
    bundled_script, play, run_playthrough, script_from_log, stub_engine, Clock, PlayerScript,
};
use ecoecho_core::scenario::bundled_ecoecho;
use ecoecho_core::store::SessionStore;
use ecoecho_core::SessionId;

fn start() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2026-03-01T09:00:00Z").unwrap().with_timezone(&Utc)
}

fn run(script: &str, seed: u64, dir: &std::path::Path) -> ecoecho_core::playthrough::PlaythroughSummary {
    run_playthrough(
        Arc::new(bundled_ecoecho()),
        &bundled_script(script).unwrap(),
        StubScript::bundled(),
        seed,
        dir,
        Clock::System,
    )
    .unwrap()
}

#[test]
fn bad_ending_script() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let s = run("bad_ending", 7, dir.path());
    assert!(t.elapsed() < Duration::from_secs(5));
    assert_eq!(s.ending, Some(Ending::Bad));
    assert_eq!(s.final_stage, Stage::Ended);
    assert_eq!(s.world_scene, 2);
    assert_eq!(s.votes, [Some(4), Some(0), Some(0), Some(5)]);
    for item in ["gasoline_quest_key", "press_card", "strike_evidence", "strike_pledge"] {
        assert!(s.items.iter().any(|i| i == item), "missing {item}");
    }
    assert_eq!(s.session_id, SessionId::from("playthrough-7"));
    assert!(dir.path().join("summary.json").is_file());
}

#[test]
fn alternate_ending_script() {
    let dir = tempfile::tempdir().unwrap();
    let s = run("alternate_ending", 7, dir.path());
    assert_eq!(s.ending, Some(Ending::Alternate));
    assert_eq!(s.world_scene, 0);
    assert_eq!(s.final_stage, Stage::Ended);
}

#[test]
fn every_stage_is_visited_in_order() {
    let engine = stub_engine(Arc::new(bundled_ecoecho()), StubScript::bundled());
    let (_, log) = play(&engine, "visit".into(), &bundled_script("bad_ending").unwrap(), Clock::System).unwrap();
    let mut visited = vec![Stage::Opening];
    visited.extend(log.iter().filter_map(|e| match e.kind {
        EventKind::StageChanged { to, .. } => Some(to),
        _ => None,
    }));
    assert_eq!(visited, Stage::ALL.to_vec());
}

#[test]
fn two_runs_match_modulo_timestamps() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        run("bad_ending", 99, dir);
    }
    let id = SessionId::from("playthrough-99");
    let la = SessionStore::open(a.path()).unwrap().load_session_events(&id).unwrap();
    let lb = SessionStore::open(b.path()).unwrap().load_session_events(&id).unwrap();
    assert_eq!(strip_timestamps(&la), strip_timestamps(&lb));
}

#[test]
fn fixed_clock_logs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let script = bundled_script("alternate_ending").unwrap();
    for dir in [a.path(), b.path()] {
        run_playthrough(Arc::new(bundled_ecoecho()), &script, StubScript::bundled(), 5, dir, Clock::Fixed(start()))
            .unwrap();
    }
    let rel = "sessions/playthrough-5.log";
    assert_eq!(std::fs::read(a.path().join(rel)).unwrap(), std::fs::read(b.path().join(rel)).unwrap());
}

#[test]
fn replaying_a_stored_log_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    run("bad_ending", 3, dir.path());
    let original = SessionStore::open(dir.path())
        .unwrap()
        .load_session_events(&"playthrough-3".into())
        .unwrap();
    let replay = script_from_log(&original);
    let engine = stub_engine(Arc::new(bundled_ecoecho()), StubScript::bundled().with_seed(3));
    let (_, log) = play(&engine, "playthrough-3".into(), &replay, Clock::System).unwrap();
    assert_eq!(strip_timestamps(&log), strip_timestamps(&original));
}

#[test]
fn golden_log_replays_identically() {
    let golden = include_str!("fixtures/golden_bad_ending.log");
    let events: Vec<_> = golden
        .lines()
        .map(|l| ecoecho_core::event::SessionEvent::from_json_line(l).unwrap())
        .collect();
    let engine = stub_engine(Arc::new(bundled_ecoecho()), StubScript::bundled().with_seed(2056));
    let (_, log) = play(&engine, events[0].session_id.clone(), &script_from_log(&events), Clock::Fixed(start())).unwrap();
    let rendered: String = log.iter().map(|e| e.to_json_line() + "\n").collect();
    assert_eq!(rendered, golden);
}

#[test]
fn scripts_round_trip_through_toml() {
    let s = bundled_script("bad_ending").unwrap();
    assert_eq!(PlayerScript::from_toml_str(&s.to_toml_string()).unwrap(), s);
}
