mod common;

use ecoecho_core::assessment::{voting_heatmap, VoteError, MAX_VOTES};
use ecoecho_core::engine::{EngineError, LiveSession};
use ecoecho_core::playthrough::{bundled_script, play, Clock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn batch(n: usize) -> Vec<LiveSession> {
    let engine = common::engine();
    let mut rng = ChaCha8Rng::seed_from_u64(2056);
    (0..n)
        .map(|i| {
            let mut script = bundled_script(if i % 3 == 0 { "alternate_ending" } else { "bad_ending" }).unwrap();
            for step in &mut script.steps {
                if let ecoecho_core::playthrough::ScriptStep::Vote { votes, .. } = step {
                    *votes = rng.gen_range(0..=i64::from(MAX_VOTES));
                }
            }
            let start = common::epoch() + chrono::Duration::minutes(i as i64);
            play(&engine, format!("p{i:02}").into(), &script, Clock::Fixed(start)).unwrap().0
        })
        .collect()
}

#[test]
fn twenty_three_sessions_give_a_full_heatmap() {
    let sessions = batch(23);
    let map = voting_heatmap(sessions.iter().map(|s| &s.state));
    assert_eq!(map.dimensions(), (23, 4));
    for row in &map.rows {
        for cell in row.cells {
            assert!(cell.unwrap() <= MAX_VOTES);
        }
    }
    let csv = map.to_csv();
    assert_eq!(csv.lines().count(), 24);
    assert_eq!(csv.lines().next().unwrap(), "session_id,round_1,round_2,round_3,round_4");
}

#[test]
fn partial_sessions_leave_blank_cells() {
    let engine = common::engine();
    let (mut s, _) = engine.new_session("partial".into(), common::epoch());
    let step = engine.vote(&s, 1, 2, common::epoch()).unwrap();
    s.accept(step);
    let map = voting_heatmap([&s.state]);
    assert_eq!(map.rows[0].cells, [Some(2), None, None, None]);
    assert!(map.to_csv().ends_with("partial,2,,,\n"));
}

#[test]
fn votes_are_gated_by_round() {
    let engine = common::engine();
    let (mut s, _) = engine.new_session("gated".into(), common::epoch());
    for round in [0, 2, 3, 4, 5] {
        assert!(matches!(
            engine.vote(&s, round, 1, common::epoch()),
            Err(EngineError::Vote(VoteError::WrongRound { pending: Some(1), .. }))
        ));
    }
    for votes in [-1, 6, 100] {
        assert!(matches!(
            engine.vote(&s, 1, votes, common::epoch()),
            Err(EngineError::Vote(VoteError::OutOfRange { .. }))
        ));
    }
    let step = engine.vote(&s, 1, 0, common::epoch()).unwrap();
    s.accept(step);
    assert!(matches!(
        engine.vote(&s, 1, 3, common::epoch()),
        Err(EngineError::Vote(VoteError::WrongRound { round: 1, pending: None }))
    ));
}

#[test]
fn full_playthrough_has_exactly_four_vote_opportunities() {
    let sessions = batch(3);
    for s in sessions {
        let rounds: Vec<u8> = s.state.votes.iter().map(|v| v.round).collect();
        assert_eq!(rounds, vec![1, 2, 3, 4]);
        assert_eq!(s.state.pending_vote(), None);
    }
}
