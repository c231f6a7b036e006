mod common;

use std::sync::Arc;

use ecoecho_core::dialogue::{DecidedLayer, DialogueError, Strategy};
use ecoecho_core::engine::{Engine, EngineError, LiveSession};
use ecoecho_core::event::{EventKind, SessionEvent};
use ecoecho_core::llm::{
    Classification, ClassifyRequest, Gateway, Provider, ProviderError, ReplyRequest, RetryPolicy,
};
use ecoecho_core::scenario::bundled_ecoecho;
use ecoecho_core::{IntentId, NpcId};

/// Every call fails, as if the model service were down.
struct Outage;

impl Provider for Outage {
    fn reply(&self, _: &ReplyRequest<'_>) -> Result<String, ProviderError> {
        Err(ProviderError::Timeout)
    }
    fn classify(&self, _: &ClassifyRequest<'_>) -> Result<Classification, ProviderError> {
        Err(ProviderError::Failed("503 service unavailable".into()))
    }
}

/// Always answers with the same intent at a fixed confidence.
struct Unsure(f64);

impl Provider for Unsure {
    fn reply(&self, _: &ReplyRequest<'_>) -> Result<String, ProviderError> {
        Ok("Mm-hm.".into())
    }
    fn classify(&self, _: &ClassifyRequest<'_>) -> Result<Classification, ProviderError> {
        Ok(Classification { intent: Some(IntentId::from("share_future_secret")), confidence: self.0 })
    }
}

fn engine_with(provider: impl Provider + 'static) -> Engine {
    Engine::new(Arc::new(bundled_ecoecho()), Gateway::new(Arc::new(provider), RetryPolicy::immediate(1)))
}

/// A session at level 1 with Lisa.
fn at_level_one(engine: &Engine) -> LiveSession {
    let (mut s, _) = engine.new_session("layers".into(), common::epoch());
    let step = engine.vote(&s, 1, 3, common::epoch()).unwrap();
    s.accept(step);
    s
}

fn say(engine: &Engine, s: &mut LiveSession, npc: &str, text: &str) -> Vec<SessionEvent> {
    let step = engine.message(s, &NpcId::from(npc), text, common::epoch()).unwrap();
    let events = step.events.clone();
    s.accept(step);
    events
}

fn decided(events: &[SessionEvent]) -> (DecidedLayer, Option<String>, DecidedLayer, Strategy) {
    let (mut intent_layer, mut intent, mut reply) = (None, None, None);
    for e in events {
        match &e.kind {
            EventKind::IntentDecided { layer, intent: i, .. } => {
                intent_layer = Some(*layer);
                intent = i.as_ref().map(|i| i.to_string());
            }
            EventKind::NpcReply { turn, strategy } => reply = Some((turn.decided_layer, *strategy)),
            _ => {}
        }
    }
    let (reply_layer, strategy) = reply.unwrap();
    (intent_layer.unwrap(), intent, reply_layer, strategy)
}

#[test]
fn agent_layer_decides_when_confident() {
    let engine = common::engine();
    let mut s = at_level_one(&engine);
    let events = say(&engine, &mut s, "lisa", "Listen, I come from the future.");
    let (layer, intent, reply_layer, strategy) = decided(&events);
    assert_eq!(layer, DecidedLayer::Agent);
    assert_eq!(intent.as_deref(), Some("share_future_secret"));
    assert_eq!(reply_layer, DecidedLayer::Agent);
    assert_eq!(strategy, Strategy::ItemOrAction);
    assert!(s.state.has_item("press_card"));
}

#[test]
fn keyword_layer_takes_over_during_outage() {
    let engine = engine_with(Outage);
    let mut s = at_level_one(&engine);
    let events = say(&engine, &mut s, "lisa", "I have a scoop about T energy.");
    let (layer, intent, reply_layer, strategy) = decided(&events);
    assert_eq!(layer, DecidedLayer::Keyword);
    assert_eq!(intent.as_deref(), Some("share_future_secret"));
    assert_eq!(reply_layer, DecidedLayer::Keyword);
    assert_eq!(strategy, Strategy::ItemOrAction);
}

#[test]
fn keyword_layer_takes_over_below_threshold() {
    let engine = engine_with(Unsure(0.3));
    let mut s = at_level_one(&engine);
    let (layer, intent, ..) = decided(&say(&engine, &mut s, "lisa", "Kane was my father."));
    assert_eq!(layer, DecidedLayer::Keyword);
    assert_eq!(intent.as_deref(), Some("truth_kane_death"));

    let engine = engine_with(Unsure(0.5));
    let mut s = at_level_one(&engine);
    let (layer, intent, ..) = decided(&say(&engine, &mut s, "lisa", "Kane was my father."));
    assert_eq!(layer, DecidedLayer::Agent);
    assert_eq!(intent.as_deref(), Some("share_future_secret"));
}

#[test]
fn predefined_answers_after_six_turns() {
    let engine = common::engine();
    let mut s = at_level_one(&engine);
    for turn in 0..6 {
        let (_, _, reply_layer, strategy) = decided(&say(&engine, &mut s, "lisa", "What's new?"));
        assert_eq!(strategy, Strategy::GeneratedReply, "turn {turn}");
        assert_ne!(reply_layer, DecidedLayer::Predefined);
    }
    let lisa = engine.scenario().npc("lisa").unwrap().predefined_responses.clone();
    for k in 0..lisa.len() + 1 {
        let events = say(&engine, &mut s, "lisa", "What's new?");
        let (_, _, reply_layer, strategy) = decided(&events);
        assert_eq!(reply_layer, DecidedLayer::Predefined);
        assert_eq!(strategy, Strategy::PredefinedAnswer);
        let text = events
            .iter()
            .find_map(|e| match &e.kind {
                EventKind::NpcReply { turn, .. } => Some(turn.text.clone()),
                _ => None,
            })
            .unwrap();
        assert_eq!(text, lisa[k % lisa.len()]);
    }
    assert_eq!(s.state.turn_counter("lisa"), 6 + lisa.len() as u32 + 1);
}

#[test]
fn outage_without_intent_falls_back_to_predefined_line() {
    let engine = engine_with(Outage);
    let mut s = at_level_one(&engine);
    let (layer, intent, reply_layer, strategy) = decided(&say(&engine, &mut s, "lisa", "Nice weather."));
    assert_eq!((layer, intent), (DecidedLayer::None, None));
    assert_eq!(reply_layer, DecidedLayer::Predefined);
    assert_eq!(strategy, Strategy::PredefinedAnswer);
}

#[test]
fn outage_with_no_predefined_lines_is_reported() {
    let engine = engine_with(Outage);
    let (s, _) = engine.new_session("emilia".into(), common::epoch());
    let err = engine.message(&s, &"emilia".into(), "Hello?", common::epoch()).unwrap_err();
    assert!(matches!(err, EngineError::Dialogue(DialogueError::ProviderUnavailable(_))));
}

#[test]
fn unmet_requirements_keep_the_npc_guiding() {
    let engine = common::engine();
    let mut s = at_level_one(&engine);
    let events = say(&engine, &mut s, "lisa", "Tell me the truth about Kane's death.");
    let (layer, intent, _, strategy) = decided(&events);
    assert_eq!(layer, DecidedLayer::Keyword);
    assert_eq!(intent.as_deref(), Some("truth_kane_death"));
    assert_eq!(strategy, Strategy::GeneratedReply);
    assert_eq!(s.state.stage, ecoecho_core::game::Stage::Level1Media);
}

#[test]
fn wrong_stage_and_bad_input_leave_session_untouched() {
    let engine = common::engine();
    let s = at_level_one(&engine);
    let before = s.clone();
    for (npc, text) in [("jonathan", "hi"), ("lisa", "   "), ("nobody", "hi")] {
        assert!(engine.message(&s, &NpcId::from(npc), text, common::epoch()).is_err());
    }
    let long = "a".repeat(2001);
    assert!(matches!(
        engine.message(&s, &"lisa".into(), &long, common::epoch()),
        Err(EngineError::Dialogue(DialogueError::Oversize { len: 2001, max: 2000 }))
    ));
    assert_eq!(s, before);
}
