//! Declarative game content.
//!
//! A scenario is a single TOML document (see `docs/scenario-format.md`).
//! [`load_scenario`] parses and validates it; [`validate_scenario`] reports
//! every problem as a [`Diagnostic`] instead of failing on the first one.
//! A loaded [`ScenarioDefinition`] is immutable and can be shared across
//! sessions behind an `Arc`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Stage;
use crate::ids::{IntentId, ItemId, NpcId};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TURN_LIMIT: u32 = 6;
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;

/// The EcoEcho reference scenario shipped with the crate.
pub const BUNDLED_ECOECHO: &str = include_str!("../content/ecoecho.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpcProfile {
    pub id: NpcId,
    pub name: String,
    pub occupation: String,
    /// Role line used in the summarized prompt header, e.g. "a dedicated
    /// and ambitious investigative journalist".
    #[serde(default)]
    pub role: String,
    pub backstory: String,
    #[serde(default)]
    pub personality_traits: Vec<String>,
    #[serde(default)]
    pub tone: String,
    pub motivation: String,
    pub objective: String,
    #[serde(default)]
    pub dialogue_guidelines: Vec<String>,
    #[serde(default)]
    pub instructions: String,
    #[serde(default)]
    pub example_openers: Vec<String>,
    /// 0 is the evaluator; 1 to 4 are the gated levels.
    pub level: u8,
    #[serde(default)]
    pub predefined_responses: Vec<String>,
    #[serde(default)]
    pub knowledge_bank: Vec<Fact>,
    #[serde(default)]
    pub portrait: String,
}

/// An effect fired when an intent's guards pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameAction {
    AdvanceStage,
    GrantItem { item: ItemId },
    SetWorldDegradation { level: u8 },
    OpenVote { round: u8 },
    OfferFinalDecision,
    ReturnPredefined { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentSpec {
    pub id: IntentId,
    #[serde(rename = "npc")]
    pub owning_npc: NpcId,
    pub task_label: String,
    #[serde(default)]
    pub description: String,
    pub keywords: Vec<String>,
    #[serde(default)]
    pub required_items: Vec<ItemId>,
    #[serde(default)]
    pub effects: Vec<GameAction>,
    /// What the NPC says when the effects fire.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDef {
    pub id: ItemId,
    pub display_name: String,
    pub grantor_npc: NpcId,
    pub trigger_phrases: Vec<String>,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub stage: Stage,
    /// NPC the player can talk to during this stage, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub npc: Option<NpcId>,
    #[serde(default)]
    pub narration: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRound {
    pub round: u8,
    /// Stage after which the round is offered.
    pub stage: Stage,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndingDef {
    pub text: String,
    pub asset: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Endings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bad: Option<EndingDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternate: Option<EndingDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityGate {
    pub npc: NpcId,
    /// Phrases that count as naming the person the visitor is looking for.
    pub mention_phrases: Vec<String>,
    /// Items accepted as identification.
    pub accepted_items: Vec<ItemId>,
    pub deny_line: String,
    pub request_id_line: String,
    pub allow_line: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalDecisionDef {
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDefinition {
    pub format_version: u32,
    pub id: String,
    pub title: String,
    #[serde(default = "default_turn_limit")]
    pub turn_limit: u32,
    #[serde(default = "default_confidence_threshold")]
    pub confidence_threshold: f64,
    #[serde(default)]
    pub starting_items: Vec<ItemId>,
    #[serde(default)]
    pub world_scenes: Vec<String>,
    #[serde(default)]
    pub endings: Endings,
    pub final_decision: FinalDecisionDef,
    pub security_gate: SecurityGate,
    #[serde(default)]
    pub stages: Vec<StageEntry>,
    #[serde(default)]
    pub assessment_rounds: Vec<AssessmentRound>,
    #[serde(default)]
    pub npcs: Vec<NpcProfile>,
    #[serde(default)]
    pub items: Vec<ItemDef>,
    #[serde(default)]
    pub intents: Vec<IntentSpec>,
}

fn default_turn_limit() -> u32 {
    DEFAULT_TURN_LIMIT
}

fn default_confidence_threshold() -> f64 {
    DEFAULT_CONFIDENCE_THRESHOLD
}

impl ScenarioDefinition {
    pub fn npc(&self, id: &str) -> Option<&NpcProfile> {
        self.npcs.iter().find(|n| n.id == id)
    }

    pub fn item(&self, id: &str) -> Option<&ItemDef> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn intent(&self, id: &str) -> Option<&IntentSpec> {
        self.intents.iter().find(|i| i.id == id)
    }

    pub fn npc_at_level(&self, level: u8) -> Option<&NpcProfile> {
        self.npcs.iter().find(|n| n.level == level)
    }

    /// Intents owned by `npc`, in declaration order.
    pub fn intents_for(&self, npc: &str) -> Vec<&IntentSpec> {
        self.intents.iter().filter(|i| i.owning_npc == npc).collect()
    }

    pub fn stage_entry(&self, stage: Stage) -> Option<&StageEntry> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn assessment_round(&self, round: u8) -> Option<&AssessmentRound> {
        self.assessment_rounds.iter().find(|r| r.round == round)
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        toml::to_string(self).map_err(|e| ScenarioError::Schema(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Dotted path to the offending element, e.g. `intents[truth_kane_death].required_items`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.location, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    Schema(String),
    #[error("invalid scenario: {}", render_errors(.0))]
    Validation(Vec<Diagnostic>),
}

fn render_errors(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parses and validates scenario text. Warnings do not fail the load.
pub fn load_scenario(source: &[u8]) -> Result<ScenarioDefinition, ScenarioError> {
    let text = std::str::from_utf8(source)
        .map_err(|e| ScenarioError::Schema(format!("not UTF-8: {e}")))?;
    let scenario: ScenarioDefinition =
        toml::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    let diags = validate_scenario(&scenario);
    if diags.iter().any(|d| d.severity == Severity::Error) {
        return Err(ScenarioError::Validation(diags));
    }
    Ok(scenario)
}

/// The bundled EcoEcho scenario, parsed and validated.
pub fn bundled_ecoecho() -> ScenarioDefinition {
    load_scenario(BUNDLED_ECOECHO.as_bytes()).expect("bundled scenario is valid")
}

struct Checker {
    diags: Vec<Diagnostic>,
}

impl Checker {
    fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            severity: Severity::Warning,
            location: location.into(),
            message: message.into(),
        });
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    for id in ids {
        if !seen.insert(id) && !dups.contains(&id) {
            dups.push(id);
        }
    }
    dups
}

/// Checks every structural invariant of a scenario. Returns an empty list
/// iff the scenario is fully valid.
pub fn validate_scenario(s: &ScenarioDefinition) -> Vec<Diagnostic> {
    let mut c = Checker { diags: Vec::new() };

    if s.format_version != FORMAT_VERSION {
        c.error(
            "format_version",
            format!("unsupported format_version {} (expected {FORMAT_VERSION})", s.format_version),
        );
    }
    if s.id.trim().is_empty() {
        c.error("id", "scenario id is empty");
    }
    if s.turn_limit == 0 {
        c.error("turn_limit", "turn_limit must be positive");
    }
    if !(s.confidence_threshold > 0.0 && s.confidence_threshold <= 1.0) {
        c.error(
            "confidence_threshold",
            format!("confidence_threshold {} is outside (0, 1]", s.confidence_threshold),
        );
    }

    check_npcs(s, &mut c);
    check_items(s, &mut c);
    check_intents(s, &mut c);
    check_stages(s, &mut c);
    check_rounds(s, &mut c);
    check_gate(s, &mut c);

    if s.world_scenes.len() != 3 {
        c.error(
            "world_scenes",
            format!("expected exactly 3 world scenes, found {}", s.world_scenes.len()),
        );
    }
    if s.endings.bad.is_none() {
        c.error("endings.bad", "missing bad ending");
    }
    if s.endings.alternate.is_none() {
        c.error("endings.alternate", "missing alternate ending");
    }
    if s.final_decision.prompt.trim().is_empty() {
        c.error("final_decision.prompt", "final decision prompt is empty");
    }
    for (i, item) in s.starting_items.iter().enumerate() {
        if s.item(item.as_str()).is_none() {
            c.error(
                format!("starting_items[{i}]"),
                format!("starting item `{item}` is not declared"),
            );
        }
    }

    c.diags
}

fn check_npcs(s: &ScenarioDefinition, c: &mut Checker) {
    for dup in duplicates(s.npcs.iter().map(|n| n.id.as_str())) {
        c.error(format!("npcs[{dup}]"), format!("duplicate npc id `{dup}`"));
    }
    let mut by_level: BTreeMap<u8, Vec<&str>> = BTreeMap::new();
    for npc in &s.npcs {
        if npc.level > 4 {
            c.error(
                format!("npcs[{}].level", npc.id),
                format!("level {} is outside 0..=4", npc.level),
            );
            continue;
        }
        by_level.entry(npc.level).or_default().push(npc.id.as_str());
        if (1..=4).contains(&npc.level) && npc.predefined_responses.is_empty() {
            c.error(
                format!("npcs[{}].predefined_responses", npc.id),
                format!("level {} npc `{}` needs at least one predefined response", npc.level, npc.id),
            );
        }
        if npc.name.trim().is_empty() {
            c.error(format!("npcs[{}].name", npc.id), "npc name is empty");
        }
    }
    for level in 0..=4u8 {
        match by_level.get(&level).map(Vec::len).unwrap_or(0) {
            1 => {}
            0 => c.error("npcs", format!("no npc assigned to level {level}")),
            _ => c.error(
                "npcs",
                format!(
                    "level {level} is assigned to more than one npc: {}",
                    by_level[&level].join(", ")
                ),
            ),
        }
    }
}

fn check_items(s: &ScenarioDefinition, c: &mut Checker) {
    for dup in duplicates(s.items.iter().map(|i| i.id.as_str())) {
        c.error(format!("items[{dup}]"), format!("duplicate item id `{dup}`"));
    }
    for item in &s.items {
        let loc = format!("items[{}]", item.id);
        if item.trigger_phrases.iter().all(|p| p.trim().is_empty()) {
            c.error(format!("{loc}.trigger_phrases"), format!("item `{}` has no trigger phrases", item.id));
        }
        if s.npc(item.grantor_npc.as_str()).is_none() {
            c.error(
                format!("{loc}.grantor_npc"),
                format!("grantor npc `{}` is not declared", item.grantor_npc),
            );
        }
    }
}

fn check_intents(s: &ScenarioDefinition, c: &mut Checker) {
    for dup in duplicates(s.intents.iter().map(|i| i.id.as_str())) {
        c.error(format!("intents[{dup}]"), format!("duplicate intent id `{dup}`"));
    }
    for intent in &s.intents {
        let loc = format!("intents[{}]", intent.id);
        let owner = s.npc(intent.owning_npc.as_str());
        if owner.is_none() {
            c.error(
                format!("{loc}.npc"),
                format!("owning npc `{}` is not declared", intent.owning_npc),
            );
        }
        if intent.keywords.iter().all(|k| k.trim().is_empty()) {
            c.error(format!("{loc}.keywords"), format!("intent `{}` has no keywords", intent.id));
        }
        for item in &intent.required_items {
            if s.item(item.as_str()).is_none() {
                c.error(
                    format!("{loc}.required_items"),
                    format!("intent `{}` requires undeclared item `{item}`", intent.id),
                );
            }
        }
        for (i, effect) in intent.effects.iter().enumerate() {
            let eloc = format!("{loc}.effects[{i}]");
            match effect {
                GameAction::AdvanceStage => {
                    let gated = owner.map(|n| (1..=4).contains(&n.level)).unwrap_or(false);
                    if !gated {
                        c.error(
                            eloc,
                            format!(
                                "advance_stage is only valid for intents of level 1-4 npcs (intent `{}`)",
                                intent.id
                            ),
                        );
                    }
                }
                GameAction::GrantItem { item } => {
                    if s.item(item.as_str()).is_none() {
                        c.error(eloc, format!("grant_item references undeclared item `{item}`"));
                    }
                }
                GameAction::SetWorldDegradation { level } => {
                    if *level > 2 {
                        c.error(eloc, format!("world degradation {level} is outside 0..=2"));
                    }
                }
                GameAction::OpenVote { round } => {
                    if !(1..=4).contains(round) {
                        c.error(eloc, format!("vote round {round} is outside 1..=4"));
                    }
                }
                GameAction::OfferFinalDecision => {}
                GameAction::ReturnPredefined { index } => {
                    let len = owner.map(|n| n.predefined_responses.len()).unwrap_or(0);
                    if *index >= len {
                        c.error(
                            eloc,
                            format!("predefined response index {index} out of range ({len} declared)"),
                        );
                    }
                }
            }
        }
        if !intent.effects.is_empty()
            && intent.reply.is_none()
            && !intent
                .effects
                .iter()
                .any(|e| matches!(e, GameAction::ReturnPredefined { .. }))
        {
            c.warn(
                format!("{loc}.reply"),
                format!("intent `{}` fires effects without a reply; a predefined line will be used", intent.id),
            );
        }
    }
}

fn check_stages(s: &ScenarioDefinition, c: &mut Checker) {
    let declared: Vec<Stage> = s.stages.iter().map(|e| e.stage).collect();
    if declared != Stage::ALL {
        c.error(
            "stages",
            format!(
                "stages must list the canonical order {:?}, found {:?}",
                Stage::ALL.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                declared.iter().map(|s| s.as_str()).collect::<Vec<_>>()
            ),
        );
    }
    for entry in &s.stages {
        let loc = format!("stages[{}]", entry.stage.as_str());
        match (&entry.npc, entry.stage.level()) {
            (Some(npc_id), level) => match s.npc(npc_id.as_str()) {
                None => c.error(format!("{loc}.npc"), format!("npc `{npc_id}` is not declared")),
                Some(npc) => {
                    if let Some(level) = level {
                        if npc.level != level {
                            c.error(
                                format!("{loc}.npc"),
                                format!("stage needs the level {level} npc, `{npc_id}` is level {}", npc.level),
                            );
                        }
                    } else if npc.level != 0 {
                        c.error(
                            format!("{loc}.npc"),
                            format!("only the evaluator npc may appear outside level stages, found `{npc_id}`"),
                        );
                    }
                }
            },
            (None, Some(level)) => {
                c.error(format!("{loc}.npc"), format!("level stage has no npc (needs level {level})"));
            }
            (None, None) => {}
        }
    }
}

fn check_rounds(s: &ScenarioDefinition, c: &mut Checker) {
    if s.assessment_rounds.len() != 4 {
        c.error(
            "assessment_rounds",
            format!("expected exactly 4 assessment rounds, found {}", s.assessment_rounds.len()),
        );
    }
    for dup in duplicates(s.assessment_rounds.iter().map(|r| round_name(r.round))) {
        c.error("assessment_rounds", format!("duplicate assessment {dup}"));
    }
    for r in &s.assessment_rounds {
        let loc = format!("assessment_rounds[{}]", r.round);
        if !(1..=4).contains(&r.round) {
            c.error(loc, format!("round {} is outside 1..=4", r.round));
            continue;
        }
        if r.stage.vote_round() != Some(r.round) {
            c.error(
                format!("{loc}.stage"),
                format!("round {} cannot be placed after stage `{}`", r.round, r.stage.as_str()),
            );
        }
        if r.prompt.trim().is_empty() {
            c.error(format!("{loc}.prompt"), "assessment prompt is empty");
        }
    }
}

fn round_name(round: u8) -> &'static str {
    match round {
        1 => "round 1",
        2 => "round 2",
        3 => "round 3",
        4 => "round 4",
        _ => "round ?",
    }
}

fn check_gate(s: &ScenarioDefinition, c: &mut Checker) {
    let gate = &s.security_gate;
    match s.npc(gate.npc.as_str()) {
        None => c.error("security_gate.npc", format!("gate npc `{}` is not declared", gate.npc)),
        Some(npc) if npc.level != 2 => c.error(
            "security_gate.npc",
            format!("gate npc `{}` must be the level 2 npc", gate.npc),
        ),
        Some(_) => {}
    }
    if gate.mention_phrases.iter().all(|p| p.trim().is_empty()) {
        c.error("security_gate.mention_phrases", "gate needs at least one mention phrase");
    }
    if gate.accepted_items.is_empty() {
        c.error("security_gate.accepted_items", "gate accepts no identification items");
    }
    for item in &gate.accepted_items {
        if s.item(item.as_str()).is_none() {
            c.error(
                "security_gate.accepted_items",
                format!("accepted item `{item}` is not declared"),
            );
        }
    }
    for (field, line) in [
        ("deny_line", &gate.deny_line),
        ("request_id_line", &gate.request_id_line),
        ("allow_line", &gate.allow_line),
    ] {
        if line.trim().is_empty() {
            c.error(format!("security_gate.{field}"), "gate line is empty");
        }
    }
}
