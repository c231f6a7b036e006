//! Scenario-driven conversational game engine.
//!
//! Players talk in free text to agent-backed NPCs. Each utterance runs
//! through a layered intent pipeline (agent classifier, keyword fallback,
//! predefined takeover) whose decisions become game actions on a linear
//! stage machine that ends in one of two endings. Votes cast during play
//! and pre/post survey files feed the [`assessment`] statistics.
//!
//! The crate is organised by subsystem:
//!
//! - [`scenario`]: declarative game content and its validation.
//! - [`llm`]: character prompt assembly and the text-generation provider
//!   abstraction (HTTP and deterministic stub).
//! - [`dialogue`]: the per-utterance decision pipeline.
//! - [`game`]: stages, world degradation, the security gate and endings.
//! - [`assessment`]: vote capture, survey scoring and paired statistics.
//! - [`event`] and [`store`]: the append-only session log.
//! - [`engine`]: the facade tying the above together for one session.
//! - [`playthrough`] and [`analysis`]: headless drivers used by the CLI.

pub mod analysis;
pub mod assessment;
pub mod dialogue;
pub mod engine;
pub mod event;
pub mod game;
mod ids;
pub mod llm;
pub mod playthrough;
pub mod scenario;
pub mod store;
pub(crate) mod text;

pub use engine::{Engine, EngineError};
pub use ids::{IntentId, ItemId, NpcId, SessionId};
pub use scenario::{load_scenario, validate_scenario, ScenarioDefinition};
