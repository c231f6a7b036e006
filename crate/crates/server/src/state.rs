use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use ecoecho_core::engine::{Engine, LiveSession};
use ecoecho_core::llm::{Gateway, HttpProvider, Provider, ProviderError, RetryPolicy, StubProvider, StubScript};
use ecoecho_core::scenario::{bundled_ecoecho, load_scenario, validate_scenario, ScenarioError, Severity};
use ecoecho_core::store::{SessionStore, StoreError};
use ecoecho_core::{ScenarioDefinition, SessionId};

use crate::config::{ConfigError, ServerConfig};
use crate::error::ApiError;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Scenario { path: PathBuf, source: ScenarioError },
    #[error("{path}: {count} validation error(s), first: {first}")]
    Invalid { path: PathBuf, count: usize, first: String },
    #[error("duplicate scenario id `{0}`")]
    DuplicateScenario(String),
    #[error("stub script: {0}")]
    Stub(String),
    #[error("provider: {0}")]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

type SessionSlot = Arc<Mutex<LiveSession>>;

/// Shared server state: read-only engines, the store and one lock per
/// live session.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    engines: BTreeMap<String, Engine>,
    default_scenario: String,
    store: SessionStore,
    sessions: Mutex<HashMap<SessionId, SessionSlot>>,
}

fn read(path: &PathBuf) -> Result<Vec<u8>, StartupError> {
    std::fs::read(path).map_err(|source| StartupError::Read { path: path.clone(), source })
}

impl AppState {
    /// Builds engines and the store from `config`. Creates a blocking HTTP
    /// client for a live provider, so call it outside an async context.
    pub fn from_config(config: &ServerConfig) -> Result<Self, StartupError> {
        let (provider, retry): (Arc<dyn Provider>, RetryPolicy) = match config.provider.live()? {
            Some(live) => {
                let retry = live.retry_policy();
                (Arc::new(HttpProvider::new(live)?), retry)
            }
            None => {
                let script = match &config.provider.stub_script {
                    Some(path) => {
                        let text = String::from_utf8_lossy(&read(path)?).into_owned();
                        StubScript::from_toml_str(&text).map_err(|e| StartupError::Stub(e.to_string()))?
                    }
                    None => StubScript::bundled(),
                };
                (Arc::new(StubProvider::new(script)), RetryPolicy::immediate(0))
            }
        };
        let mut scenarios = vec![bundled_ecoecho()];
        for path in &config.scenarios {
            let s = load_scenario(&read(path)?).map_err(|source| StartupError::Scenario { path: path.clone(), source })?;
            let errors: Vec<_> = validate_scenario(&s).into_iter().filter(|d| d.severity == Severity::Error).collect();
            if let Some(first) = errors.first() {
                return Err(StartupError::Invalid { path: path.clone(), count: errors.len(), first: first.to_string() });
            }
            scenarios.push(s);
        }
        let gateway = Gateway::new(provider, retry);
        let store = SessionStore::open(&config.data_dir)?;
        Self::new(store, scenarios, gateway)
    }

    /// The first scenario is the default for new sessions.
    pub fn new(store: SessionStore, scenarios: Vec<ScenarioDefinition>, gateway: Gateway) -> Result<Self, StartupError> {
        let default_scenario = scenarios.first().map(|s| s.id.clone()).unwrap_or_default();
        let mut engines = BTreeMap::new();
        for s in scenarios {
            let id = s.id.clone();
            if engines.insert(id.clone(), Engine::new(Arc::new(s), gateway.clone())).is_some() {
                return Err(StartupError::DuplicateScenario(id));
            }
        }
        Ok(Self {
            inner: Arc::new(Inner { engines, default_scenario, store, sessions: Mutex::new(HashMap::new()) }),
        })
    }

    pub fn store(&self) -> &SessionStore {
        &self.inner.store
    }

    pub fn scenario_ids(&self) -> Vec<String> {
        self.inner.engines.keys().cloned().collect()
    }

    pub fn engine(&self, scenario_id: Option<&str>) -> Result<&Engine, ApiError> {
        let id = scenario_id.unwrap_or(&self.inner.default_scenario);
        self.inner.engines.get(id).ok_or_else(|| ApiError::not_found(format!("scenario {id}")))
    }

    pub(crate) fn insert(&self, session: LiveSession) {
        let id = session.state.session_id.clone();
        self.registry().insert(id, Arc::new(Mutex::new(session)));
    }

    fn registry(&self) -> std::sync::MutexGuard<'_, HashMap<SessionId, SessionSlot>> {
        self.inner.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// The session's slot, loading it from the store on first use.
    pub(crate) fn session(&self, id: &SessionId) -> Result<SessionSlot, ApiError> {
        let mut registry = self.registry();
        if let Some(slot) = registry.get(id) {
            return Ok(slot.clone());
        }
        let events = self.inner.store.load_session_events(id)?;
        let scenario_id = match events.first().map(|e| &e.kind) {
            Some(ecoecho_core::event::EventKind::SessionStarted { scenario_id, .. }) => scenario_id.clone(),
            _ => return Err(ApiError::not_found(format!("session {id}"))),
        };
        let live = self.engine(Some(&scenario_id))?.resume(&events)?;
        let slot = Arc::new(Mutex::new(live));
        registry.insert(id.clone(), slot.clone());
        Ok(slot)
    }
}
