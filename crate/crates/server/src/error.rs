use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use ecoecho_core::analysis::AnalysisError;
use ecoecho_core::assessment::{StatsError, SurveyError, VoteError};
use ecoecho_core::dialogue::DialogueError;
use ecoecho_core::game::GameError;
use ecoecho_core::store::StoreError;
use ecoecho_core::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    WrongStage,
    OutOfRange,
    WrongRound,
    ProviderUnavailable,
    NotFound,
    BadRequest,
    /// Storage failure on the server side.
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::WrongStage | ErrorCode::WrongRound => StatusCode::CONFLICT,
            ErrorCode::OutOfRange => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::ProviderUnavailable => StatusCode::SERVICE_UNAVAILABLE,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn retriable(self) -> bool {
        matches!(self, ErrorCode::ProviderUnavailable | ErrorCode::Internal)
    }
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    pub retriable: bool,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), retriable: code.retriable() }
    }

    pub fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(ErrorCode::NotFound, format!("{what} not found"))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<GameError> for ApiError {
    fn from(e: GameError) -> Self {
        ApiError::new(ErrorCode::WrongStage, e.to_string())
    }
}

impl From<VoteError> for ApiError {
    fn from(e: VoteError) -> Self {
        match e {
            VoteError::OutOfRange { .. } => ApiError::new(ErrorCode::OutOfRange, e.to_string()),
            VoteError::WrongRound { .. } => ApiError::new(ErrorCode::WrongRound, e.to_string()),
            VoteError::Game(g) => g.into(),
        }
    }
}

impl From<DialogueError> for ApiError {
    fn from(e: DialogueError) -> Self {
        let code = match &e {
            DialogueError::EmptyInput | DialogueError::Oversize { .. } | DialogueError::UnknownIntent(_) => {
                ErrorCode::BadRequest
            }
            DialogueError::UnknownNpc(_) => ErrorCode::NotFound,
            DialogueError::WrongStage { .. } | DialogueError::Game(_) => ErrorCode::WrongStage,
            DialogueError::ProviderUnavailable(_) => ErrorCode::ProviderUnavailable,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Dialogue(d) => d.into(),
            EngineError::Vote(v) => v.into(),
            EngineError::Game(g) => g.into(),
            EngineError::Fold(_) | EngineError::ScenarioMismatch { .. } => {
                tracing::error!(error = %e, "stored session cannot be resumed");
                ApiError::new(ErrorCode::Internal, "stored session is unreadable")
            }
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => ApiError::not_found(format!("session {id}")),
            StoreError::InvalidId(_) => ApiError::bad_request(e.to_string()),
            other => {
                tracing::error!(error = %other, "session store failure");
                ApiError::new(ErrorCode::Internal, "session storage failed")
            }
        }
    }
}

impl From<SurveyError> for ApiError {
    fn from(e: SurveyError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl From<StatsError> for ApiError {
    fn from(e: StatsError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Store(s) => s.into(),
            AnalysisError::Io { .. } => {
                tracing::error!(error = %e, "analysis i/o failure");
                ApiError::new(ErrorCode::Internal, "reading survey files failed")
            }
            other => ApiError::bad_request(other.to_string()),
        }
    }
}
