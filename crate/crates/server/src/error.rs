use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use rulefit_core::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Error body: `{"error": {"code", "message", "fields": [...]}}`.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldError>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            fields: Vec::new(),
        }
    }

    pub fn field(mut self, field: impl Into<String>, message: impl Into<String>) -> Self {
        self.fields.push(FieldError {
            field: field.into(),
            message: message.into(),
        });
        self
    }

    pub fn invalid(fields: Vec<FieldError>) -> Self {
        let message = match fields.as_slice() {
            [one] => one.message.clone(),
            many => format!("{} invalid fields", many.len()),
        };
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "validation_error",
            message,
            fields,
        }
    }

    pub fn bad_request(field: &str, message: impl Into<String>) -> Self {
        let message = message.into();
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message.clone()).field(field, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let msg = err.to_string();
        use StatusCode as S;
        match &err {
            Error::UnknownEntity(_) => {
                Self::new(S::NOT_FOUND, "unknown_entity", msg.clone()).field("entity", msg)
            }
            Error::UnknownMatch(_) => {
                Self::new(S::NOT_FOUND, "unknown_match", msg.clone()).field("match_id", msg)
            }
            Error::UnknownDocument(_) => Self::new(S::NOT_FOUND, "unknown_document", msg),
            Error::NotConverted(_) => {
                Self::new(S::NOT_FOUND, "not_converted", msg.clone()).field("match_id", msg)
            }
            Error::AlreadyConverted(_) => {
                Self::new(S::CONFLICT, "already_converted", msg.clone()).field("match_id", msg)
            }
            Error::NotFalsePositive(_) => {
                Self::new(S::CONFLICT, "not_false_positive", msg.clone()).field("match_id", msg)
            }
            Error::EmptyQuery => Self::bad_request("q", msg),
            Error::InvalidThresholds(_) => Self::invalid(vec![FieldError {
                field: "thresholds".into(),
                message: msg,
            }]),
            Error::EmptyTerm(_)
            | Error::InvalidGapExpression { .. }
            | Error::InvalidRegex { .. }
            | Error::EmptyCategory(_)
            | Error::MissingCategoryId
            | Error::DuplicateCategory { .. }
            | Error::CategoryEntityMismatch { .. } => Self::invalid(vec![FieldError {
                field: "categories".into(),
                message: msg,
            }]),
            Error::NoHighlights(_) | Error::EmptyPool(_) | Error::SeedAbsent { .. } => {
                Self::new(S::UNPROCESSABLE_ENTITY, "not_computable", msg)
            }
            _ => Self::internal(msg),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    error: &'a ApiError,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(Envelope { error: &self })).into_response()
    }
}
