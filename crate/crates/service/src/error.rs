//! Machine-readable error bodies: `{"code": "...", "message": "..."}`.

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ecobee_adapters::AdapterError;
use ecobee_core::intake::IntakeError;
use ecobee_core::item::PseudonymError;
use ecobee_core::leaderboard::LeaderboardError;
use ecobee_core::scoring::ScoringError;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize)]
struct Body<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    retryable: bool,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn internal() -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "internal error")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let retryable = matches!(
            self.status,
            StatusCode::GATEWAY_TIMEOUT | StatusCode::SERVICE_UNAVAILABLE
        );
        let body = Body {
            code: self.code,
            message: &self.message,
            retryable,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        // rejection texts can quote the body; keep only our own wording
        match rejection {
            JsonRejection::JsonSyntaxError(_) => Self::bad_request("malformed_json", "request body is not valid JSON"),
            JsonRejection::JsonDataError(e) => Self::bad_request("invalid_body", data_error_summary(&e.body_text())),
            JsonRejection::MissingJsonContentType(_) => Self::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "unsupported_media_type",
                "expected Content-Type: application/json",
            ),
            other if other.status() == StatusCode::PAYLOAD_TOO_LARGE => {
                Self::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", "request body is too large")
            }
            _ => Self::bad_request("invalid_body", "request body could not be read"),
        }
    }
}

/// serde's message names the offending field and expectation; drop the
/// position suffix and anything quoted from the input.
fn data_error_summary(text: &str) -> String {
    let text = text
        .strip_prefix("Failed to deserialize the JSON body into the target type: ")
        .unwrap_or(text);
    let text = text.split(" at line ").next().unwrap_or(text);
    if text.len() > 200 || text.contains("base64") {
        "request body has the wrong shape".into()
    } else {
        text.to_string()
    }
}

impl From<QueryRejection> for ApiError {
    fn from(_: QueryRejection) -> Self {
        Self::bad_request("invalid_query", "query parameters are invalid")
    }
}

impl From<IntakeError> for ApiError {
    fn from(e: IntakeError) -> Self {
        let code = match e {
            IntakeError::UnknownDomain(_) => "unknown_domain",
            IntakeError::UnknownOption { .. } => "unknown_option",
            IntakeError::MalformedBarcode => "malformed_barcode",
            IntakeError::UnknownBarcode(_) => "unknown_barcode",
        };
        Self::bad_request(code, e.to_string())
    }
}

impl From<ScoringError> for ApiError {
    fn from(e: ScoringError) -> Self {
        let code = match e {
            ScoringError::EmptyItems => "empty_items",
            ScoringError::UnknownOption { .. } => "unknown_option",
            ScoringError::InvalidQuantity { .. } => "invalid_quantity",
        };
        Self::bad_request(code, e.to_string())
    }
}

impl From<PseudonymError> for ApiError {
    fn from(e: PseudonymError) -> Self {
        Self::bad_request("invalid_pseudonym", e.to_string())
    }
}

impl From<LeaderboardError> for ApiError {
    fn from(e: LeaderboardError) -> Self {
        match e {
            LeaderboardError::InvalidEntry(_) => Self::bad_request("invalid_entry", e.to_string()),
            LeaderboardError::ConsistencyError { .. } => Self::bad_request("consistency_error", e.to_string()),
            LeaderboardError::Storage { .. } => {
                tracing::error!(error = %e, "leaderboard storage failure");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_error", "could not store the entry")
            }
        }
    }
}

impl From<AdapterError> for ApiError {
    fn from(e: AdapterError) -> Self {
        let (status, code) = match e {
            AdapterError::EmptyImage => (StatusCode::BAD_REQUEST, "empty_image"),
            AdapterError::ImageTooLarge { .. } => (StatusCode::PAYLOAD_TOO_LARGE, "image_too_large"),
            AdapterError::InvalidDomainHint => (StatusCode::BAD_REQUEST, "invalid_domain_hint"),
            AdapterError::UpstreamTimeout => (StatusCode::GATEWAY_TIMEOUT, "upstream_timeout"),
            AdapterError::UpstreamRejected(_) => (StatusCode::BAD_GATEWAY, "upstream_rejected"),
            AdapterError::EmptyHistory => (StatusCode::BAD_REQUEST, "empty_history"),
            AdapterError::EmptyTurn => (StatusCode::BAD_REQUEST, "empty_turn"),
        };
        Self::new(status, code, e.to_string())
    }
}
