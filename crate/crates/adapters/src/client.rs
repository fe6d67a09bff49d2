use async_trait::async_trait;
use ecobee_core::TransientImage;
use thiserror::Error;

use crate::chat::ChatTurn;

/// Transport-level failure of one model call.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("model call timed out")]
    Timeout,
    #[error("model rejected the request: {0}")]
    Rejected(String),
}

/// One multimodal model. Implementations return the raw reply text; parsing
/// and policy live in [`crate::Adapter`].
#[async_trait]
pub trait ModelClient: Send + Sync {
    async fn describe_image(&self, image: &TransientImage, instruction: &str) -> Result<String, ClientError>;

    /// `system` is the grounding context; `history` ends with a user turn.
    async fn complete_chat(&self, system: &str, history: &[ChatTurn]) -> Result<String, ClientError>;
}
