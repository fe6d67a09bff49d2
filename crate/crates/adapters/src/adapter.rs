use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use ecobee_core::intake::LabelledItem;
use ecobee_core::item::is_token;
use ecobee_core::{BoundaryScores, TransientImage};
use thiserror::Error;
use tokio::sync::Semaphore;

use crate::chat::{ChatContext, ChatTurn, OpportunityCard, Role};
use crate::client::{ClientError, ModelClient};

pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(20);
pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;
pub const DEFAULT_MAX_IMAGE_BYTES: usize = 8 * 1024 * 1024;

const VISION_INSTRUCTION: &str = "Identify sustainability-relevant items in this photo. Reply with only a JSON \
array of objects with keys domain, option_key, confidence (0 to 1) and caption. Use lower_snake_case tokens \
for domain and option_key. Reply [] if nothing relevant is visible.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("image is empty")]
    EmptyImage,
    #[error("image is {size} bytes, over the {cap}-byte cap")]
    ImageTooLarge { size: usize, cap: usize },
    #[error("domain hint must be a lower_snake_case token")]
    InvalidDomainHint,
    #[error("model did not answer in time")]
    UpstreamTimeout,
    #[error("model call failed: {0}")]
    UpstreamRejected(String),
    #[error("chat history must end with a user turn")]
    EmptyHistory,
    #[error("chat turns must have non-empty text")]
    EmptyTurn,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdapterConfig {
    /// Per-attempt deadline.
    pub deadline: Duration,
    /// Extra attempts after a timeout. Rejections are never retried.
    pub timeout_retries: usize,
    pub max_in_flight: usize,
    pub max_image_bytes: usize,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self {
            deadline: DEFAULT_DEADLINE,
            timeout_retries: 1,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            max_image_bytes: DEFAULT_MAX_IMAGE_BYTES,
        }
    }
}

/// An image to label. Neither cloneable nor serializable; consumed by
/// [`Adapter::classify_image`].
#[derive(Debug)]
pub struct VisionRequest {
    pub image: TransientImage,
    pub domain_hint: Option<String>,
}

/// Policy wrapper around a [`ModelClient`].
#[derive(Clone)]
pub struct Adapter {
    client: Arc<dyn ModelClient>,
    config: AdapterConfig,
    permits: Arc<Semaphore>,
}

impl std::fmt::Debug for Adapter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Adapter").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Adapter {
    pub fn new(client: Arc<dyn ModelClient>, config: AdapterConfig) -> Self {
        let permits = Arc::new(Semaphore::new(config.max_in_flight.max(1)));
        Self { client, config, permits }
    }

    pub fn config(&self) -> &AdapterConfig {
        &self.config
    }

    async fn call<F, Fut>(&self, mut attempt: F) -> Result<String, AdapterError>
    where
        F: FnMut() -> Fut,
        Fut: Future<Output = Result<String, ClientError>>,
    {
        let _permit = self.permits.acquire().await.expect("semaphore is never closed");
        for n in 0..=self.config.timeout_retries {
            match tokio::time::timeout(self.config.deadline, attempt()).await {
                Ok(Ok(reply)) => return Ok(reply),
                Ok(Err(ClientError::Rejected(reason))) => return Err(AdapterError::UpstreamRejected(reason)),
                Ok(Err(ClientError::Timeout)) | Err(_) => {
                    tracing::warn!(attempt = n + 1, "model call timed out");
                }
            }
        }
        Err(AdapterError::UpstreamTimeout)
    }

    /// Labels one image. The image is dropped before this returns, whatever
    /// the outcome; a failed call yields no labels at all.
    pub async fn classify_image(&self, request: VisionRequest) -> Result<Vec<LabelledItem>, AdapterError> {
        let VisionRequest { image, domain_hint } = request;
        if image.is_empty() {
            return Err(AdapterError::EmptyImage);
        }
        if image.len() > self.config.max_image_bytes {
            return Err(AdapterError::ImageTooLarge {
                size: image.len(),
                cap: self.config.max_image_bytes,
            });
        }
        let mut instruction = VISION_INSTRUCTION.to_string();
        if let Some(hint) = &domain_hint {
            if !is_token(hint) {
                return Err(AdapterError::InvalidDomainHint);
            }
            instruction.push_str(&format!(" The photo is expected to show the `{hint}` domain."));
        }
        let size = image.len();
        let reply = self.call(|| self.client.describe_image(&image, &instruction)).await;
        drop(image);
        let labels = parse_labels(&reply?)?;
        tracing::info!(bytes = size, labels = labels.len(), "image classified");
        Ok(labels)
    }

    /// One assistant turn grounded in `scores` and the matching cards.
    pub async fn chat(
        &self,
        history: &[ChatTurn],
        scores: &BoundaryScores,
        catalog: &[OpportunityCard],
        career_interest: Option<&str>,
    ) -> Result<ChatTurn, AdapterError> {
        if history.last().is_none_or(|t| t.role != Role::User) {
            return Err(AdapterError::EmptyHistory);
        }
        if history.iter().any(|t| t.text.trim().is_empty()) {
            return Err(AdapterError::EmptyTurn);
        }
        let context = ChatContext::build(scores, catalog, career_interest);
        let system = context.render();
        let reply = self.call(|| self.client.complete_chat(&system, history)).await?;
        let reply = reply.trim();
        if reply.is_empty() {
            return Err(AdapterError::UpstreamRejected("empty reply".into()));
        }
        tracing::info!(turns = history.len(), cards = context.cards.len(), "chat turn answered");
        Ok(ChatTurn::assistant(reply))
    }
}

/// A strict JSON array of labels; anything else rejects the whole reply.
pub(crate) fn parse_labels(reply: &str) -> Result<Vec<LabelledItem>, AdapterError> {
    let labels: Vec<LabelledItem> = serde_json::from_str(reply.trim())
        .map_err(|_| AdapterError::UpstreamRejected("reply is not a JSON label array".into()))?;
    if labels.iter().any(|l| !l.is_valid()) {
        return Err(AdapterError::UpstreamRejected("reply contains an invalid label".into()));
    }
    Ok(labels)
}
