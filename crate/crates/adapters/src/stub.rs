use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use async_trait::async_trait;
use ecobee_core::TransientImage;
use sha2::{Digest, Sha256};

use crate::chat::ChatTurn;
use crate::client::{ClientError, ModelClient};

/// Deterministic model: image replies come from a digest → reply map, chat
/// replies echo the sha256 of the context block.
#[derive(Debug, Default)]
pub struct StubClient {
    replies: BTreeMap<String, String>,
    delay: Option<Duration>,
    calls: AtomicUsize,
}

impl StubClient {
    pub fn new(replies: BTreeMap<String, String>) -> Self {
        Self {
            replies,
            ..Default::default()
        }
    }

    /// Reads a JSON object mapping hex sha256 image digests to reply strings.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(std::io::Error::other)
    }

    /// Sleeps before every reply, to exercise deadlines.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn context_digest(system: &str) -> String {
        hex::encode(Sha256::digest(system.as_bytes()))
    }

    async fn pause(&self) {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(d) = self.delay {
            tokio::time::sleep(d).await;
        }
    }
}

#[async_trait]
impl ModelClient for StubClient {
    async fn describe_image(&self, image: &TransientImage, _instruction: &str) -> Result<String, ClientError> {
        self.pause().await;
        self.replies
            .get(&image.digest())
            .cloned()
            .ok_or_else(|| ClientError::Rejected("stub has no reply for this image".into()))
    }

    async fn complete_chat(&self, system: &str, _history: &[ChatTurn]) -> Result<String, ClientError> {
        self.pause().await;
        Ok(format!("stub reply; context digest {}", Self::context_digest(system)))
    }
}
