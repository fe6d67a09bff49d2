//! Clients for the external multimodal model.
//!
//! [`ModelClient`] is the seam: [`LiveClient`] talks to a chat-completions
//! endpoint over HTTPS, [`StubClient`] answers from a fixture map. [`Adapter`]
//! wraps either one with the size cap, deadline, retry and in-flight limit,
//! and exposes [`Adapter::classify_image`] and [`Adapter::chat`].

mod adapter;
mod chat;
mod client;
mod live;
mod stub;

pub use adapter::{Adapter, AdapterConfig, AdapterError, VisionRequest, DEFAULT_DEADLINE, DEFAULT_MAX_IMAGE_BYTES, DEFAULT_MAX_IN_FLIGHT};
pub use chat::{
    load_opportunities, parse_opportunities, select_opportunities, ChatContext, ChatTurn, OpportunityCard,
    OpportunityError, Role, MAX_CONTEXT_CARDS,
};
pub use client::{ClientError, ModelClient};
pub use live::{LiveClient, LiveConfig};
pub use stub::StubClient;
