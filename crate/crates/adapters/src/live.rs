use std::time::Duration;

use async_trait::async_trait;
use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use ecobee_core::TransientImage;
use reqwest::StatusCode;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::adapter::DEFAULT_DEADLINE;
use crate::chat::{ChatTurn, Role};
use crate::client::{ClientError, ModelClient};

pub const ENV_BASE_URL: &str = "ECOBEE_MODEL_BASE_URL";
pub const ENV_API_KEY: &str = "ECOBEE_MODEL_API_KEY";
pub const ENV_MODEL: &str = "ECOBEE_MODEL_NAME";
pub const ENV_TIMEOUT_SECS: &str = "ECOBEE_MODEL_TIMEOUT_SECS";

#[derive(Clone, PartialEq)]
pub struct LiveConfig {
    /// Up to but excluding `/chat/completions`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
}

impl std::fmt::Debug for LiveConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("model", &self.model)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl LiveConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            model: model.into(),
            timeout: DEFAULT_DEADLINE,
        }
    }

    /// Fills any unset field from the environment. `base_url` and `model`
    /// must end up non-empty.
    pub fn with_env(mut self) -> Result<Self, String> {
        if let Ok(url) = std::env::var(ENV_BASE_URL) {
            self.base_url = url;
        }
        if let Ok(key) = std::env::var(ENV_API_KEY) {
            self.api_key = Some(key).filter(|k| !k.is_empty());
        }
        if let Ok(model) = std::env::var(ENV_MODEL) {
            self.model = model;
        }
        if let Ok(secs) = std::env::var(ENV_TIMEOUT_SECS) {
            let secs: f64 = secs
                .parse()
                .map_err(|_| format!("{ENV_TIMEOUT_SECS} must be a number of seconds"))?;
            if !(secs.is_finite() && secs > 0.0) {
                return Err(format!("{ENV_TIMEOUT_SECS} must be positive"));
            }
            self.timeout = Duration::from_secs_f64(secs);
        }
        if self.base_url.is_empty() {
            return Err(format!("model base URL is not set ({ENV_BASE_URL})"));
        }
        if self.model.is_empty() {
            return Err(format!("model name is not set ({ENV_MODEL})"));
        }
        Ok(self)
    }
}

/// Chat-completions client over HTTP(S).
#[derive(Debug, Clone)]
pub struct LiveClient {
    http: reqwest::Client,
    config: LiveConfig,
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Value,
}

impl LiveClient {
    pub fn new(config: LiveConfig) -> Result<Self, ClientError> {
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ClientError::Rejected(format!("building HTTP client: {e}")))?;
        Ok(Self { http, config })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    async fn complete(&self, messages: Value) -> Result<String, ClientError> {
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": messages,
        });
        let mut request = self.http.post(self.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().await.map_err(transport_error)?;
        let status = response.status();
        if status == StatusCode::REQUEST_TIMEOUT || status == StatusCode::GATEWAY_TIMEOUT {
            return Err(ClientError::Timeout);
        }
        if !status.is_success() {
            // the body may echo the request; never pass it on
            return Err(ClientError::Rejected(format!("upstream status {}", status.as_u16())));
        }
        let completion: Completion = response.json().await.map_err(|e| {
            if e.is_timeout() {
                ClientError::Timeout
            } else {
                ClientError::Rejected("malformed completion response".into())
            }
        })?;
        let content = completion
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ClientError::Rejected("completion has no choices".into()))?;
        content_text(content).ok_or_else(|| ClientError::Rejected("completion has no text".into()))
    }
}

fn transport_error(e: reqwest::Error) -> ClientError {
    if e.is_timeout() {
        ClientError::Timeout
    } else if e.is_connect() {
        ClientError::Rejected("could not connect to the model endpoint".into())
    } else {
        ClientError::Rejected("model request failed".into())
    }
}

/// `content` is either a string or a list of `{type: "text", text}` parts.
fn content_text(content: Value) -> Option<String> {
    match content {
        Value::String(s) => Some(s),
        Value::Array(parts) => {
            let text: String = parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect();
            Some(text).filter(|t| !t.is_empty())
        }
        _ => None,
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

#[async_trait]
impl ModelClient for LiveClient {
    async fn describe_image(&self, image: &TransientImage, instruction: &str) -> Result<String, ClientError> {
        let data_url = format!("data:application/octet-stream;base64,{}", STANDARD.encode(image.bytes()));
        let messages = json!([{
            "role": "user",
            "content": [
                {"type": "text", "text": instruction},
                {"type": "image_url", "image_url": {"url": data_url}},
            ],
        }]);
        self.complete(messages).await
    }

    async fn complete_chat(&self, system: &str, history: &[ChatTurn]) -> Result<String, ClientError> {
        let mut messages = vec![json!({"role": "system", "content": system})];
        messages.extend(
            history
                .iter()
                .map(|t| json!({"role": role_name(t.role), "content": t.text})),
        );
        self.complete(Value::Array(messages)).await
    }
}
