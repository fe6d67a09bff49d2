#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use ecobee_adapters::{Adapter, AdapterConfig, StubClient};
use ecobee_core::testkit::fixtures_dir;
use ecobee_service::{router, AppState, ServiceConfig};
use serde_json::Value;
use tempfile::TempDir;

pub struct TestApp {
    pub base: String,
    pub state: Arc<AppState>,
    pub config: ServiceConfig,
    pub http: reqwest::Client,
    pub dir: TempDir,
}

pub struct Options {
    pub k_min: usize,
    pub max_image_bytes: usize,
    /// Stub reply delay with a 50 ms deadline, to force timeouts.
    pub slow_model: bool,
    pub model_path: Option<std::path::PathBuf>,
    pub actions: Option<std::path::PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            k_min: 5,
            max_image_bytes: 8 * 1024 * 1024,
            slow_model: false,
            model_path: None,
            actions: None,
        }
    }
}

pub fn config_for(dir: &Path, options: &Options) -> ServiceConfig {
    let f = fixtures_dir();
    let model = options
        .model_path
        .clone()
        .unwrap_or_else(|| dir.join("model.txt"));
    let actions = options
        .actions
        .clone()
        .unwrap_or_else(|| f.join("actions.csv"));
    let text = format!(
        r#"
listen = "127.0.0.1:0"
factor_dir = "{f}/f0"
actions = "{actions}"
opportunities = "{f}/opportunities.json"
barcodes = "{f}/barcodes.csv"
store_dir = "{store}"
model_path = "{model}"
k_min = {k_min}

[adapter]
kind = "stub"
stub_replies = "{f}/vision_stub.json"
max_image_bytes = {cap}
"#,
        f = f.display(),
        store = dir.join("store").display(),
        model = model.display(),
        actions = actions.display(),
        k_min = options.k_min,
        cap = options.max_image_bytes,
    );
    let config = ServiceConfig::from_toml(&text, dir).unwrap();
    config.validate().unwrap();
    config
}

pub async fn spawn(options: Options) -> TestApp {
    let dir = tempfile::tempdir().unwrap();
    let config = config_for(dir.path(), &options);
    let mut state = AppState::from_config(&config).unwrap();
    if options.slow_model {
        let stub = StubClient::load(fixtures_dir().join("vision_stub.json"))
            .unwrap()
            .with_delay(Duration::from_millis(400));
        state.adapter = Adapter::new(
            Arc::new(stub),
            AdapterConfig {
                deadline: Duration::from_millis(50),
                max_image_bytes: options.max_image_bytes,
                ..Default::default()
            },
        );
    }
    let state = Arc::new(state);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let app = router(state.clone());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    TestApp {
        base,
        state,
        config,
        http: reqwest::Client::new(),
        dir,
    }
}

impl TestApp {
    pub async fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let resp = self.http.post(format!("{}{path}", self.base)).json(body).send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let resp = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }
}

pub fn keys(v: &Value) -> Vec<String> {
    v.as_object().map(|o| o.keys().cloned().collect()).unwrap_or_default()
}
