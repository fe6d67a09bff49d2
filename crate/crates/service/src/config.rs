//! Service configuration: a TOML file plus `ECOBEE_*` environment overrides.
//!
//! Relative paths in the file resolve against the file's own directory.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use ecobee_adapters::{AdapterConfig, LiveConfig, DEFAULT_MAX_IMAGE_BYTES, DEFAULT_MAX_IN_FLIGHT};
use ecobee_core::intake::DEFAULT_MIN_CONFIDENCE;
use ecobee_core::leaderboard::DEFAULT_K_MIN;
use ecobee_core::recommend::graph::DEFAULT_SUBSTITUTABILITY;
use ecobee_core::recommend::Hyperparameters;
use ecobee_core::scoring::DEFAULT_EXPLAIN_TOP_K;
use ecobee_core::BoundaryWeights;
use serde::Deserialize;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdapterKind {
    Stub,
    Live,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterSettings {
    pub kind: AdapterKind,
    /// Digest → reply map for the stub.
    pub stub_replies: Option<PathBuf>,
    pub base_url: String,
    pub model: String,
    pub timeout_secs: f64,
    pub max_in_flight: usize,
    pub max_image_bytes: usize,
}

impl Default for AdapterSettings {
    fn default() -> Self {
        Self {
            kind: AdapterKind::Stub,
            stub_replies: None,
            base_url: String::new(),
            model: String::new(),
            timeout_secs: 20.0,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            max_image_bytes: DEFAULT_MAX_IMAGE_BYTES,
        }
    }
}

impl AdapterSettings {
    pub fn adapter_config(&self) -> AdapterConfig {
        AdapterConfig {
            deadline: Duration::from_secs_f64(self.timeout_secs),
            max_in_flight: self.max_in_flight,
            max_image_bytes: self.max_image_bytes,
            ..Default::default()
        }
    }

    /// Live client settings; the API key only ever comes from the environment.
    pub fn live_config(&self) -> Result<LiveConfig> {
        let mut config = LiveConfig::new(self.base_url.clone(), self.model.clone());
        config.timeout = Duration::from_secs_f64(self.timeout_secs);
        config.with_env().map_err(anyhow::Error::msg)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommenderSettings {
    pub seed: u64,
    pub substitutability: f64,
    pub hyperparameters: Hyperparameters,
}

impl Default for RecommenderSettings {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            substitutability: DEFAULT_SUBSTITUTABILITY,
            hyperparameters: Hyperparameters::default(),
        }
    }
}

fn default_listen() -> String {
    DEFAULT_LISTEN.into()
}
fn default_k_min() -> usize {
    DEFAULT_K_MIN
}
fn default_min_confidence() -> f64 {
    DEFAULT_MIN_CONFIDENCE
}
fn default_explain_top_k() -> usize {
    DEFAULT_EXPLAIN_TOP_K
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    pub factor_dir: PathBuf,
    pub actions: PathBuf,
    pub opportunities: PathBuf,
    pub barcodes: PathBuf,
    /// Holds `leaderboard.csv` and `feedback.jsonl`.
    pub store_dir: PathBuf,
    /// Embedding model file; absent means the fallback ranker serves.
    pub model_path: PathBuf,
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default)]
    pub weights: BoundaryWeights,
    #[serde(default = "default_min_confidence")]
    pub min_confidence: f64,
    #[serde(default = "default_explain_top_k")]
    pub explain_top_k: usize,
    #[serde(default)]
    pub recommender: RecommenderSettings,
    #[serde(default)]
    pub adapter: AdapterSettings,
}

impl ServiceConfig {
    /// Parses TOML and resolves relative paths against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut config: Self = toml::from_str(text).context("parsing config")?;
        for path in config.paths_mut() {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let Some(stub) = &mut config.adapter.stub_replies {
            if stub.is_relative() {
                *stub = base.join(&*stub);
            }
        }
        Ok(config)
    }

    /// Reads the file, applies process environment overrides and validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut config = Self::from_toml(&text, base)?;
        config.apply_overrides(|key| std::env::var(key).ok())?;
        config.validate()?;
        Ok(config)
    }

    fn paths_mut(&mut self) -> [&mut PathBuf; 6] {
        [
            &mut self.factor_dir,
            &mut self.actions,
            &mut self.opportunities,
            &mut self.barcodes,
            &mut self.store_dir,
            &mut self.model_path,
        ]
    }

    /// `ECOBEE_LISTEN`, `ECOBEE_FACTOR_DIR`, `ECOBEE_ACTIONS`,
    /// `ECOBEE_OPPORTUNITIES`, `ECOBEE_BARCODES`, `ECOBEE_STORE_DIR`,
    /// `ECOBEE_MODEL_PATH`, `ECOBEE_K_MIN`, `ECOBEE_ADAPTER`.
    pub fn apply_overrides(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = env("ECOBEE_LISTEN") {
            self.listen = v;
        }
        let keys = [
            "ECOBEE_FACTOR_DIR",
            "ECOBEE_ACTIONS",
            "ECOBEE_OPPORTUNITIES",
            "ECOBEE_BARCODES",
            "ECOBEE_STORE_DIR",
            "ECOBEE_MODEL_PATH",
        ];
        for (key, path) in keys.into_iter().zip(self.paths_mut()) {
            if let Some(v) = env(key) {
                *path = PathBuf::from(v);
            }
        }
        if let Some(v) = env("ECOBEE_K_MIN") {
            self.k_min = v.parse().with_context(|| format!("ECOBEE_K_MIN `{v}` is not a count"))?;
        }
        if let Some(v) = env("ECOBEE_ADAPTER") {
            self.adapter.kind = match v.as_str() {
                "stub" => AdapterKind::Stub,
                "live" => AdapterKind::Live,
                _ => bail!("ECOBEE_ADAPTER must be `stub` or `live`, got `{v}`"),
            };
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_min < 1 {
            bail!("k_min must be at least 1");
        }
        self.listen_addr()?;
        for (name, path) in [
            ("factor_dir", &self.factor_dir),
            ("actions", &self.actions),
            ("opportunities", &self.opportunities),
            ("barcodes", &self.barcodes),
        ] {
            if !path.exists() {
                bail!("{name} path {} does not exist", path.display());
            }
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            bail!("min_confidence must be in [0, 1]");
        }
        let a = &self.adapter;
        if !(a.timeout_secs.is_finite() && a.timeout_secs > 0.0) {
            bail!("adapter.timeout_secs must be positive");
        }
        if a.max_in_flight == 0 || a.max_image_bytes == 0 {
            bail!("adapter.max_in_flight and adapter.max_image_bytes must be at least 1");
        }
        if a.kind == AdapterKind::Stub {
            match &a.stub_replies {
                Some(p) if !p.exists() => bail!("adapter.stub_replies path {} does not exist", p.display()),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn listen_addr(&self) -> Result<SocketAddr> {
        self.listen
            .parse()
            .with_context(|| format!("listen address `{}` is not host:port", self.listen))
    }
}
