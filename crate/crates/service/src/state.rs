//! Shared, swappable service state.

use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{Context, Result};
use ecobee_adapters::{load_opportunities, Adapter, LiveClient, OpportunityCard, StubClient};
use ecobee_core::intake::BarcodeRegistry;
use ecobee_core::leaderboard::Leaderboard;
use ecobee_core::recommend::{ActionCatalog, ActionGraph, EmbeddingModel};
use ecobee_core::{load_factor_tables, BoundaryWeights, FactorTable};
use parking_lot::RwLock;

use crate::config::{AdapterKind, ServiceConfig};

/// The action graph plus, once trained, its embeddings.
#[derive(Debug)]
pub struct Recommender {
    pub graph: ActionGraph,
    pub model: Option<EmbeddingModel>,
}

impl Recommender {
    /// Model fingerprint, or `None` while the fallback ranker serves.
    pub fn model_version(&self) -> Option<String> {
        self.model.as_ref().map(EmbeddingModel::fingerprint)
    }
}

/// Scalar knobs read by the handlers.
#[derive(Clone, Debug)]
pub struct Settings {
    pub k_min: usize,
    pub weights: BoundaryWeights,
    pub min_confidence: f64,
    pub explain_top_k: usize,
    pub max_image_bytes: usize,
}

/// Tables and the model sit behind `RwLock<Arc<_>>`: handlers clone the
/// `Arc` and work on a consistent snapshot while a reload swaps it.
pub struct AppState {
    factors: RwLock<Arc<FactorTable>>,
    recommender: RwLock<Arc<Recommender>>,
    pub barcodes: BarcodeRegistry,
    pub opportunities: Vec<OpportunityCard>,
    pub leaderboard: Leaderboard,
    pub adapter: Adapter,
    pub settings: Settings,
}

impl AppState {
    pub fn new(
        factors: FactorTable,
        recommender: Recommender,
        barcodes: BarcodeRegistry,
        opportunities: Vec<OpportunityCard>,
        leaderboard: Leaderboard,
        adapter: Adapter,
        settings: Settings,
    ) -> Self {
        Self {
            factors: RwLock::new(Arc::new(factors)),
            recommender: RwLock::new(Arc::new(recommender)),
            barcodes,
            opportunities,
            leaderboard,
            adapter,
            settings,
        }
    }

    pub fn from_config(config: &ServiceConfig) -> Result<Self> {
        let factors = load_factor_tables(&config.factor_dir)
            .with_context(|| format!("loading factor tables from {}", config.factor_dir.display()))?;
        let catalog = ActionCatalog::load(&config.actions)
            .with_context(|| format!("loading action catalog {}", config.actions.display()))?;
        let graph = ActionGraph::build(catalog, config.recommender.substitutability).context("building action graph")?;
        let model = load_model_if_present(config, &graph)?;
        let barcodes = BarcodeRegistry::load(&config.barcodes)
            .with_context(|| format!("loading barcodes {}", config.barcodes.display()))?;
        let opportunities = load_opportunities(&config.opportunities)?;
        let leaderboard = Leaderboard::open(&config.store_dir, config.weights)?;
        let adapter = build_adapter(config)?;
        Ok(Self::new(
            factors,
            Recommender { graph, model },
            barcodes,
            opportunities,
            leaderboard,
            adapter,
            Settings {
                k_min: config.k_min,
                weights: config.weights,
                min_confidence: config.min_confidence,
                explain_top_k: config.explain_top_k,
                max_image_bytes: config.adapter.max_image_bytes,
            },
        ))
    }

    pub fn factors(&self) -> Arc<FactorTable> {
        self.factors.read().clone()
    }

    pub fn recommender(&self) -> Arc<Recommender> {
        self.recommender.read().clone()
    }

    pub fn swap_factors(&self, table: FactorTable) {
        *self.factors.write() = Arc::new(table);
    }

    pub fn swap_recommender(&self, recommender: Recommender) {
        *self.recommender.write() = Arc::new(recommender);
    }
}

fn load_model_if_present(config: &ServiceConfig, graph: &ActionGraph) -> Result<Option<EmbeddingModel>> {
    if !config.model_path.exists() {
        tracing::info!("no embedding model file; serving fallback recommendations");
        return Ok(None);
    }
    let model = EmbeddingModel::load(&config.model_path)
        .with_context(|| format!("loading embedding model {}", config.model_path.display()))?;
    if !model.matches(graph.graph()) {
        tracing::warn!("embedding model does not match the action catalog; serving fallback recommendations");
        return Ok(None);
    }
    Ok(Some(model))
}

fn build_adapter(config: &ServiceConfig) -> Result<Adapter> {
    let settings = &config.adapter;
    let client: Arc<dyn ecobee_adapters::ModelClient> = match settings.kind {
        AdapterKind::Stub => Arc::new(match &settings.stub_replies {
            Some(path) => StubClient::load(path).with_context(|| format!("loading stub replies {}", path.display()))?,
            None => StubClient::new(BTreeMap::new()),
        }),
        AdapterKind::Live => Arc::new(
            LiveClient::new(settings.live_config()?).map_err(|e| anyhow::anyhow!("live model client: {e}"))?,
        ),
    };
    Ok(Adapter::new(client, settings.adapter_config()))
}
