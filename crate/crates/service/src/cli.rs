//! The `ecobee` admin command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ecobee_core::factors::diagnose_factor_dir;
use ecobee_core::leaderboard::{Leaderboard, LeaderboardSummary};
use ecobee_core::recommend::{ActionCatalog, ActionGraph, EmbeddingModel};

use crate::config::ServiceConfig;
use crate::state::AppState;

#[derive(Debug, Parser)]
#[command(name = "ecobee", version, about = "Campus planetary-boundary scoring service")]
pub struct Cli {
    /// Service configuration file (TOML).
    #[arg(long, global = true, env = "ECOBEE_CONFIG", default_value = "ecobee.toml")]
    pub config: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every factor CSV and print one line per file.
    ValidateFactors {
        /// Directory to check instead of the configured one.
        dir: Option<PathBuf>,
    },
    /// Walk the action graph, train embeddings and write the model file.
    RebuildEmbeddings {
        #[arg(long)]
        seed: Option<u64>,
        /// Output path instead of the configured `model_path`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the k-gated leaderboard summary as JSON.
    ExportSummary {
        #[arg(long)]
        campus: Option<String>,
    },
    /// Start the HTTP service.
    Serve,
}

/// Prints one line per factor file; returns whether all of them loaded.
pub fn validate_factors(dir: &Path, out: &mut impl Write) -> Result<bool> {
    let diagnostics = match diagnose_factor_dir(dir) {
        Ok(d) => d,
        Err(e) => {
            writeln!(out, "FAIL {}: {e}", dir.display())?;
            return Ok(false);
        }
    };
    let mut all_ok = true;
    for d in &diagnostics {
        let name = d.file.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
        match &d.outcome {
            Ok(rows) => writeln!(out, "ok   {name}: {rows} rows")?,
            Err(e) => {
                all_ok = false;
                writeln!(out, "FAIL {name}: {e}")?;
            }
        }
    }
    Ok(all_ok)
}

/// Trains from the configured catalog and writes the model atomically.
pub fn rebuild_embeddings(config: &ServiceConfig, seed: Option<u64>, out: Option<&Path>) -> Result<EmbeddingModel> {
    let catalog = ActionCatalog::load(&config.actions)
        .with_context(|| format!("loading action catalog {}", config.actions.display()))?;
    let graph = ActionGraph::build(catalog, config.recommender.substitutability)?;
    let seed = seed.unwrap_or(config.recommender.seed);
    let report = EmbeddingModel::fit(graph.graph(), config.recommender.hyperparameters, seed)?;
    let path = out.unwrap_or(&config.model_path);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    report
        .model
        .save(path)
        .with_context(|| format!("writing {}", path.display()))?;
    tracing::info!(
        walks = report.walks,
        initial_loss = report.initial_loss,
        final_loss = report.epoch_losses.last().copied().unwrap_or(report.initial_loss),
        "embeddings trained"
    );
    Ok(report.model)
}

pub fn export_summary(config: &ServiceConfig, campus: Option<&str>) -> Result<LeaderboardSummary> {
    let board = Leaderboard::open(&config.store_dir, config.weights)?;
    Ok(board.summary(campus, config.k_min))
}

pub async fn serve(config: ServiceConfig) -> Result<()> {
    let state = Arc::new(AppState::from_config(&config)?);
    let addr = config.listen_addr()?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, crate::router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Logs go to stderr; `RUST_LOG` overrides the default `info` level.
pub fn init_tracing() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// Runs the parsed command; returns the process exit code.
pub async fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::ValidateFactors { dir } => {
            let dir = match dir {
                Some(d) => d,
                None => ServiceConfig::load(&cli.config)?.factor_dir,
            };
            let ok = validate_factors(&dir, &mut std::io::stdout().lock())?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::RebuildEmbeddings { seed, out } => {
            let config = ServiceConfig::load(&cli.config)?;
            let model = rebuild_embeddings(&config, seed, out.as_deref())?;
            println!("{}", model.fingerprint());
            Ok(0)
        }
        Command::ExportSummary { campus } => {
            let config = ServiceConfig::load(&cli.config)?;
            let summary = export_summary(&config, campus.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(0)
        }
        Command::Serve => {
            serve(ServiceConfig::load(&cli.config)?).await?;
            Ok(0)
        }
    }
}
