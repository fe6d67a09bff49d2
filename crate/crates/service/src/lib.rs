//! HTTP service and admin commands for campus planetary-boundary scoring.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod state;

pub use api::router;
pub use config::ServiceConfig;
pub use state::AppState;
