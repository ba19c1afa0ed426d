//! Command-line front end and HTTP prediction service for `greenroute`.

pub mod app;
pub mod checks;
pub mod server;
pub mod workflow;

pub use app::run_cli;
