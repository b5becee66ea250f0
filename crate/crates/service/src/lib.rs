//! Command-line and HTTP front ends for the feedback engine.

pub mod api;
pub mod cli;
pub mod config;
pub mod session_log;
pub mod store;
pub mod text;
