//! Pipeline stages, configuration and the HTTP service behind the
//! `rerank-explain` binary.

pub mod config;
pub mod pipeline;
pub mod server;
pub mod fixtures;
