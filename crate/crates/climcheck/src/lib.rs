//! Evidence retrieval, model backends, experiment runner and reports for
//! verifying climate image-claim pairs. Pure logic lives in
//! `climcheck-core`; this crate adds IO.

pub mod annotation;
pub mod cli;
pub mod clock;
pub mod config;
pub mod error;
pub mod fsutil;
pub mod http;
pub mod inference;
pub mod manifest;
pub mod pool;
pub mod report;
pub mod retrieval;
pub mod retry;
pub mod runner;
