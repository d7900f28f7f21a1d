//! Support code for the `formloc` binary: configuration and corpus files.

pub mod config;
pub mod corpus_dir;
