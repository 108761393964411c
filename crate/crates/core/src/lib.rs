//! Auditing black-box recommenders from sock-puppet session logs.
//!
//! Session logs become a weighted recommendation graph, centrality measures
//! rank the videos, the top of the ranking is matched with annotations, and
//! bias and overlap metrics summarize the result. A synthetic recommender
//! with a planted skew lets the whole chain be checked end to end.

pub mod centrality;
pub mod config;
pub mod domain;
pub mod error;
pub mod export;
pub mod ingest;
pub mod manifest;
pub mod metrics;
pub mod pipeline;
pub mod ranking;
pub mod recgraph;
pub mod sim;

pub use error::{AuditError, ErrorCategory, Result};
