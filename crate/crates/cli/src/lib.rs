//! Run orchestration for the trefoil simulator: configuration ingestion,
//! pipeline execution, result persistence, and reproducibility metadata.

pub mod config;
pub mod pipeline;
