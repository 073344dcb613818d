//! Configuration, data ingestion, the replication engine and output.

pub mod config;
pub mod experiment;
pub mod ingest;
pub mod report;

pub use config::{Bandwidth, ExperimentConfig, Settings};
pub use experiment::{run_experiment, CellSummary, ExperimentRun, ReplicationFailure, ResultTable, TableMeta};
pub use ingest::{ingest_csv, read_observations, IngestOptions};
pub use report::Format;
