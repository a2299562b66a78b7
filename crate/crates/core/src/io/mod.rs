//! Files in and out: station CSVs, experiment configs, curve and summary
//! outputs, and the operation-count report.

pub mod complexity;
pub mod config;
pub mod dataset;
pub mod output;

pub use complexity::{complexity_report, ComplexityReport, OperationCounts};
pub use config::{ExperimentConfig, GraphSource};
pub use dataset::{load_station_csv, parse_station_csv, Station, StationDataset};
