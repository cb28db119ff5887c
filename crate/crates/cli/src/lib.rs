//! File-based front end for the robust ANCOVA library: data ingest, the
//! analysis, calibration and simulation commands, and their outputs.

pub mod cache;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod surface;

pub use commands::{
    cmd_analyze, cmd_calibrate, cmd_simulate, with_threads, AnalysisReport, AnalyzeOptions, CalibrateOptions, Kind,
    Method, Tuning,
};
pub use data::{read_dataset, ColumnMap, Dataset};
pub use error::{CliError, Result};
pub use surface::{read_surface, write_surface};
