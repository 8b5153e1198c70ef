//! File formats and the strip / correlate / evaluate pipeline.

mod csv_log;
mod pnml;
mod simulate;

use std::sync::Arc;

use thiserror::Error;

use crate::constraints::ParseError;
use crate::measures::MeasureReport;
use crate::model::{EventLog, ModelError, UncorrelatedLog};
use crate::net::NetError;

pub use csv_log::{
    format_timestamp, parse_timestamp, read_log_csv, read_log_reader, write_log_csv, write_log_writer,
    write_uncorrelated_csv, write_uncorrelated_writer,
    LoadedLog, LogFileSchema,
};
pub use pnml::{parse_pnml, read_pnml};
pub use simulate::{
    estimate_cycle_time, simulate_log, CaseAttribute, ResourceModel, SimulationConfig,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("row {row}: cannot parse timestamp {value:?} with format {format:?}")]
    Timestamp {
        row: usize,
        value: String,
        format: String,
    },
    #[error("row {row}: case column is only partially populated")]
    PartialCaseColumn { row: usize },
    #[error("PNML: {0}")]
    Pnml(String),
    #[error("logs are built over different events")]
    UlMismatch,
    #[error("simulation: {0}")]
    Simulation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Constraints(#[from] ParseError),
}

pub(crate) fn file_error(path: &std::path::Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

/// Drops the case assignment, keeping events, order and attributes.
pub fn strip_case_ids(log: &EventLog) -> UncorrelatedLog {
    UncorrelatedLog::clone(log.base())
}

/// All measures with `original` as the reference log.
pub fn evaluate(original: &EventLog, generated: &EventLog) -> Result<MeasureReport, IoError> {
    if !Arc::ptr_eq(original.base(), generated.base()) && original.base() != generated.base() {
        return Err(IoError::UlMismatch);
    }
    Ok(MeasureReport::compute(original, generated))
}
