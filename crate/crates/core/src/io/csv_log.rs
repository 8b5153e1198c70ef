use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use super::{file_error, IoError};
use crate::model::{AttrValue, EventLog, Minutes, RawEvent, UncorrelatedLog};

/// Column bindings of a CSV log. Every other column is an attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogFileSchema {
    /// Used when present in the header.
    pub case_column: Option<String>,
    pub activity_column: String,
    pub timestamp_column: String,
    /// A `chrono` format string.
    pub timestamp_format: String,
}

impl Default for LogFileSchema {
    fn default() -> Self {
        Self {
            case_column: Some("case_id".into()),
            activity_column: "activity".into(),
            timestamp_column: "timestamp".into(),
            timestamp_format: "%Y-%m-%d %H:%M".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadedLog {
    Uncorrelated(UncorrelatedLog),
    Correlated(EventLog),
}

impl LoadedLog {
    pub fn uncorrelated(&self) -> UncorrelatedLog {
        match self {
            LoadedLog::Uncorrelated(u) => u.clone(),
            LoadedLog::Correlated(l) => UncorrelatedLog::clone(l.base()),
        }
    }

    pub fn into_correlated(self) -> Option<EventLog> {
        match self {
            LoadedLog::Correlated(l) => Some(l),
            LoadedLog::Uncorrelated(_) => None,
        }
    }
}

/// Parses a timestamp into whole minutes since the epoch, rounding seconds
/// half up. Formats without a time component read as midnight.
pub fn parse_timestamp(value: &str, format: &str) -> Option<Minutes> {
    let dt = NaiveDateTime::parse_from_str(value.trim(), format)
        .ok()
        .or_else(|| {
            NaiveDate::parse_from_str(value.trim(), format)
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })?;
    let secs = dt.and_utc().timestamp();
    Some((secs + 30).div_euclid(60))
}

pub fn format_timestamp(minutes: Minutes, format: &str) -> String {
    DateTime::from_timestamp(minutes * 60, 0)
        .map(|d| d.naive_utc().format(format).to_string())
        .unwrap_or_else(|| minutes.to_string())
}

fn csv_err(row: usize, e: csv::Error) -> IoError {
    IoError::Csv {
        row,
        message: e.to_string(),
    }
}

pub fn read_log_reader<R: Read>(reader: R, schema: &LogFileSchema) -> Result<LoadedLog, IoError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(1, e))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let act = col(&schema.activity_column)
        .ok_or_else(|| IoError::MissingColumn(schema.activity_column.clone()))?;
    let ts = col(&schema.timestamp_column)
        .ok_or_else(|| IoError::MissingColumn(schema.timestamp_column.clone()))?;
    let case = schema.case_column.as_deref().and_then(col);

    let mut raw = Vec::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        // header is row 1
        let row = k + 2;
        let rec = rec.map_err(|e| csv_err(row, e))?;
        let activity = rec.get(act).filter(|s| !s.is_empty()).map(str::to_owned);
        let timestamp = match rec.get(ts).filter(|s| !s.is_empty()) {
            None => None,
            Some(v) => Some(parse_timestamp(v, &schema.timestamp_format).ok_or_else(|| {
                IoError::Timestamp {
                    row,
                    value: v.to_owned(),
                    format: schema.timestamp_format.clone(),
                }
            })?),
        };
        if activity.is_none() || timestamp.is_none() {
            return Err(IoError::Csv {
                row,
                message: "missing activity or timestamp".into(),
            });
        }
        let mut attributes = BTreeMap::new();
        for (i, (name, value)) in header.iter().zip(rec.iter()).enumerate() {
            if i == act || i == ts || Some(i) == case || value.is_empty() {
                continue;
            }
            attributes.insert(name.to_owned(), AttrValue::parse(value));
        }
        labels.push(case.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()).map(str::to_owned));
        raw.push(RawEvent {
            activity,
            timestamp,
            attributes,
        });
    }

    let filled = labels.iter().filter(|l| l.is_some()).count();
    if filled > 0 && filled < labels.len() {
        let k = labels
            .iter()
            .position(|l| l.is_none())
            .expect("some label is missing");
        return Err(IoError::PartialCaseColumn { row: k + 2 });
    }
    let (log, order) = UncorrelatedLog::build_with_order(raw)?;
    if filled == 0 {
        return Ok(LoadedLog::Uncorrelated(log));
    }
    let mut sorted = vec![String::new(); labels.len()];
    for (record, label) in labels.into_iter().enumerate() {
        sorted[order[record]] = label.expect("all labels present");
    }
    Ok(LoadedLog::Correlated(EventLog::from_labels(
        Arc::new(log),
        &sorted,
    )?))
}

/// Reads a CSV log. The result is correlated when the case column is present
/// and filled on every row, uncorrelated when it is absent or empty.
pub fn read_log_csv(path: impl AsRef<Path>, schema: &LogFileSchema) -> Result<LoadedLog, IoError> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| file_error(path, e))?;
    read_log_reader(f, schema)
}

fn attribute_names(events: &[crate::model::Event]) -> BTreeSet<&str> {
    events
        .iter()
        .flat_map(|e| e.attributes.keys().map(String::as_str))
        .collect()
}

fn write_rows<W: Write>(
    events: &[crate::model::Event],
    case_of: Option<&dyn Fn(usize) -> String>,
    writer: W,
    schema: &LogFileSchema,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    let attrs = attribute_names(events);
    let mut header = Vec::new();
    if case_of.is_some() {
        header.push(schema.case_column.as_deref().unwrap_or("case_id"));
    }
    header.extend([schema.activity_column.as_str(), schema.timestamp_column.as_str()]);
    header.extend(attrs.iter().copied());
    w.write_record(&header).map_err(|e| csv_err(1, e))?;
    for (pos, e) in events.iter().enumerate() {
        let mut rec = Vec::with_capacity(header.len());
        if let Some(f) = case_of {
            rec.push(f(pos));
        }
        rec.push(e.activity.clone());
        rec.push(format_timestamp(e.timestamp, &schema.timestamp_format));
        rec.extend(
            attrs
                .iter()
                .map(|a| e.attr(a).map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec).map_err(|e| csv_err(pos + 2, e))?;
    }
    w.flush().map_err(|e| IoError::Csv {
        row: 0,
        message: e.to_string(),
    })?;
    Ok(())
}

/// Writes the log with case, activity and timestamp columns first and the
/// attributes after them in name order.
pub fn write_log_writer<W: Write>(
    log: &EventLog,
    writer: W,
    schema: &LogFileSchema,
) -> Result<(), IoError> {
    let case_of = |pos: usize| log.case_of(pos).to_owned();
    write_rows(log.events(), Some(&case_of), writer, schema)
}

/// Like [`write_log_writer`] without the case column.
pub fn write_uncorrelated_writer<W: Write>(
    log: &UncorrelatedLog,
    writer: W,
    schema: &LogFileSchema,
) -> Result<(), IoError> {
    write_rows(log.events(), None, writer, schema)
}

pub fn write_uncorrelated_csv(
    log: &UncorrelatedLog,
    path: impl AsRef<Path>,
    schema: &LogFileSchema,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| file_error(path, e))?;
    write_uncorrelated_writer(log, std::io::BufWriter::new(f), schema)
}

pub fn write_log_csv(
    log: &EventLog,
    path: impl AsRef<Path>,
    schema: &LogFileSchema,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| file_error(path, e))?;
    write_log_writer(log, std::io::BufWriter::new(f), schema)
}
