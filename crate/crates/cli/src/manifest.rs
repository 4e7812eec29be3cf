//! Dataset manifests and daily CSV ingestion.
//!
//! A manifest is a CSV file with header `location_id,series_type,path`.
//! Relative paths resolve against the manifest's directory. Each data file
//! has header `date,value`, ISO-8601 dates, one row per consecutive day.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use hydrofeat::series::{TimeSeries, BASE_RESOLUTION};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub location_id: String,
    pub series_type: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub base_resolution: String,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["location_id", "series_type", "path"] {
            return Err(CliError::parse(path, 1, "expected header `location_id,series_type,path`"));
        }
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |i: usize| record.get(i).unwrap_or("").to_string();
            let (location_id, series_type, file) = (field(0), field(1), field(2));
            if location_id.is_empty() || series_type.is_empty() || file.is_empty() {
                return Err(CliError::parse(path, line, "empty manifest field"));
            }
            if !seen.insert((location_id.clone(), series_type.clone())) {
                return Err(CliError::DuplicateKey {
                    location: location_id,
                    series_type,
                });
            }
            let file = PathBuf::from(file);
            let path = if file.is_absolute() { file } else { base.join(file) };
            entries.push(ManifestEntry {
                location_id,
                series_type,
                path,
            });
        }
        Ok(Self {
            entries,
            base_resolution: BASE_RESOLUTION.to_string(),
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::parse(path, line, format!("{other:?}")),
    }
}

/// Reads one daily `date,value` file, checking that dates are consecutive.
pub fn read_daily(path: &Path) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "value"] {
        return Err(CliError::parse(path, 1, "expected header `date,value`"));
    }
    let mut values = Vec::new();
    let mut start: Option<NaiveDate> = None;
    let mut prev: Option<NaiveDate> = None;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let date_str = record.get(0).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_str, "%Y-%m-%d")
            .map_err(|_| CliError::parse(path, line, format!("invalid date {date_str:?}")))?;
        let value_str = record.get(1).unwrap_or("");
        let value: f64 = value_str
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| CliError::parse(path, line, format!("invalid value {value_str:?}")))?;
        if let Some(p) = prev {
            let expected = p + Duration::days(1);
            if date > expected {
                return Err(CliError::Gap {
                    file: path.to_path_buf(),
                    date: expected,
                });
            }
            if date < expected {
                return Err(CliError::parse(path, line, format!("date {date} out of order")));
            }
        }
        start.get_or_insert(date);
        prev = Some(date);
        values.push(value);
    }
    let start = start.ok_or_else(|| CliError::parse(path, 1, "no data rows"))?;
    Ok(TimeSeries::daily(values, start)?)
}

/// Parsed daily series keyed by `(location_id, series_type)`.
pub fn ingest(manifest: &DatasetManifest) -> Result<BTreeMap<(String, String), TimeSeries>> {
    manifest
        .entries
        .iter()
        .map(|e| Ok(((e.location_id.clone(), e.series_type.clone()), read_daily(&e.path)?)))
        .collect()
}
