//! CSV outputs and the run-metadata file.
//!
//! Floats use Rust's shortest round-trip decimal form, so reading a file
//! back reproduces the binary values exactly. Files are written to a
//! temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use hydrofeat::{FeatureMatrix, FeatureRow, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::pipeline::{AnalysisStage, SliceFailure};

pub const FEATURES_FILE: &str = "features.csv";
pub const CLUSTERS_FILE: &str = "clusters.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CORRELATIONS_FILE: &str = "correlations.csv";
pub const METADATA_FILE: &str = "run_metadata.txt";

/// Writes `bytes` to `dir/name` via a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(&target, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(&target, e))?;
    tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
    Ok(())
}

struct Table(csv::Writer<Vec<u8>>);

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(header).expect("write to memory");
        Table(w)
    }

    fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.0.write_record(fields).expect("write to memory");
    }

    fn finish(self) -> Vec<u8> {
        self.0.into_inner().expect("flush to memory")
    }
}

pub fn features_csv(matrix: &FeatureMatrix) -> Vec<u8> {
    let mut header = vec!["location_id", "series_type", "resolution"];
    header.extend(FEATURE_NAMES);
    let mut t = Table::new(&header);
    for r in matrix.rows() {
        let mut fields = vec![r.location_id.clone(), r.series_type.clone(), r.resolution.clone()];
        fields.extend(r.features.0.iter().map(f64::to_string));
        t.row(fields);
    }
    t.finish()
}

pub fn clusters_csv(analysis: &AnalysisStage) -> Vec<u8> {
    let mut t = Table::new(&["location_id", "series_type", "resolution", "k", "cluster_id", "silhouette_width"]);
    for s in &analysis.slices {
        let widths = s.clusters.silhouette.as_ref().map(|w| &w.widths);
        for (i, loc) in s.locations.iter().enumerate() {
            let width = widths.map_or(String::new(), |w| w[i].to_string());
            t.row([
                loc.clone(),
                s.series_type.clone(),
                s.resolution.clone(),
                s.clusters.k.to_string(),
                s.clusters.assignments[i].to_string(),
                width,
            ]);
        }
    }
    t.finish()
}

pub fn sweep_csv(analysis: &AnalysisStage) -> Vec<u8> {
    let mut t = Table::new(&["series_type", "resolution", "k", "average_width", "rank"]);
    for s in &analysis.slices {
        for e in &s.sweep.entries {
            t.row([
                s.series_type.clone(),
                s.resolution.clone(),
                e.k.to_string(),
                e.average_width.to_string(),
                e.rank.to_string(),
            ]);
        }
    }
    t.finish()
}

pub fn importance_csv(analysis: &AnalysisStage) -> Vec<u8> {
    let mut t = Table::new(&["series_type", "resolution", "feature", "importance", "rank"]);
    for s in &analysis.slices {
        for (f, name) in FEATURE_NAMES.iter().enumerate() {
            t.row([
                s.series_type.clone(),
                s.resolution.clone(),
                name.to_string(),
                s.importance.values[f].to_string(),
                s.importance.ranks[f].to_string(),
            ]);
        }
    }
    t.finish()
}

pub fn summary_csv(analysis: &AnalysisStage) -> Vec<u8> {
    let mut t = Table::new(&["series_type", "feature", "resolution", "mean", "rank"]);
    for r in &analysis.summary {
        t.row([
            r.series_type.clone(),
            r.feature.to_string(),
            r.resolution.clone(),
            r.mean.to_string(),
            r.rank.to_string(),
        ]);
    }
    t.finish()
}

pub fn correlations_csv(analysis: &AnalysisStage) -> Vec<u8> {
    let mut t = Table::new(&["series_type", "resolution", "feature_a", "feature_b", "pearson"]);
    for s in &analysis.slices {
        let c = &s.correlations;
        for (a, name_a) in FEATURE_NAMES.iter().enumerate() {
            for (b, name_b) in FEATURE_NAMES.iter().enumerate() {
                if c[a][b].is_nan() {
                    continue;
                }
                t.row([
                    s.series_type.clone(),
                    s.resolution.clone(),
                    name_a.to_string(),
                    name_b.to_string(),
                    c[a][b].to_string(),
                ]);
            }
        }
    }
    t.finish()
}

/// Config settings followed by comment lines for the version, slice
/// failures and notes. The file parses as a config and reproduces the run.
pub fn metadata_text(config: &RunConfig, failures: &[SliceFailure], notes: &[String]) -> String {
    let mut s = format!("# hydrofeat {}\n", env!("CARGO_PKG_VERSION"));
    s.push_str(&config.to_text());
    if failures.is_empty() {
        s.push_str("# slice failures: none\n");
    }
    for f in failures {
        s.push_str(&format!(
            "# slice failure: {} {} [{}] {}\n",
            f.series_type,
            f.resolution,
            f.stage,
            f.message.replace('\n', " ")
        ));
    }
    for n in notes {
        s.push_str(&format!("# note: {n}\n"));
    }
    s
}

/// Notes on constant feature columns left out of correlations.csv.
pub fn analysis_notes(analysis: &AnalysisStage) -> Vec<String> {
    analysis
        .slices
        .iter()
        .filter(|s| !s.constant_features.is_empty())
        .map(|s| {
            format!(
                "{} {}: constant across locations, omitted from correlations: {}",
                s.series_type,
                s.resolution,
                s.constant_features.join(", ")
            )
        })
        .collect()
}

pub fn write_features(dir: &Path, matrix: &FeatureMatrix) -> Result<()> {
    write_atomic(dir, FEATURES_FILE, &features_csv(matrix))
}

pub fn write_analysis(dir: &Path, analysis: &AnalysisStage) -> Result<()> {
    write_atomic(dir, CLUSTERS_FILE, &clusters_csv(analysis))?;
    write_atomic(dir, SWEEP_FILE, &sweep_csv(analysis))?;
    write_atomic(dir, IMPORTANCE_FILE, &importance_csv(analysis))?;
    write_atomic(dir, SUMMARY_FILE, &summary_csv(analysis))?;
    write_atomic(dir, CORRELATIONS_FILE, &correlations_csv(analysis))
}

pub fn write_metadata(dir: &Path, config: &RunConfig, failures: &[SliceFailure], notes: &[String]) -> Result<()> {
    write_atomic(dir, METADATA_FILE, metadata_text(config, failures, notes).as_bytes())
}

/// Reads a `features.csv` written by [`write_features`].
pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| CliError::parse(path, 0, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::parse(path, 1, e.to_string()))?
        .clone();
    let mut expected = vec!["location_id", "series_type", "resolution"];
    expected.extend(FEATURE_NAMES);
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::parse(path, 1, "unexpected features header"));
    }
    let mut matrix = FeatureMatrix::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = [0.0; FEATURE_COUNT];
        for (f, v) in values.iter_mut().enumerate() {
            let field = &record[3 + f];
            *v = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::parse(path, line, format!("invalid {} value {field:?}", FEATURE_NAMES[f])))?;
        }
        matrix.push(FeatureRow {
            location_id: record[0].to_string(),
            series_type: record[1].to_string(),
            resolution: record[2].to_string(),
            features: FeatureVector(values),
        })?;
    }
    Ok(matrix)
}
