//! The 23-feature vector, feature matrices and their summaries.

use std::collections::{BTreeSet, HashSet};
use std::ops::Index;

use rayon::prelude::*;

use crate::correlation::correlation_features;
use crate::decomposition::{stl_decompose, stl_features};
use crate::dispersion::{nonlinearity, std1st_der, tiled_stats};
use crate::error::{Error, Result};
use crate::series::standardize_values;
use crate::spectral::spectral_entropy;
use crate::stats;

pub const FEATURE_COUNT: usize = 23;

/// Canonical feature order used by every table and by the forest columns.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "x_acf1",
    "x_acf10",
    "diff1_acf1",
    "diff1_acf10",
    "diff2_acf1",
    "diff2_acf10",
    "seas_acf1",
    "x_pacf5",
    "diff1x_pacf5",
    "diff2x_pacf5",
    "seas_pacf",
    "std1st_der",
    "entropy",
    "lumpiness",
    "stability",
    "nonlinearity",
    "trend",
    "spike",
    "linearity",
    "curvature",
    "e_acf1",
    "e_acf10",
    "seasonal_strength",
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.0[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        FEATURE_NAMES.iter().copied().zip(self.0.iter().copied())
    }
}

impl Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Standardizes `values` and computes all 23 features at `frequency`.
/// Any failing feature fails the whole vector.
pub fn compute_features(values: &[f64], frequency: usize) -> Result<FeatureVector> {
    if frequency < 2 {
        return Err(Error::FrequencyTooSmall(frequency));
    }
    let needed = (2 * frequency).max(frequency + 2).max(13);
    if values.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: values.len(),
        }
        .in_feature("standardize"));
    }
    let x = standardize_values(values).map_err(|e| e.in_feature("standardize"))?;

    let c = correlation_features(&x, frequency).map_err(|e| e.in_feature("x_acf1"))?;
    let std1 = std1st_der(&x).map_err(|e| e.in_feature("std1st_der"))?;
    let entropy = spectral_entropy(&x).map_err(|e| e.in_feature("entropy"))?;
    let tiles = tiled_stats(&x, frequency).map_err(|e| e.in_feature("lumpiness"))?;
    let nonlin = nonlinearity(&x).map_err(|e| e.in_feature("nonlinearity"))?;
    let decomposition = stl_decompose(&x, frequency).map_err(|e| e.in_feature("trend"))?;
    let s = stl_features(&decomposition, frequency).map_err(|e| e.in_feature("trend"))?;

    let v = FeatureVector([
        c.x_acf1,
        c.x_acf10,
        c.diff1_acf1,
        c.diff1_acf10,
        c.diff2_acf1,
        c.diff2_acf10,
        c.seas_acf1,
        c.x_pacf5,
        c.diff1x_pacf5,
        c.diff2x_pacf5,
        c.seas_pacf,
        std1,
        entropy,
        tiles.lumpiness,
        tiles.stability,
        nonlin,
        s.trend,
        s.spike,
        s.linearity,
        s.curvature,
        s.e_acf1,
        s.e_acf10,
        s.seasonal_strength,
    ]);
    if let Some(i) = v.0.iter().position(|f| !f.is_finite()) {
        return Err(Error::DegenerateInput(format!("non-finite {}", FEATURE_NAMES[i]))
            .in_feature(FEATURE_NAMES[i]));
    }
    Ok(v)
}

/// Computes each `(values, frequency)` job on the rayon pool. Results come
/// back in job order whatever the completion order.
pub fn compute_batch(jobs: &[(&[f64], usize)]) -> Vec<Result<FeatureVector>> {
    jobs.par_iter()
        .map(|(values, frequency)| compute_features(values, *frequency))
        .collect()
}

/// Closed interval each feature must fall in; `entropy` additionally
/// excludes 0.
pub fn feature_range(index: usize) -> (f64, f64) {
    match FEATURE_NAMES[index] {
        "x_acf1" | "diff1_acf1" | "diff2_acf1" | "seas_acf1" | "seas_pacf" | "e_acf1" => (-1.0, 1.0),
        "x_acf10" | "diff1_acf10" | "diff2_acf10" | "e_acf10" => (0.0, 10.0),
        "x_pacf5" | "diff1x_pacf5" | "diff2x_pacf5" => (0.0, 5.0),
        "entropy" | "trend" | "seasonal_strength" => (0.0, 1.0),
        "lumpiness" | "stability" | "nonlinearity" | "spike" | "std1st_der" => (0.0, f64::INFINITY),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

/// Names of the features of `v` outside their documented ranges.
pub fn range_violations(v: &FeatureVector) -> Vec<&'static str> {
    (0..FEATURE_COUNT)
        .filter(|&i| {
            let (lo, hi) = feature_range(i);
            let x = v[i];
            let entropy_zero = FEATURE_NAMES[i] == "entropy" && x <= 0.0;
            !x.is_finite() || x < lo || x > hi || entropy_zero
        })
        .map(|i| FEATURE_NAMES[i])
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub location_id: String,
    pub series_type: String,
    pub resolution: String,
    pub features: FeatureVector,
}

/// Feature rows keyed by `(location, type, resolution)`, no duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<FeatureRow>,
    keys: HashSet<(String, String, String)>,
}

impl FeatureMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rows(rows: impl IntoIterator<Item = FeatureRow>) -> Result<Self> {
        let mut m = Self::new();
        for r in rows {
            m.push(r)?;
        }
        Ok(m)
    }

    pub fn push(&mut self, row: FeatureRow) -> Result<()> {
        let key = (
            row.location_id.clone(),
            row.series_type.clone(),
            row.resolution.clone(),
        );
        if !self.keys.insert(key) {
            return Err(Error::InvalidConfig(format!(
                "duplicate feature row ({}, {}, {})",
                row.location_id, row.series_type, row.resolution
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted series types present.
    pub fn series_types(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| r.series_type.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Resolutions in order of first appearance.
    pub fn resolutions(&self) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        for r in &self.rows {
            if !seen.contains(&r.resolution) {
                seen.push(r.resolution.clone());
            }
        }
        seen
    }

    /// Rows of one `(type, resolution)` slice, sorted by location id.
    pub fn slice(&self, series_type: &str, resolution: &str) -> Vec<&FeatureRow> {
        let mut out: Vec<&FeatureRow> = self
            .rows
            .iter()
            .filter(|r| r.series_type == series_type && r.resolution == resolution)
            .collect();
        out.sort_by(|a, b| a.location_id.cmp(&b.location_id));
        out
    }

    /// Orders rows by `(series_type, resolution position, location_id)`;
    /// resolutions missing from `resolution_order` sort last by name.
    pub fn sort(&mut self, resolution_order: &[String]) {
        let pos = |r: &str| {
            resolution_order
                .iter()
                .position(|x| x == r)
                .unwrap_or(usize::MAX)
        };
        self.rows.sort_by(|a, b| {
            (a.series_type.as_str(), pos(&a.resolution), a.resolution.as_str(), a.location_id.as_str()).cmp(&(
                b.series_type.as_str(),
                pos(&b.resolution),
                b.resolution.as_str(),
                b.location_id.as_str(),
            ))
        });
    }
}

/// Competition ranks in ascending order: ties share the smaller rank and
/// the following rank is skipped. Values within a relative `1e-12` of the
/// first member of a run count as ties.
pub fn ascending_ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0; values.len()];
    let mut run_start = 0;
    for (pos, &i) in order.iter().enumerate() {
        let anchor = values[order[run_start]];
        let tol = 1e-12 * anchor.abs().max(values[i].abs());
        if pos > 0 && (values[i] - anchor).abs() > tol {
            run_start = pos;
        }
        ranks[i] = run_start + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub series_type: String,
    pub feature: &'static str,
    pub resolution: String,
    pub mean: f64,
    /// 1 = smallest mean across resolutions.
    pub rank: usize,
}

/// Per `(type, feature)`: the mean over locations at each resolution and
/// the ranks of those means across resolutions.
pub fn summarize_means(matrix: &FeatureMatrix) -> Result<Vec<SummaryRow>> {
    if matrix.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let resolutions = matrix.resolutions();
    let mut out = Vec::new();
    for series_type in matrix.series_types() {
        let present: Vec<&String> = resolutions
            .iter()
            .filter(|r| !matrix.slice(&series_type, r).is_empty())
            .collect();
        let slices: Vec<Vec<&FeatureRow>> = present
            .iter()
            .map(|r| matrix.slice(&series_type, r))
            .collect();
        for (f, name) in FEATURE_NAMES.iter().enumerate() {
            let means: Vec<f64> = slices
                .iter()
                .map(|rows| rows.iter().map(|r| r.features[f]).sum::<f64>() / rows.len() as f64)
                .collect();
            let ranks = ascending_ranks(&means);
            for ((res, mean), rank) in present.iter().zip(&means).zip(ranks) {
                out.push(SummaryRow {
                    series_type: series_type.clone(),
                    feature: name,
                    resolution: (*res).clone(),
                    mean: *mean,
                    rank,
                });
            }
        }
    }
    Ok(out)
}

/// Symmetric feature-by-feature Pearson correlation matrix.
pub type CorrelationMatrix = [[f64; FEATURE_COUNT]; FEATURE_COUNT];

pub fn feature_correlations(
    matrix: &FeatureMatrix,
    series_type: &str,
    resolution: &str,
) -> Result<CorrelationMatrix> {
    let rows = matrix.slice(series_type, resolution);
    let vectors: Vec<FeatureVector> = rows.iter().map(|r| r.features).collect();
    correlations_of(&vectors)
}

pub fn correlations_of(vectors: &[FeatureVector]) -> Result<CorrelationMatrix> {
    if vectors.len() < 3 {
        return Err(Error::TooFewRows {
            needed: 3,
            got: vectors.len(),
        });
    }
    let columns: Vec<Vec<f64>> = (0..FEATURE_COUNT)
        .map(|f| vectors.iter().map(|v| v[f]).collect())
        .collect();
    let degenerate: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| stats::is_constant(c))
        .map(|(f, _)| FEATURE_NAMES[f].to_string())
        .collect();
    if !degenerate.is_empty() {
        return Err(Error::DegenerateColumn(degenerate));
    }
    let mut out = [[0.0; FEATURE_COUNT]; FEATURE_COUNT];
    for a in 0..FEATURE_COUNT {
        out[a][a] = 1.0;
        for b in a + 1..FEATURE_COUNT {
            let r = stats::pearson(&columns[a], &columns[b]).clamp(-1.0, 1.0);
            out[a][b] = r;
            out[b][a] = r;
        }
    }
    Ok(out)
}
