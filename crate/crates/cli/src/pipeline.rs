//! Orchestration of feature extraction and per-slice forest clustering.
//!
//! A slice is one `(series_type, resolution)` pair. Every random draw is
//! seeded from the run seed and the slice name, so results do not depend on
//! scheduling or worker count.

use std::collections::BTreeMap;

use hydrofeat::clustering::{cluster, dissimilarity_from_proximity, sweep_k, ClusterResult, SweepResult};
use hydrofeat::features::{feature_correlations, summarize_means, CorrelationMatrix, SummaryRow};
use hydrofeat::forest::{proximity_with, Importance};
use hydrofeat::{
    aggregate, compute_features, gini_importance, make_contrast, train_forest, FeatureMatrix, FeatureRow,
    FeatureVector, TimeSeries, FEATURE_COUNT, FEATURE_NAMES,
};
use hydrofeat::stats::pearson;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceFailure {
    pub series_type: String,
    pub resolution: String,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct FeatureStage {
    /// Sorted by `(series_type, resolution order, location_id)`.
    pub matrix: FeatureMatrix,
    pub failures: Vec<SliceFailure>,
}

#[derive(Debug, Clone)]
pub struct SliceAnalysis {
    pub series_type: String,
    pub resolution: String,
    /// Location ids in the row order used for the forest and clustering.
    pub locations: Vec<String>,
    pub clusters: ClusterResult,
    pub sweep: SweepResult,
    pub importance: Importance,
    /// Pearson correlations between feature columns; pairs involving a
    /// constant column are NaN.
    pub correlations: CorrelationMatrix,
    /// Features that are constant across the slice's locations.
    pub constant_features: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct AnalysisStage {
    pub slices: Vec<SliceAnalysis>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<SliceFailure>,
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seeds for the contrast resample, the forest and PAM of one slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceSeeds {
    pub contrast: u64,
    pub forest: u64,
    pub pam: u64,
}

pub fn slice_seeds(seed: u64, series_type: &str, resolution: &str) -> SliceSeeds {
    let key = format!("{series_type}\0{resolution}");
    let base = splitmix64(seed ^ fnv1a(key.as_bytes()));
    SliceSeeds {
        contrast: splitmix64(base ^ 1),
        forest: splitmix64(base ^ 2),
        pam: splitmix64(base ^ 3),
    }
}

struct Job<'a> {
    location: &'a str,
    series_type: &'a str,
    series: &'a TimeSeries,
    spec_index: usize,
}

/// Aggregates every series to every configured resolution and computes its
/// features. A slice with any failing row is left out of the matrix and
/// reported once, naming its first failing location.
pub fn extract_features(
    series: &BTreeMap<(String, String), TimeSeries>,
    config: &RunConfig,
) -> Result<FeatureStage> {
    let specs: BTreeMap<&str, _> = series
        .keys()
        .map(|(_, t)| (t.as_str(), config.resolutions_for(t)))
        .collect();
    let jobs: Vec<Job> = series
        .iter()
        .flat_map(|((loc, t), s)| {
            (0..config.resolutions.len()).map(move |spec_index| Job {
                location: loc,
                series_type: t,
                series: s,
                spec_index,
            })
        })
        .collect();

    let pool = thread_pool(config.workers)?;
    let results: Vec<std::result::Result<FeatureVector, (&'static str, hydrofeat::Error)>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let spec = &specs[job.series_type][job.spec_index];
                let aggregated = aggregate(job.series, spec).map_err(|e| ("aggregate", e))?;
                compute_features(aggregated.values(), spec.frequency).map_err(|e| ("features", e))
            })
            .collect()
    });

    // Jobs are ordered by (location, type, resolution), so the first error
    // seen per slice belongs to the smallest failing location id.
    let mut failed: BTreeMap<(&str, usize), SliceFailure> = BTreeMap::new();
    for (job, result) in jobs.iter().zip(&results) {
        if let Err((stage, e)) = result {
            failed
                .entry((job.series_type, job.spec_index))
                .or_insert_with(|| SliceFailure {
                    series_type: job.series_type.to_string(),
                    resolution: config.resolutions[job.spec_index].name.clone(),
                    stage: stage.to_string(),
                    message: format!("location {}: {e}", job.location),
                });
        }
    }
    let mut matrix = FeatureMatrix::new();
    for (job, result) in jobs.iter().zip(results) {
        if let Ok(features) = result {
            if !failed.contains_key(&(job.series_type, job.spec_index)) {
                matrix.push(FeatureRow {
                    location_id: job.location.to_string(),
                    series_type: job.series_type.to_string(),
                    resolution: config.resolutions[job.spec_index].name.clone(),
                    features,
                })?;
            }
        }
    }
    matrix.sort(&config.resolution_names());
    Ok(FeatureStage {
        matrix,
        failures: failed.into_values().collect(),
    })
}

/// Slices present in `matrix`, by series type then resolution order.
fn slice_keys(matrix: &FeatureMatrix, config: &RunConfig) -> Vec<(String, String)> {
    let mut order = config.resolution_names();
    for r in matrix.resolutions() {
        if !order.contains(&r) {
            order.push(r);
        }
    }
    let mut keys = Vec::new();
    for t in matrix.series_types() {
        for r in &order {
            if !matrix.slice(&t, r).is_empty() {
                keys.push((t.clone(), r.clone()));
            }
        }
    }
    keys
}

/// Correlations over the non-constant columns of a slice. Constant columns
/// are reported back rather than failing the slice; they are expected at
/// coarse resolutions where some STL features saturate.
fn slice_correlations(
    matrix: &FeatureMatrix,
    series_type: &str,
    resolution: &str,
) -> std::result::Result<(CorrelationMatrix, Vec<String>), (&'static str, hydrofeat::Error)> {
    match feature_correlations(matrix, series_type, resolution) {
        Ok(c) => Ok((c, Vec::new())),
        Err(hydrofeat::Error::DegenerateColumn(constant)) => {
            let rows = matrix.slice(series_type, resolution);
            let column = |f: usize| -> Vec<f64> { rows.iter().map(|r| r.features[f]).collect() };
            let live: Vec<usize> = (0..FEATURE_COUNT)
                .filter(|&f| !constant.iter().any(|c| c == FEATURE_NAMES[f]))
                .collect();
            let mut c = [[f64::NAN; FEATURE_COUNT]; FEATURE_COUNT];
            for (i, &a) in live.iter().enumerate() {
                c[a][a] = 1.0;
                for &b in &live[i + 1..] {
                    let r = pearson(&column(a), &column(b)).clamp(-1.0, 1.0);
                    c[a][b] = r;
                    c[b][a] = r;
                }
            }
            Ok((c, constant))
        }
        Err(e) => Err(("correlations", e)),
    }
}

fn analyze_slice(
    matrix: &FeatureMatrix,
    series_type: &str,
    resolution: &str,
    config: &RunConfig,
) -> std::result::Result<SliceAnalysis, (&'static str, hydrofeat::Error)> {
    let rows = matrix.slice(series_type, resolution);
    let locations: Vec<String> = rows.iter().map(|r| r.location_id.clone()).collect();
    let real: Vec<&[f64]> = rows.iter().map(|r| &r.features.0[..]).collect();
    let seeds = slice_seeds(config.seed, series_type, resolution);

    let (correlations, constant_features) = slice_correlations(matrix, series_type, resolution)?;
    let contrast = make_contrast(&real, seeds.contrast).map_err(|e| ("contrast", e))?;
    let forest = train_forest(&contrast, config.n_trees, config.mtry, seeds.forest).map_err(|e| ("forest", e))?;
    let prox = proximity_with(&forest, &real, config.proximity_oob).map_err(|e| ("proximity", e))?;
    let d = dissimilarity_from_proximity(&prox).map_err(|e| ("proximity", e))?;
    let clusters = cluster(&d, config.k_fixed, seeds.pam).map_err(|e| ("cluster", e))?;
    // Values of k that cannot give a silhouette (k >= n) are skipped.
    let ks: Vec<usize> = config.k_sweep.iter().copied().filter(|&k| k < real.len()).collect();
    let sweep = sweep_k(&d, &ks, seeds.pam).map_err(|e| ("sweep", e))?;
    Ok(SliceAnalysis {
        series_type: series_type.to_string(),
        resolution: resolution.to_string(),
        locations,
        clusters,
        sweep,
        importance: gini_importance(&forest),
        correlations,
        constant_features,
    })
}

/// Forest, proximity, clustering, sweep, importance and correlations for
/// every slice of `matrix`, plus cross-resolution summary means. A failing
/// slice is omitted and reported.
pub fn analyze(matrix: &FeatureMatrix, config: &RunConfig) -> Result<AnalysisStage> {
    let pool = thread_pool(config.workers)?;
    let mut slices = Vec::new();
    let mut failures = Vec::new();
    let fail = |t: &str, r: &str, stage: &str, e: hydrofeat::Error| SliceFailure {
        series_type: t.to_string(),
        resolution: r.to_string(),
        stage: stage.to_string(),
        message: e.to_string(),
    };
    for (t, r) in slice_keys(matrix, config) {
        match pool.install(|| analyze_slice(matrix, &t, &r, config)) {
            Ok(s) => slices.push(s),
            Err((stage, e)) => failures.push(fail(&t, &r, stage, e)),
        }
    }
    let summary = if matrix.is_empty() {
        Vec::new()
    } else {
        let mut sorted = matrix.clone();
        sorted.sort(&config.resolution_names());
        summarize_means(&sorted)?
    };
    Ok(AnalysisStage {
        slices,
        summary,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_seeds_differ_by_slice_and_seed() {
        let a = slice_seeds(0, "temperature", "1-day");
        assert_eq!(a, slice_seeds(0, "temperature", "1-day"));
        assert_ne!(a, slice_seeds(0, "temperature", "2-day"));
        assert_ne!(a, slice_seeds(1, "temperature", "1-day"));
        assert_ne!(slice_seeds(0, "ab", "c"), slice_seeds(0, "a", "bc"));
        assert!(a.contrast != a.forest && a.forest != a.pam);
    }
}
