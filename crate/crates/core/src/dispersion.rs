//! Tiled-window statistics, first-difference spread and the nonlinearity
//! statistic.

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::series::difference_values;
use crate::stats;

/// Non-overlapping windows of `frequency` values from the first observation.
/// The trailing remainder is excluded.
#[derive(Debug, Clone, Copy)]
pub struct TiledWindows<'a> {
    values: &'a [f64],
    width: usize,
}

impl<'a> TiledWindows<'a> {
    pub fn new(values: &'a [f64], frequency: usize) -> Result<Self> {
        if frequency < 2 {
            return Err(Error::FrequencyTooSmall(frequency));
        }
        if values.len() < 2 * frequency {
            return Err(Error::TooShort {
                needed: 2 * frequency,
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            width: frequency,
        })
    }

    pub fn windows(&self) -> impl Iterator<Item = &'a [f64]> {
        self.values.chunks_exact(self.width)
    }

    pub fn count(&self) -> usize {
        self.values.len() / self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiledStats {
    /// Sample variance of the window variances.
    pub lumpiness: f64,
    /// Sample variance of the window means.
    pub stability: f64,
}

pub fn tiled_stats(values: &[f64], frequency: usize) -> Result<TiledStats> {
    let tiles = TiledWindows::new(values, frequency)?;
    let (means, vars): (Vec<f64>, Vec<f64>) = tiles
        .windows()
        .map(|w| (stats::mean(w), stats::sample_variance(w)))
        .unzip();
    Ok(TiledStats {
        lumpiness: stats::sample_variance(&vars),
        stability: stats::sample_variance(&means),
    })
}

/// Sample standard deviation of the first differences.
pub fn std1st_der(values: &[f64]) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: values.len(),
        });
    }
    Ok(stats::sample_sd(&difference_values(values, 1)?))
}

/// Lag-1 Teräsvirta-type statistic: the auxiliary regression adds the
/// square and cube of the lagged value to a linear AR(1). Returns
/// `10 X^2 / T` with `X^2 = T (SSE0 - SSE1) / SSE0`.
pub fn nonlinearity(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 8 {
        return Err(Error::TooShort { needed: 8, got: n });
    }
    let y = &values[1..];
    let lag = &values[..n - 1];
    let t = y.len();
    let ones = vec![1.0; t];
    let (_, sse0) = least_squares(&[ones.clone(), lag.to_vec()], y)?;
    let total = stats::sum_sq_dev(y);
    if total <= 0.0 || sse0 <= f64::EPSILON * total {
        // A noise-free linear recursion leaves nothing to explain.
        return Ok(0.0);
    }
    let sq: Vec<f64> = lag.iter().map(|v| v * v).collect();
    let cube: Vec<f64> = lag.iter().map(|v| v * v * v).collect();
    let (_, sse1) = least_squares(&[ones, lag.to_vec(), sq, cube], y)?;
    let chi2 = t as f64 * ((sse0 - sse1) / sse0).max(0.0);
    Ok(10.0 * chi2 / t as f64)
}
