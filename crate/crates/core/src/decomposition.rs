//! Loess smoothing, additive STL decomposition and the STL-derived features.

use crate::correlation::acf;
use crate::error::{Error, Result};
use crate::stats;

/// Additive split: `seasonal + trend + remainder` reproduces the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub seasonal: Vec<f64>,
    pub trend: Vec<f64>,
    pub remainder: Vec<f64>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.trend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trend.is_empty()
    }

    /// Largest absolute deviation of `seasonal + trend + remainder` from `input`.
    pub fn reconstruction_error(&self, input: &[f64]) -> f64 {
        input
            .iter()
            .enumerate()
            .map(|(i, y)| (self.seasonal[i] + self.trend[i] + self.remainder[i] - y).abs())
            .fold(0.0, f64::max)
    }
}

fn tricube(r: f64, h: f64) -> f64 {
    if r <= 0.001 * h {
        1.0
    } else if r <= 0.999 * h {
        let u = r / h;
        let a = 1.0 - u * u * u;
        a * a * a
    } else {
        0.0
    }
}

/// Weighted local polynomial fit evaluated at `x0`, using points `lo..hi`.
/// Returns `None` when the local design is rank-deficient.
#[allow(clippy::too_many_arguments)]
fn local_fit(
    x: &[f64],
    y: &[f64],
    lo: usize,
    hi: usize,
    x0: f64,
    h: f64,
    degree: usize,
    robustness: Option<&[f64]>,
) -> Option<f64> {
    let scale = if h > 0.0 { h } else { 1.0 };
    // Moments of the scaled offset u = (x - x0) / h.
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    let mut support = 0usize;
    let mut last_x = f64::NAN;
    for j in lo..hi {
        let mut w = tricube((x[j] - x0).abs(), h);
        if let Some(r) = robustness {
            w *= r[j];
        }
        if w <= 0.0 {
            continue;
        }
        if x[j] != last_x {
            support += 1;
            last_x = x[j];
        }
        let u = (x[j] - x0) / scale;
        let mut p = w;
        for (k, sk) in s.iter_mut().enumerate().take(2 * degree + 1) {
            *sk += p;
            if k <= degree {
                t[k] += p * y[j];
            }
            p *= u;
        }
    }
    if support < degree + 1 {
        return None;
    }
    let m = degree + 1;
    let mut a = [[0.0f64; 4]; 3];
    for r in 0..m {
        a[r][..m].copy_from_slice(&s[r..r + m]);
        a[r][m] = t[r];
    }
    let max_diag = (0..m).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    solve_small(&mut a, m, max_diag * 1e-12).map(|beta| beta[0])
}

/// Gaussian elimination with partial pivoting on an augmented `m x (m+1)` system.
fn solve_small(a: &mut [[f64; 4]; 3], m: usize, tol: f64) -> Option<[f64; 3]> {
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= tol {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            for c in col..=m {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut beta = [0.0; 3];
    for r in (0..m).rev() {
        let mut acc = a[r][m];
        for c in r + 1..m {
            acc -= a[r][c] * beta[c];
        }
        beta[r] = acc / a[r][r];
    }
    Some(beta)
}

/// Loess fit at every `x[i]` using the `q` nearest neighbours. When `q`
/// exceeds the number of points the bandwidth grows by `(q - n) / 2`.
/// With `fallback`, rank-deficient local fits drop to lower degree.
fn loess_fit(
    x: &[f64],
    y: &[f64],
    q: usize,
    degree: usize,
    robustness: Option<&[f64]>,
    fallback: bool,
) -> Result<Vec<f64>> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let mut lo = 0usize;
    for i in 0..n {
        let x0 = x[i];
        let (wlo, whi, h) = if q >= n {
            let h = (x0 - x[0]).max(x[n - 1] - x0) + (q - n) as f64 / 2.0;
            (0, n, h)
        } else {
            while lo + q < n && x0 - x[lo] > x[lo + q] - x0 {
                lo += 1;
            }
            let h = (x0 - x[lo]).max(x[lo + q - 1] - x0);
            (lo, lo + q, h)
        };
        let mut d = degree;
        let fit = loop {
            match local_fit(x, y, wlo, whi, x0, h, d, robustness) {
                Some(v) => break v,
                None if fallback && d > 0 => d -= 1,
                None if fallback => break y[i],
                None => return Err(Error::SingularFit),
            }
        };
        out.push(fit);
    }
    Ok(out)
}

/// Locally weighted polynomial regression with tricube weights over the
/// `ceil(span * n)` nearest neighbours of each point.
pub fn loess_smooth(
    y: &[f64],
    x: &[f64],
    span: f64,
    degree: usize,
    robustness_weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let n = y.len();
    if x.len() != n || robustness_weights.is_some_and(|w| w.len() != n) {
        return Err(Error::InvalidConfig("loess inputs differ in length".into()));
    }
    if degree > 2 {
        return Err(Error::InvalidConfig(format!("loess degree {degree} not in 0..=2")));
    }
    if !(span > 0.0 && span <= 1.0) {
        return Err(Error::InvalidConfig(format!("loess span {span} not in (0, 1]")));
    }
    if x.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("loess x must be strictly increasing".into()));
    }
    let q = ((span * n as f64).ceil() as usize).min(n);
    if q < degree + 1 {
        return Err(Error::SpanTooSmall {
            points: q,
            needed: degree + 1,
        });
    }
    loess_fit(x, y, q, degree, robustness_weights, false)
}

/// Seasonal smoothing of the cycle-subseries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeasonalSmoothing {
    /// Each cycle-subseries is replaced by its (weighted) mean.
    Periodic,
    /// Loess over each cycle-subseries with the given odd window and degree.
    Loess { window: usize, degree: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StlConfig {
    pub seasonal: SeasonalSmoothing,
    /// Trend window; defaults to the next odd integer >= 1.5 * frequency.
    pub trend_window: Option<usize>,
    /// Low-pass window; defaults to the next odd integer >= frequency.
    pub lowpass_window: Option<usize>,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
}

impl Default for StlConfig {
    fn default() -> Self {
        Self {
            seasonal: SeasonalSmoothing::Periodic,
            trend_window: None,
            lowpass_window: None,
            inner_iterations: 2,
            outer_iterations: 0,
        }
    }
}

fn next_odd(v: usize) -> usize {
    if v % 2 == 1 {
        v
    } else {
        v + 1
    }
}

fn moving_average(x: &[f64], len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 1 - len);
    let mut acc: f64 = x[..len].iter().sum();
    out.push(acc / len as f64);
    for i in len..x.len() {
        acc += x[i] - x[i - len];
        out.push(acc / len as f64);
    }
    out
}

/// Smooths every cycle-subseries and extends it one period at each end.
/// The result has length `n + 2 * period`; entry `t + period` lines up with
/// input position `t`.
fn cycle_subseries(
    detrended: &[f64],
    period: usize,
    smoothing: SeasonalSmoothing,
    robustness: Option<&[f64]>,
) -> Vec<f64> {
    let n = detrended.len();
    let mut c = vec![0.0; n + 2 * period];
    for j in 0..period {
        let idx: Vec<usize> = (j..n).step_by(period).collect();
        let m = idx.len();
        let ys: Vec<f64> = idx.iter().map(|&t| detrended[t]).collect();
        let ws: Option<Vec<f64>> = robustness.map(|r| idx.iter().map(|&t| r[t]).collect());
        let fitted: Vec<f64> = match smoothing {
            SeasonalSmoothing::Periodic => {
                let (num, den) = match &ws {
                    Some(w) => ys
                        .iter()
                        .zip(w)
                        .fold((0.0, 0.0), |(a, b), (y, w)| (a + w * y, b + w)),
                    None => (ys.iter().sum(), m as f64),
                };
                let v = if den > 0.0 { num / den } else { stats::mean(&ys) };
                vec![v; m + 2]
            }
            SeasonalSmoothing::Loess { window, degree } => {
                let xs: Vec<f64> = (1..=m).map(|p| p as f64).collect();
                // Evaluate at positions 0..=m+1 over the subseries support.
                (0..m + 2)
                    .map(|p| {
                        let x0 = p as f64;
                        let (lo, hi, h) = if window >= m {
                            let h = (x0 - 1.0).max(m as f64 - x0) + (window - m) as f64 / 2.0;
                            (0, m, h)
                        } else {
                            let lo = if p <= window / 2 + 1 {
                                0
                            } else {
                                (p - 1 - window / 2).min(m - window)
                            };
                            let h = (x0 - xs[lo]).max(xs[lo + window - 1] - x0);
                            (lo, lo + window, h)
                        };
                        let mut d = degree;
                        loop {
                            if let Some(v) = local_fit(&xs, &ys, lo, hi, x0, h, d, ws.as_deref()) {
                                break v;
                            }
                            if d == 0 {
                                break stats::mean(&ys);
                            }
                            d -= 1;
                        }
                    })
                    .collect()
            }
        };
        for (p, v) in fitted.into_iter().enumerate() {
            c[p * period + j] = v;
        }
    }
    c
}

/// Seasonal-trend decomposition by Loess with the inner/outer loop scheme.
pub fn stl_decompose(values: &[f64], frequency: usize) -> Result<Decomposition> {
    stl_decompose_with(values, frequency, &StlConfig::default())
}

pub fn stl_decompose_with(values: &[f64], frequency: usize, config: &StlConfig) -> Result<Decomposition> {
    if frequency < 2 {
        return Err(Error::FrequencyTooSmall(frequency));
    }
    let n = values.len();
    if n < 2 * frequency {
        return Err(Error::TooShort {
            needed: 2 * frequency,
            got: n,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value in STL input".into()));
    }
    let period = frequency;
    let trend_window = config
        .trend_window
        .unwrap_or_else(|| next_odd((3 * period).div_ceil(2)));
    let lowpass_window = config.lowpass_window.unwrap_or_else(|| next_odd(period));
    let positions: Vec<f64> = (0..n).map(|t| t as f64).collect();

    let mut trend = vec![0.0; n];
    let mut seasonal = vec![0.0; n];
    let mut robustness: Option<Vec<f64>> = None;
    for outer in 0..=config.outer_iterations {
        for _ in 0..config.inner_iterations.max(1) {
            let detrended: Vec<f64> = values.iter().zip(&trend).map(|(y, t)| y - t).collect();
            let c = cycle_subseries(&detrended, period, config.seasonal, robustness.as_deref());
            let low = moving_average(&moving_average(&moving_average(&c, period), period), 3);
            let low = loess_fit(&positions, &low, lowpass_window, 1, None, true)?;
            for t in 0..n {
                seasonal[t] = c[t + period] - low[t];
            }
            let deseasonalized: Vec<f64> = values.iter().zip(&seasonal).map(|(y, s)| y - s).collect();
            trend = loess_fit(&positions, &deseasonalized, trend_window, 1, robustness.as_deref(), true)?;
        }
        if outer < config.outer_iterations {
            let resid: Vec<f64> = (0..n).map(|t| values[t] - seasonal[t] - trend[t]).collect();
            robustness = Some(bisquare_weights(&resid));
        }
    }
    let remainder = (0..n).map(|t| values[t] - seasonal[t] - trend[t]).collect();
    Ok(Decomposition {
        seasonal,
        trend,
        remainder,
    })
}

fn bisquare_weights(resid: &[f64]) -> Vec<f64> {
    let mut abs: Vec<f64> = resid.iter().map(|r| r.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    let median = if n % 2 == 1 {
        abs[n / 2]
    } else {
        0.5 * (abs[n / 2 - 1] + abs[n / 2])
    };
    let h = 6.0 * median;
    resid
        .iter()
        .map(|r| {
            let u = r.abs();
            if u <= 0.001 * h {
                1.0
            } else if u <= 0.999 * h {
                let a = 1.0 - (u / h) * (u / h);
                a * a
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StlFeatures {
    pub trend: f64,
    pub seasonal_strength: f64,
    pub spike: f64,
    pub linearity: f64,
    pub curvature: f64,
    pub e_acf1: f64,
    pub e_acf10: f64,
}

/// Variance of the leave-one-out sample variances, via the O(n) downdate
/// `SS_i = SS - n/(n-1) * (x_i - mean)^2`.
pub fn leave_one_out_variance_spread(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 4 {
        return Err(Error::TooShort { needed: 4, got: n });
    }
    let m = stats::mean(values);
    let ss = stats::sum_sq_dev(values);
    let nf = n as f64;
    let loo: Vec<f64> = values
        .iter()
        .map(|v| {
            let d = v - m;
            (ss - nf / (nf - 1.0) * d * d).max(0.0) / (nf - 2.0)
        })
        .collect();
    Ok(stats::sample_variance(&loo))
}

/// Coefficients of `values` on the orthonormal basis spanned by
/// `{1, t, t^2}` over `t = 1..=n` (Gram-Schmidt, unit Euclidean norm).
pub fn orthogonal_quadratic_coefficients(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    // Centre and scale t first; the spanned space and the orientation of the
    // resulting basis are unchanged.
    let centre = (n as f64 + 1.0) / 2.0;
    let scale = n as f64 / 2.0;
    let u: Vec<f64> = (1..=n).map(|t| (t as f64 - centre) / scale).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(3);
    for power in 0..3 {
        let mut v: Vec<f64> = u.iter().map(|x| x.powi(power)).collect();
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(b).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    let dot = |b: &[f64]| b.iter().zip(values).map(|(a, y)| a * y).sum::<f64>();
    Ok((dot(&basis[1]), dot(&basis[2])))
}

/// Strength, spikiness, shape and remainder-autocorrelation features of a
/// decomposition.
pub fn stl_features(d: &Decomposition, _frequency: usize) -> Result<StlFeatures> {
    let n = d.len();
    if n < 11 {
        return Err(Error::TooShort { needed: 11, got: n });
    }
    let var_r = stats::sample_variance(&d.remainder);
    let tr: Vec<f64> = d.trend.iter().zip(&d.remainder).map(|(t, r)| t + r).collect();
    let sr: Vec<f64> = d.seasonal.iter().zip(&d.remainder).map(|(s, r)| s + r).collect();
    let var_tr = stats::sample_variance(&tr);
    let var_sr = stats::sample_variance(&sr);
    if var_tr <= 0.0 || var_sr <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let strength = |denom: f64| (1.0 - var_r / denom).clamp(0.0, 1.0);
    let (linearity, curvature) = orthogonal_quadratic_coefficients(&d.trend)?;
    // A remainder at rounding-noise level carries no serial structure.
    let input: Vec<f64> = tr.iter().zip(&d.seasonal).map(|(a, s)| a + s).collect();
    let negligible = var_r.sqrt() <= 1e-10 * stats::sample_sd(&input);
    let (e_acf1, e_acf10) = if negligible || stats::is_constant(&d.remainder) {
        (0.0, 0.0)
    } else {
        let r = acf(&d.remainder, 10)?;
        (r.lag(1), r.sum_sq(10))
    };
    Ok(StlFeatures {
        trend: strength(var_tr),
        seasonal_strength: strength(var_sr),
        spike: leave_one_out_variance_spread(&d.remainder)?,
        linearity,
        curvature,
        e_acf1,
        e_acf10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_spike(x: &[f64]) -> f64 {
        let loo: Vec<f64> = (0..x.len())
            .map(|i| {
                let rest: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, v)| *v)
                    .collect();
                stats::sample_variance(&rest)
            })
            .collect();
        stats::sample_variance(&loo)
    }

    #[test]
    fn loess_reproduces_lines_and_quadratics() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.5 + (i as f64).sqrt()).collect();
        let line: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let quad: Vec<f64> = x.iter().map(|v| 1.0 + v - 0.3 * v * v).collect();
        for span in [0.2, 0.5, 1.0] {
            let fit = loess_smooth(&line, &x, span, 1, None).unwrap();
            for (a, b) in fit.iter().zip(&line) {
                assert!((a - b).abs() < 1e-10);
            }
            let fit = loess_smooth(&quad, &x, span, 2, None).unwrap();
            for (a, b) in fit.iter().zip(&quad) {
                assert!((a - b).abs() < 1e-10, "{a} {b}");
            }
        }
        let flat = loess_smooth(&[4.0; 20], &x[..20], 0.3, 1, None).unwrap();
        assert!(flat.iter().all(|v| (v - 4.0).abs() < 1e-12));
    }

    #[test]
    fn loess_errors() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        assert!(matches!(
            loess_smooth(&x, &x, 0.1, 2, None),
            Err(Error::SpanTooSmall { points: 1, needed: 3 })
        ));
        // q = 2 at degree 1: the far neighbour sits on the bandwidth edge
        // and receives zero weight.
        assert_eq!(loess_smooth(&x, &x, 0.2, 1, None), Err(Error::SingularFit));
    }

    #[test]
    fn loess_uses_robustness_weights() {
        let x: Vec<f64> = (0..21).map(f64::from).collect();
        let mut y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        y[10] = 100.0;
        let mut w = vec![1.0; 21];
        w[10] = 0.0;
        let fit = loess_smooth(&y, &x, 0.5, 1, Some(&w)).unwrap();
        assert!((fit[10] - 20.0).abs() < 1e-10);
    }

    #[test]
    fn pure_seasonal_has_no_remainder() {
        let pattern = [3.0, -1.0, 0.5, 2.0, -4.0, 1.5, 0.0];
        let y: Vec<f64> = (0..7 * 20).map(|i| pattern[i % 7]).collect();
        let d = stl_decompose(&y, 7).unwrap();
        let var_r = stats::sample_variance(&d.remainder);
        assert!(var_r < 1e-6 * stats::sample_variance(&y));
        assert!(d.reconstruction_error(&y) < 1e-10);
    }

    #[test]
    fn ramp_goes_to_trend() {
        let y: Vec<f64> = (0..240).map(|i| 0.05 * i as f64).collect();
        let d = stl_decompose(&y, 12).unwrap();
        assert!(stats::pearson(&d.trend, &y) > 0.999);
    }

    #[test]
    fn robust_iterations_keep_identity() {
        let y: Vec<f64> = (0..200)
            .map(|i| (2.0 * PI * i as f64 / 10.0).sin() + if i == 50 { 30.0 } else { 0.0 })
            .collect();
        let config = StlConfig {
            outer_iterations: 2,
            ..StlConfig::default()
        };
        let d = stl_decompose_with(&y, 10, &config).unwrap();
        assert!(d.reconstruction_error(&y) < 1e-10);
        assert!(d.remainder[50] > 25.0);
        let loess = StlConfig {
            seasonal: SeasonalSmoothing::Loess { window: 7, degree: 0 },
            ..StlConfig::default()
        };
        let d = stl_decompose_with(&y, 10, &loess).unwrap();
        assert!(d.reconstruction_error(&y) < 1e-10);
    }

    #[test]
    fn decomposition_errors() {
        assert_eq!(stl_decompose(&[1.0; 30], 1), Err(Error::FrequencyTooSmall(1)));
        assert!(matches!(stl_decompose(&[1.0; 10], 6), Err(Error::TooShort { .. })));
    }

    #[test]
    fn spike_matches_naive() {
        let x: Vec<f64> = (0..60).map(|i| ((i * 13 % 17) as f64).ln_1p() - 1.0).collect();
        assert!((leave_one_out_variance_spread(&x).unwrap() - naive_spike(&x)).abs() < 1e-10);
    }

    #[test]
    fn curvature_of_line_is_zero() {
        let y: Vec<f64> = (0..500).map(|i| 2.0 + 0.01 * i as f64).collect();
        let (lin, curv) = orthogonal_quadratic_coefficients(&y).unwrap();
        assert!(curv.abs() < 1e-8);
        assert!(lin > 0.0);
        let q: Vec<f64> = (0..500).map(|i| ((i as f64) - 250.0).powi(2) * 1e-4).collect();
        assert!(orthogonal_quadratic_coefficients(&q).unwrap().1 > 0.0);
    }

    #[test]
    fn zero_remainder_reports_full_strength() {
        let n = 48;
        let d = Decomposition {
            seasonal: (0..n).map(|i| (2.0 * PI * i as f64 / 12.0).sin()).collect(),
            trend: (0..n).map(|i| i as f64 * 0.1).collect(),
            remainder: vec![0.0; n],
        };
        let f = stl_features(&d, 12).unwrap();
        assert_eq!(f.trend, 1.0);
        assert_eq!(f.seasonal_strength, 1.0);
        assert_eq!(f.spike, 0.0);
        assert_eq!((f.e_acf1, f.e_acf10), (0.0, 0.0));
    }

    #[test]
    fn zero_variance_components_error() {
        let d = Decomposition {
            seasonal: vec![0.0; 20],
            trend: vec![1.0; 20],
            remainder: vec![0.0; 20],
        };
        assert_eq!(stl_features(&d, 4), Err(Error::ZeroVariance));
    }
}
