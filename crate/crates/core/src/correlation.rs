//! Sample autocorrelation, partial autocorrelation (Durbin-Levinson) and
//! the correlation-based features.

use crate::error::{Error, Result};
use crate::series::difference_values;
use crate::stats;

/// Autocorrelations at lags `1..=L`; `values()[k - 1]` is lag `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfVector(Vec<f64>);

impl AcfVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn max_lag(&self) -> usize {
        self.0.len()
    }

    /// Value at `lag` (1-based). Panics when out of range.
    pub fn lag(&self, lag: usize) -> f64 {
        self.0[lag - 1]
    }

    /// Sum of squares over lags `1..=upto`.
    pub fn sum_sq(&self, upto: usize) -> f64 {
        self.0[..upto].iter().map(|r| r * r).sum()
    }
}

fn check_input(values: &[f64], max_lag: usize) -> Result<()> {
    if max_lag == 0 {
        return Err(Error::InvalidConfig("max_lag must be at least 1".into()));
    }
    if values.len() <= max_lag {
        return Err(Error::TooShort {
            needed: max_lag + 1,
            got: values.len(),
        });
    }
    if stats::is_constant(values) {
        return Err(Error::ZeroVariance);
    }
    Ok(())
}

/// Biased sample autocorrelation: lagged cross-products over the full-series
/// sum of squares, which keeps every `|r_k| <= 1`.
pub fn acf(values: &[f64], max_lag: usize) -> Result<AcfVector> {
    check_input(values, max_lag)?;
    let m = stats::mean(values);
    let centered: Vec<f64> = values.iter().map(|v| v - m).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if denom <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let r = (1..=max_lag)
        .map(|k| {
            let num: f64 = centered[..centered.len() - k]
                .iter()
                .zip(&centered[k..])
                .map(|(a, b)| a * b)
                .sum();
            num / denom
        })
        .collect();
    Ok(AcfVector(r))
}

/// Incremental Durbin-Levinson recursion on a normalized autocorrelation
/// sequence. After `k` steps `coefficients()` holds the Yule-Walker AR(k)
/// fit and `variance()` its innovation variance relative to lag-0.
#[derive(Debug, Clone)]
pub struct Levinson<'a> {
    acf: &'a [f64],
    coefficients: Vec<f64>,
    variance: f64,
}

impl<'a> Levinson<'a> {
    /// `acf[k - 1]` is the autocorrelation at lag `k`.
    pub fn new(acf: &'a [f64]) -> Self {
        Self {
            acf,
            coefficients: Vec::with_capacity(acf.len()),
            variance: 1.0,
        }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Advances one order and returns the new partial autocorrelation.
    pub fn step(&mut self) -> Result<f64> {
        let k = self.order() + 1;
        assert!(k <= self.acf.len(), "recursion ran past the supplied lags");
        let r = |lag: usize| self.acf[lag - 1];
        let mut num = r(k);
        for (j, phi) in self.coefficients.iter().enumerate() {
            num -= phi * r(k - j - 1);
        }
        let phi_kk = num / self.variance;
        let variance = self.variance * (1.0 - phi_kk * phi_kk);
        if !phi_kk.is_finite() || !(variance > f64::EPSILON) {
            return Err(Error::DegenerateRecursion { lag: k });
        }
        let prev = self.coefficients.clone();
        for (j, c) in self.coefficients.iter_mut().enumerate() {
            *c -= phi_kk * prev[k - 2 - j];
        }
        self.coefficients.push(phi_kk);
        self.variance = variance;
        Ok(phi_kk)
    }
}

/// Partial autocorrelations at lags `1..=max_lag` from the biased ACF.
pub fn pacf(values: &[f64], max_lag: usize) -> Result<AcfVector> {
    let r = acf(values, max_lag)?;
    pacf_from_acf(&r)
}

pub fn pacf_from_acf(acf: &AcfVector) -> Result<AcfVector> {
    let mut lev = Levinson::new(acf.values());
    let out = (0..acf.max_lag())
        .map(|_| lev.step())
        .collect::<Result<Vec<_>>>()?;
    Ok(AcfVector(out))
}

/// The eleven autocorrelation-based features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationFeatures {
    pub x_acf1: f64,
    pub x_acf10: f64,
    pub diff1_acf1: f64,
    pub diff1_acf10: f64,
    pub diff2_acf1: f64,
    pub diff2_acf10: f64,
    pub seas_acf1: f64,
    pub x_pacf5: f64,
    pub diff1x_pacf5: f64,
    pub diff2x_pacf5: f64,
    pub seas_pacf: f64,
}

fn differenced(values: &[f64], order: usize, stage: &'static str) -> Result<Vec<f64>> {
    let d = difference_values(values, order).map_err(|e| e.in_feature(stage))?;
    if stats::is_constant(&d) {
        return Err(Error::DegenerateInput(format!("order-{order} differences are constant"))
            .in_feature(stage));
    }
    Ok(d)
}

pub fn correlation_features(values: &[f64], frequency: usize) -> Result<CorrelationFeatures> {
    if frequency < 2 {
        return Err(Error::FrequencyTooSmall(frequency));
    }
    let needed = (frequency + 2).max(13);
    if values.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: values.len(),
        });
    }
    let x_acf = acf(values, frequency.max(10)).map_err(|e| e.in_feature("x_acf1"))?;

    let d1 = differenced(values, 1, "diff1_acf1")?;
    let d1_acf = acf(&d1, 10).map_err(|e| e.in_feature("diff1_acf1"))?;
    let d2 = differenced(values, 2, "diff2_acf1")?;
    let d2_acf = acf(&d2, 10).map_err(|e| e.in_feature("diff2_acf1"))?;

    let x_pacf = pacf_from_acf(&x_acf).map_err(|e| e.in_feature("x_pacf5"))?;
    let d1_pacf = pacf_from_acf(&d1_acf).map_err(|e| e.in_feature("diff1x_pacf5"))?;
    let d2_pacf = pacf_from_acf(&d2_acf).map_err(|e| e.in_feature("diff2x_pacf5"))?;

    Ok(CorrelationFeatures {
        x_acf1: x_acf.lag(1),
        x_acf10: x_acf.sum_sq(10),
        diff1_acf1: d1_acf.lag(1),
        diff1_acf10: d1_acf.sum_sq(10),
        diff2_acf1: d2_acf.lag(1),
        diff2_acf10: d2_acf.sum_sq(10),
        seas_acf1: x_acf.lag(frequency),
        x_pacf5: x_pacf.sum_sq(5),
        diff1x_pacf5: d1_pacf.sum_sq(5),
        diff2x_pacf5: d2_pacf.sum_sq(5),
        seas_pacf: x_pacf.lag(frequency),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct double loop, written independently of `acf`.
    fn acf_oracle(x: &[f64], max_lag: usize) -> Vec<f64> {
        let n = x.len();
        let mut m = 0.0;
        for v in x {
            m += v;
        }
        m /= n as f64;
        let mut den = 0.0;
        for t in 0..n {
            den += (x[t] - m) * (x[t] - m);
        }
        let mut out = vec![];
        for k in 1..=max_lag {
            let mut num = 0.0;
            for t in 0..n - k {
                num += (x[t] - m) * (x[t + k] - m);
            }
            out.push(num / den);
        }
        out
    }

    #[test]
    fn ramp_lag_one() {
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let r = acf(&x, 1).unwrap();
        assert!((r.lag(1) - 57.75 / 82.5).abs() < 1e-15);
        assert!((acf_oracle(&x, 1)[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn alternating_lag_one() {
        let x = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        assert!((acf(&x, 1).unwrap().lag(1) + 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn matches_oracle() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64).sin() + 0.01 * i as f64).collect();
        let fast = acf(&x, 30).unwrap();
        for (a, b) in fast.values().iter().zip(acf_oracle(&x, 30)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(acf(&[2.0; 10], 2), Err(Error::ZeroVariance));
        assert!(matches!(acf(&[1.0, 2.0], 2), Err(Error::TooShort { .. })));
    }

    #[test]
    fn pacf_lag_one_equals_acf() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos() + (i % 7) as f64).collect();
        assert_eq!(pacf(&x, 5).unwrap().lag(1), acf(&x, 5).unwrap().lag(1));
    }

    #[test]
    fn levinson_solves_yule_walker() {
        // AR(2) autocorrelations: rho1 = a/(1-b), rho_k = a rho_{k-1} + b rho_{k-2}.
        let (a, b) = (0.5, 0.3);
        let mut r = vec![a / (1.0 - b)];
        r.push(a * r[0] + b);
        for k in 2..6 {
            r.push(a * r[k - 1] + b * r[k - 2]);
        }
        let mut lev = Levinson::new(&r);
        lev.step().unwrap();
        let phi22 = lev.step().unwrap();
        assert!((phi22 - b).abs() < 1e-12);
        assert!((lev.coefficients()[0] - a).abs() < 1e-12);
        for _ in 2..6 {
            assert!(lev.step().unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_correlation_is_degenerate() {
        assert_eq!(
            pacf_from_acf(&AcfVector(vec![1.0, 1.0])),
            Err(Error::DegenerateRecursion { lag: 1 })
        );
    }

    #[test]
    fn sinusoid_seasonal_acf() {
        let f = 12;
        let x: Vec<f64> = (0..12 * 200)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / f as f64).sin())
            .collect();
        let c = correlation_features(&x, f).unwrap();
        assert!(c.seas_acf1 > 0.99, "{}", c.seas_acf1);
    }

    #[test]
    fn constant_differences_are_degenerate() {
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        match correlation_features(&x, 4) {
            Err(Error::Feature { stage, source }) => {
                assert_eq!(stage, "diff1_acf1");
                assert!(matches!(*source, Error::DegenerateInput(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
