//! Autoregressive spectral density and spectral entropy.

use std::f64::consts::PI;

use crate::correlation::{acf, Levinson};
use crate::error::{Error, Result};
use crate::stats;

/// Number of frequencies on the `(0, pi]` grid.
pub const DEFAULT_GRID_SIZE: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    pub coefficients: Vec<f64>,
    pub innovation_variance: f64,
}

impl ArModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// `sigma^2 / (2 pi |1 - sum_j phi_j e^{-i j lambda}|^2)`.
    pub fn spectral_density(&self, lambda: f64) -> f64 {
        let (mut re, mut im) = (1.0, 0.0);
        for (j, phi) in self.coefficients.iter().enumerate() {
            let arg = (j + 1) as f64 * lambda;
            re -= phi * arg.cos();
            im += phi * arg.sin();
        }
        self.innovation_variance / (2.0 * PI * (re * re + im * im))
    }
}

/// `floor(min(n - 1, 10 log10 n))`.
pub fn default_max_order(n: usize) -> usize {
    if n < 2 {
        return 0;
    }
    let by_log = (10.0 * (n as f64).log10()).floor() as usize;
    by_log.min(n - 1)
}

/// Yule-Walker fits of orders `0..=max_order`; keeps the order with the
/// smallest `n ln(sigma^2) + 2 p`. Ties go to the lower order.
pub fn fit_ar(values: &[f64], max_order: usize) -> Result<ArModel> {
    let n = values.len();
    if n < max_order + 2 {
        return Err(Error::TooShort {
            needed: max_order + 2,
            got: n,
        });
    }
    if stats::is_constant(values) {
        return Err(Error::ZeroVariance);
    }
    let gamma0 = stats::sum_sq_dev(values) / n as f64;
    if gamma0 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let aic = |variance: f64, order: usize| n as f64 * variance.ln() + 2.0 * order as f64;
    let mut best = ArModel {
        coefficients: Vec::new(),
        innovation_variance: gamma0,
    };
    if max_order == 0 {
        return Ok(best);
    }
    let mut best_aic = aic(gamma0, 0);
    let r = acf(values, max_order)?;
    let mut lev = Levinson::new(r.values());
    for order in 1..=max_order {
        if lev.step().is_err() {
            // The recursion cannot go further; keep the best order so far.
            break;
        }
        let variance = gamma0 * lev.variance();
        let a = aic(variance, order);
        if a < best_aic {
            best_aic = a;
            best = ArModel {
                coefficients: lev.coefficients().to_vec(),
                innovation_variance: variance,
            };
        }
    }
    Ok(best)
}

/// AR spectral density on `lambda_j = pi j / grid`, `j = 1..=grid`,
/// normalized to sum to one.
pub fn normalized_density(model: &ArModel, grid: usize) -> Vec<f64> {
    let f: Vec<f64> = (1..=grid)
        .map(|j| model.spectral_density(PI * j as f64 / grid as f64))
        .collect();
    let total: f64 = f.iter().sum();
    f.into_iter().map(|v| v / total).collect()
}

/// Shannon entropy of the normalized density divided by `ln grid`.
/// An order-0 fit is a flat spectrum and returns exactly 1.
pub fn entropy_of_model(model: &ArModel, grid: usize) -> f64 {
    if model.order() == 0 {
        return 1.0;
    }
    let p = normalized_density(model, grid);
    let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|v| -v * v.ln()).sum();
    (h / (grid as f64).ln()).clamp(f64::MIN_POSITIVE, 1.0)
}

pub fn spectral_entropy(values: &[f64]) -> Result<f64> {
    let model = fit_ar(values, default_max_order(values.len()))?;
    Ok(entropy_of_model(&model, DEFAULT_GRID_SIZE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_order_default() {
        assert_eq!(default_max_order(1000), 30);
        assert_eq!(default_max_order(5), 4);
        assert_eq!(default_max_order(16), 12);
    }

    #[test]
    fn constant_is_zero_variance() {
        assert_eq!(fit_ar(&[3.0; 50], 5), Err(Error::ZeroVariance));
    }

    #[test]
    fn max_order_zero_is_flat() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).sin()).collect();
        let m = fit_ar(&x, 0).unwrap();
        assert_eq!(m.order(), 0);
        assert_eq!(entropy_of_model(&m, 512), 1.0);
    }

    #[test]
    fn density_normalizes() {
        let m = ArModel {
            coefficients: vec![0.6, -0.2],
            innovation_variance: 2.0,
        };
        let p = normalized_density(&m, 512);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let e = entropy_of_model(&m, 512);
        assert!(e > 0.0 && e < 1.0);
    }

    #[test]
    fn sinusoid_is_forecastable() {
        // Deterministic jitter keeps the fit away from an exact AR(2) root.
        let x: Vec<f64> = (0..2000)
            .map(|i| (2.0 * PI * i as f64 / 25.0).sin() + 1e-3 * ((i * 7919 % 1000) as f64 / 1000.0 - 0.5))
            .collect();
        assert!(spectral_entropy(&x).unwrap() < 0.3);
    }
}
