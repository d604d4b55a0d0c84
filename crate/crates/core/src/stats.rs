//! Least-squares fits and model comparison for the scaling experiments.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Residual sum of squares.
    pub rss: f64,
    pub n: usize,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len().min(ys.len());
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (xs[i] - mx, ys[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = (0..n).map(|i| (ys[i] - slope * xs[i] - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    LinearFit { slope, intercept, r2, rss, n }
}

/// Least squares through the origin, `y = c x`; returns `(c, rss)`.
pub fn proportional_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - c * x).powi(2)).sum();
    (c, rss)
}

/// Gaussian-likelihood AIC: `n ln(rss / n) + 2 k`.
pub fn aic(rss: f64, n: usize, params: usize) -> f64 {
    let nf = n as f64;
    nf * (rss.max(f64::MIN_POSITIVE) / nf).ln() + 2.0 * params as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let f = linear_fit(&xs, &ys);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let (c, rss) = proportional_fit(&xs, &xs.map(|x| 3.0 * x));
        assert!((c - 3.0).abs() < 1e-12 && rss < 1e-20);
    }

    #[test]
    fn aic_prefers_smaller_residual() {
        assert!(aic(0.1, 10, 1) < aic(1.0, 10, 1));
    }
}
