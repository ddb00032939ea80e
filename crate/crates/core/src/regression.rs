//! Small least-squares helpers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
}

/// Ordinary least squares `y = a + b x`; standard errors from the residual variance.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n != ys.len() || n < 3 {
        return Err(Error::InsufficientData(format!(
            "linear fit needs at least 3 paired points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let s2 = rss / (nf - 2.0);
    Ok(LinearFit {
        intercept,
        slope,
        intercept_se: (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        slope_se: (s2 / sxx).sqrt(),
    })
}

/// Weighted least-squares slope of `y = c x` with known per-point variances.
///
/// Returns `(c, se(c))` where `se = (sum x^2 / var)^(-1/2)`.
pub fn weighted_slope_through_origin(xs: &[f64], ys: &[f64], variances: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() != variances.len() || xs.is_empty() {
        return Err(Error::InsufficientData("weighted fit needs paired points".into()));
    }
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((x, y), v) in xs.iter().zip(ys).zip(variances) {
        let w = 1.0 / v;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData("weighted fit is degenerate".into()));
    }
    Ok((sxy / sxx, sxx.powf(-0.5)))
}
