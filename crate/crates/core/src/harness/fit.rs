use serde::{Deserialize, Serialize};

use super::sweep::SweepRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XAxis {
    Epsilon,
    Delta,
    EpsilonOverDelta,
}

impl XAxis {
    pub fn of(self, r: &SweepRecord) -> f64 {
        match self {
            XAxis::Epsilon => r.epsilon,
            XAxis::Delta => r.delta,
            XAxis::EpsilonOverDelta => r.epsilon / r.delta,
        }
    }
}

/// `log10 y ≈ intercept + slope · log10 x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Points dropped for a non-positive or non-finite value.
    pub excluded: usize,
}

impl RateFit {
    /// `C` in `y ≈ C x^slope`.
    pub fn constant(&self) -> f64 {
        10f64.powf(self.intercept)
    }
}

/// Fits the successful rows of one quantity against `x_axis`.
pub fn fit_rate(records: &[SweepRecord], x_axis: XAxis) -> Result<RateFit> {
    if let Some(r) = records.iter().find(|r| r.quantity != records[0].quantity || r.norm != records[0].norm) {
        return Err(Error::Validation(format!(
            "records mix {}/{} with {}/{}",
            records[0].quantity, records[0].norm, r.quantity, r.norm
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = records.iter().filter(|r| r.is_ok()).map(|r| (x_axis.of(r), r.value)).unzip();
    fit_points(&xs, &ys)
}

/// Least squares in log10–log10 over the points with `x, y > 0`.
///
/// Values enter as `log10(y / y₀)` relative to the first kept point, so
/// multiplying every `y` by a power of two leaves the slope bit-identical.
pub fn fit_points(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} abscissae for {} values", xs.len(), ys.len())));
    }
    let kept: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let excluded = xs.len() - kept.len();
    if kept.len() < 3 {
        return Err(Error::Validation(format!("rate fit needs at least 3 positive points, got {}", kept.len())));
    }
    let (x0, y0) = kept[0];
    let lx: Vec<f64> = kept.iter().map(|(x, _)| (x / x0).log10()).collect();
    let ly: Vec<f64> = kept.iter().map(|(_, y)| (y / y0).log10()).collect();
    let n = kept.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Validation("rate fit needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    // Back to absolute logs: log y = log y0 + my + slope (log x - log x0 - mx).
    let intercept = y0.log10() + my - slope * (x0.log10() + mx);
    Ok(RateFit { slope, intercept, r_squared, n_points: kept.len(), excluded })
}
