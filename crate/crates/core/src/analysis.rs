//! Post-fit analysis: growth rates by differencing, pointwise confidence
//! bands, curve differences, and deviation-curve access.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimate::FitResult;
use crate::kalman::ComponentSeries;
use crate::models::Deviations;

/// Differenced growth-rate curve with its maximum. Rates are per grid step;
/// `step` is reported so callers can rescale to per-hour.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSummary {
    /// Times of the differenced values (from the second grid time on).
    pub times: Vec<f64>,
    /// `rate[j] = mean[j+1] - mean[j]`, one value per consecutive pair.
    pub rates: Vec<f64>,
    /// Grid spacing in hours.
    pub step: f64,
    pub max_rate: f64,
    /// Earliest time attaining `max_rate`.
    pub time_of_max: f64,
}

/// Difference the mean curve on its (uniform) grid. Errors when the grid
/// spacing varies by more than 1e-9 relative or fewer than two points
/// exist.
pub fn growth_rate(mean: &ComponentSeries) -> Result<RateSummary> {
    if mean.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: mean.len() });
    }
    let h = mean.times[1] - mean.times[0];
    for (j, w) in mean.times.windows(2).enumerate() {
        let hj = w[1] - w[0];
        if (hj - h).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(Error::GridNotUniform { index: j + 1 });
        }
    }
    let mut times = Vec::with_capacity(mean.len() - 1);
    let mut rates = Vec::with_capacity(mean.len() - 1);
    let mut max_rate = f64::NEG_INFINITY;
    let mut time_of_max = mean.times[0];
    for j in 1..mean.len() {
        let rate = mean.estimates[j] - mean.estimates[j - 1];
        times.push(mean.times[j]);
        rates.push(rate);
        if rate > max_rate {
            max_rate = rate;
            time_of_max = mean.times[j];
        }
    }
    Ok(RateSummary { times, rates, step: h, max_rate, time_of_max })
}

/// Pointwise confidence band around a component estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub times: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

/// `estimate +/- z(level) * sqrt(variance)` per time; `z(0.95) = 1.959964`.
pub fn confidence_band(c: &ComponentSeries, level: f64) -> Result<Band> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::LevelOutOfRange(level));
    }
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + level / 2.0);
    let mut lower = Vec::with_capacity(c.len());
    let mut upper = Vec::with_capacity(c.len());
    for j in 0..c.len() {
        let half = z * c.variances[j].sqrt();
        lower.push(c.estimates[j] - half);
        upper.push(c.estimates[j] + half);
    }
    Ok(Band { times: c.times.clone(), lower, upper, level })
}

/// Difference of two component curves on identical grids, with a pointwise
/// band. The variance adds the two pointwise variances, which treats the
/// inputs as independently fitted (correct when they come from separately
/// fitted groups; within-fit differences are correlated and out of scope).
pub fn curve_difference(
    a: &ComponentSeries,
    b: &ComponentSeries,
    level: f64,
) -> Result<(ComponentSeries, Band)> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} points", a.len(), b.len())));
    }
    for (ta, tb) in a.times.iter().zip(&b.times) {
        if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("time {ta} vs {tb}")));
        }
    }
    let diff = ComponentSeries {
        times: a.times.clone(),
        estimates: a.estimates.iter().zip(&b.estimates).map(|(x, y)| x - y).collect(),
        variances: a.variances.iter().zip(&b.variances).map(|(x, y)| x + y).collect(),
    };
    let band = confidence_band(&diff, level)?;
    Ok((diff, band))
}

/// The replicate deviation curves of an FME fit.
pub fn deviation_curves(fit: &FitResult) -> Result<Vec<(String, ComponentSeries)>> {
    if fit.spec.deviations != Deviations::RandomWalk {
        return Err(Error::NotFme);
    }
    Ok(fit.deviations.clone())
}
