//! Latitude-weighted RMSE and anomaly correlation over a region.
//!
//! Both weight cell `(j, k)` by `L(j)` renormalized over the region's
//! cells, so regional RMSE is a proper weighted mean.

use super::region::RegionMask;
use crate::data::LatWeights;
use crate::error::{DuneError, Result};

fn check(a: &[f32], b: &[f32], weights: &LatWeights, region: &RegionMask) -> Result<usize> {
    let n = region.mask.len();
    if a.len() != n || b.len() != n || weights.is_empty() || !n.is_multiple_of(weights.len()) {
        return Err(DuneError::Shape(format!(
            "fields of {} and {} cells, region of {n}, {} latitude rows",
            a.len(),
            b.len(),
            weights.len()
        )));
    }
    if region.count() == 0 {
        return Err(DuneError::EmptyRegion(region.name.clone()));
    }
    Ok(n / weights.len())
}

/// Weighted sums of `f(a, b)` and of the weights over region cells.
fn weighted_sum(
    a: &[f32],
    b: &[f32],
    weights: &LatWeights,
    region: &RegionMask,
    n_lon: usize,
    f: impl Fn(f64, f64) -> f64,
) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, &l) in weights.as_slice().iter().enumerate() {
        let row = j * n_lon..(j + 1) * n_lon;
        let mut row_sum = 0.0;
        let mut row_count = 0usize;
        for i in row {
            if region.mask[i] {
                row_sum += f(a[i] as f64, b[i] as f64);
                row_count += 1;
            }
        }
        num += l * row_sum;
        den += l * row_count as f64;
    }
    (num, den)
}

/// `sqrt( sum L(j) (f - t)^2 / sum L(j) )` over region cells.
pub fn rmse(forecast: &[f32], truth: &[f32], weights: &LatWeights, region: &RegionMask) -> Result<f64> {
    let n_lon = check(forecast, truth, weights, region)?;
    let (num, den) = weighted_sum(forecast, truth, weights, region, n_lon, |a, b| (a - b) * (a - b));
    if den <= 0.0 {
        return Err(DuneError::EmptyRegion(region.name.clone()));
    }
    Ok((num / den).sqrt())
}

/// Weighted cosine similarity of two anomaly fields; 0 when either is
/// identically zero over the region.
pub fn acc(forecast_anom: &[f32], truth_anom: &[f32], weights: &LatWeights, region: &RegionMask) -> Result<f64> {
    let n_lon = check(forecast_anom, truth_anom, weights, region)?;
    let (ft, _) = weighted_sum(forecast_anom, truth_anom, weights, region, n_lon, |a, b| a * b);
    let (ff, _) = weighted_sum(forecast_anom, truth_anom, weights, region, n_lon, |a, _| a * a);
    let (tt, _) = weighted_sum(forecast_anom, truth_anom, weights, region, n_lon, |_, b| b * b);
    if ff == 0.0 || tt == 0.0 {
        return Ok(0.0);
    }
    Ok((ft / (ff * tt).sqrt()).clamp(-1.0, 1.0))
}
