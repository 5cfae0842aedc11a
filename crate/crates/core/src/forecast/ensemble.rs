//! One checkpoint applied to several input datasets (ensemble members).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regrid::bilinear_regrid;

use super::rollout::single_step_forecasts;
use super::step::{ForecastResult, Forecaster};
use crate::data::{ClimatologyTable, MonthlyField, Stamp, VariableId};
use crate::error::{DuneError, Result};
use crate::verify::{rmse, RegionMask};

/// Anomaly series (K) of one member on the checkpoint grid; it provides
/// both the inputs and the truth the member is scored against.
#[derive(Clone, Debug)]
pub struct EnsembleMember {
    pub name: String,
    pub anomalies: Vec<MonthlyField>,
}

impl EnsembleMember {
    /// `base` plus independent Gaussian noise of standard deviation
    /// `amplitude` (K) at every finite cell; member `k` draws from
    /// `seed + k`.
    pub fn perturbed(name: impl Into<String>, base: &[MonthlyField], amplitude: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anomalies = base
            .iter()
            .map(|f| {
                let values = f
                    .values
                    .iter()
                    .map(|&v| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        if v.is_finite() {
                            (v as f64 + amplitude * e) as f32
                        } else {
                            v
                        }
                    })
                    .collect();
                f.with_values(values)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            name: name.into(),
            anomalies,
        })
    }

    /// `base` block-averaged by `factor`, then bilinearly interpolated back
    /// onto its own grid: a coarser dataset brought to the checkpoint grid.
    pub fn upsampled(name: impl Into<String>, base: &[MonthlyField], factor: usize) -> Result<Self> {
        let anomalies = base
            .iter()
            .map(|f| bilinear_regrid(&f.coarsen(factor)?, &f.grid))
            .collect::<Result<_>>()?;
        Ok(Self {
            name: name.into(),
            anomalies,
        })
    }
}

/// Per-stamp spread of member RMSE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStampSummary {
    pub stamp: Stamp,
    pub member_rmse: Vec<f64>,
    pub rmse_mean: f64,
    pub rmse_std: f64,
}

#[derive(Clone, Debug)]
pub struct EnsembleReport {
    pub members: Vec<String>,
    /// `[member][stamp]`.
    pub forecasts: Vec<Vec<ForecastResult>>,
    /// Gridpoint mean and population standard deviation over members.
    pub mean: Vec<MonthlyField>,
    pub std: Vec<MonthlyField>,
    pub summary: Vec<EnsembleStampSummary>,
    /// Member count times stamp count.
    pub samples: usize,
}

/// Running mean that is exact for identical inputs, then population
/// standard deviation about it.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut mean = 0.0;
    let mut n = 0.0;
    for v in values.clone() {
        n += 1.0;
        mean += (v - mean) / n;
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Lead-1 forecasts of `targets` for every member, their gridpoint mean
/// and spread, and each member's global RMSE against its own truth.
pub fn ensemble_inference(
    fc: &Forecaster,
    members: &[EnsembleMember],
    targets: &[Stamp],
    climatology: Option<&ClimatologyTable>,
) -> Result<EnsembleReport> {
    if members.is_empty() || targets.is_empty() {
        return Err(DuneError::InvalidArgument(
            "ensemble needs members and target stamps".into(),
        ));
    }
    for m in members {
        for f in &m.anomalies {
            fc.grid().ensure_same(&f.grid, &format!("member `{}`", m.name))?;
        }
    }
    let forecasts: Vec<Vec<ForecastResult>> = members
        .par_iter()
        .map(|m| single_step_forecasts(fc, &m.anomalies, targets, climatology))
        .collect::<Result<_>>()?;
    let grid = fc.grid().clone();
    let weights = grid.latitude_weights();
    let region = RegionMask::global(&grid);
    let mut mean = Vec::with_capacity(targets.len());
    let mut std = Vec::with_capacity(targets.len());
    let mut summary = Vec::with_capacity(targets.len());
    for (t, &stamp) in targets.iter().enumerate() {
        let mut m_vals = Vec::with_capacity(grid.len());
        let mut s_vals = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let (m, s) = mean_std(forecasts.iter().map(|f| f[t].anomaly.values[i] as f64));
            m_vals.push(m as f32);
            s_vals.push(s as f32);
        }
        mean.push(MonthlyField::new(
            VariableId::BlendedT,
            Some(stamp),
            grid.clone(),
            m_vals,
        )?);
        std.push(MonthlyField::new(
            VariableId::BlendedT,
            Some(stamp),
            grid.clone(),
            s_vals,
        )?);
        let member_rmse = members
            .iter()
            .zip(&forecasts)
            .map(|(m, f)| {
                let truth = m
                    .anomalies
                    .iter()
                    .find(|a| a.stamp == Some(stamp))
                    .ok_or(DuneError::MissingStamp(stamp))?;
                rmse(&f[t].anomaly.values, &truth.values, &weights, &region)
            })
            .collect::<Result<Vec<_>>>()?;
        let (rmse_mean, rmse_std) = mean_std(member_rmse.iter().copied());
        summary.push(EnsembleStampSummary {
            stamp,
            member_rmse,
            rmse_mean,
            rmse_std,
        });
    }
    Ok(EnsembleReport {
        members: members.iter().map(|m| m.name.clone()).collect(),
        samples: members.len() * targets.len(),
        forecasts,
        mean,
        std,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_values_have_zero_spread() {
        for v in [0.1, 287.123456789, -3.3e-7] {
            let (m, s) = mean_std(std::iter::repeat_n(v, 10));
            assert_eq!(m, v);
            assert_eq!(s, 0.0);
        }
        let (m, s) = mean_std([1.0, 3.0].into_iter());
        assert_eq!((m, s), (2.0, 1.0));
    }
}
