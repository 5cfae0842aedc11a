//! Autoregressive moving-window forecasts.
//!
//! With window W, months `1..=W` produce `W+1..=2W`; the next call consumes
//! those forecasts (or, with [`Feedback::Truth`], the observations) and so
//! on until `horizon` stamps are out. Insolation and constants always come
//! from the deterministic channels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::step::{ForecastResult, Forecaster};
use crate::data::{ClimatologyTable, MonthlyField, Stamp};
use crate::error::{DuneError, Result};

/// What the next window is built from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    /// Previous forecasts.
    #[default]
    Forecast,
    /// Observed anomalies (teacher forcing).
    Truth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolloutRequest {
    /// First forecast stamp; the W stamps before it must be observed.
    pub start: Stamp,
    pub horizon: usize,
    pub feedback: Feedback,
    pub keep_heads: bool,
}

/// Number of network calls a rollout makes.
pub fn rollout_calls(horizon: usize, window: usize) -> usize {
    horizon.div_ceil(window)
}

/// Runs the rollout over `observed` anomalies (K) at the checkpoint cadence.
pub fn rollout(
    fc: &Forecaster,
    observed: &[MonthlyField],
    request: &RolloutRequest,
    climatology: Option<&ClimatologyTable>,
) -> Result<Vec<ForecastResult>> {
    if request.horizon == 0 {
        return Err(DuneError::InvalidArgument("rollout horizon must be positive".into()));
    }
    let cadence = fc.checkpoint().header.cadence;
    if request.start.cadence() != cadence {
        return Err(DuneError::InvalidArgument(format!(
            "start {} is not a {cadence} stamp",
            request.start
        )));
    }
    let truth: BTreeMap<Stamp, &[f32]> = observed
        .iter()
        .map(|f| Ok((f.stamp_or_err()?, f.values.as_slice())))
        .collect::<Result<_>>()?;
    for f in observed {
        fc.grid().ensure_same(&f.grid, "observed anomalies")?;
    }
    let w = fc.window();
    let lookup = |s: Stamp| truth.get(&s).map(|v| v.to_vec()).ok_or(DuneError::MissingStamp(s));
    let mut window: Vec<Vec<f32>> = (1..=w as i64)
        .rev()
        .map(|i| lookup(request.start.offset(-i)))
        .collect::<Result<_>>()?;
    let id = fc.checkpoint().id();
    let mut out = Vec::with_capacity(request.horizon);
    let mut last = request.start.prev();
    for _ in 0..rollout_calls(request.horizon, w) {
        let inputs: Vec<&[f32]> = window.iter().map(Vec::as_slice).collect();
        let step = fc.forecast_step(&inputs, last, request.keep_heads)?;
        for (i, (&stamp, anom)) in step.stamps.iter().zip(&step.anomalies).enumerate() {
            if out.len() == request.horizon {
                break;
            }
            let lead = (stamp.ordinal() - request.start.ordinal()) as usize + 1;
            let mut r = ForecastResult::new(stamp, lead, anom.clone(), fc.grid(), climatology, id.clone())?;
            r.heads = step
                .heads
                .as_ref()
                .map(|h| h.iter().map(|head| head[i].clone()).collect());
            out.push(r);
        }
        window = match request.feedback {
            Feedback::Forecast => step.anomalies,
            Feedback::Truth => step.stamps.iter().map(|&s| lookup(s)).collect::<Result<_>>()?,
        };
        last = last.offset(w as i64);
        if out.len() == request.horizon {
            break;
        }
    }
    Ok(out)
}

/// Lead-1 forecast of every stamp in `targets`, each from the W observed
/// stamps before it.
pub fn single_step_forecasts(
    fc: &Forecaster,
    observed: &[MonthlyField],
    targets: &[Stamp],
    climatology: Option<&ClimatologyTable>,
) -> Result<Vec<ForecastResult>> {
    use rayon::prelude::*;
    targets
        .par_iter()
        .map(|&t| {
            let r = rollout(
                fc,
                observed,
                &RolloutRequest {
                    start: t,
                    horizon: 1,
                    feedback: Feedback::Forecast,
                    keep_heads: false,
                },
                climatology,
            )?;
            Ok(r.into_iter().next().expect("horizon 1"))
        })
        .collect()
}

/// Moving-window forecasts covering every stamp of `targets` once: the
/// targets are cut into consecutive blocks of W stamps and each block is
/// one network call on the W observed stamps before it. Leads run 1..=W
/// within a block.
pub fn block_forecasts(
    fc: &Forecaster,
    observed: &[MonthlyField],
    targets: &[Stamp],
    climatology: Option<&ClimatologyTable>,
) -> Result<Vec<ForecastResult>> {
    use rayon::prelude::*;
    let w = fc.window();
    for pair in targets.windows(2) {
        if pair[1] != pair[0].next() {
            return Err(DuneError::InvalidArgument(format!(
                "block forecasts need consecutive targets, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    let blocks: Vec<Vec<ForecastResult>> = targets
        .par_chunks(w)
        .map(|block| {
            rollout(
                fc,
                observed,
                &RolloutRequest {
                    start: block[0],
                    horizon: block.len(),
                    feedback: Feedback::Forecast,
                    keep_heads: false,
                },
                climatology,
            )
        })
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}
