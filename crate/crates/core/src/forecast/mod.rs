//! Inference from trained checkpoints: single steps, moving-window
//! rollouts, seasonal/annual aggregation, bilinear regridding and
//! ensemble-member inference.

mod aggregate;
mod ensemble;
mod output;
mod regrid;
mod rollout;
mod step;

pub use aggregate::{aggregate_complete, seasonal_annual_mean_inputs};
pub use ensemble::{ensemble_inference, EnsembleMember, EnsembleReport, EnsembleStampSummary};
pub use output::{read_forecast, write_forecast, ForecastManifest, ABSOLUTE_FILE, ANOMALY_FILE, FORECAST_MANIFEST};
pub use regrid::{bilinear_regrid, bilinear_upsample, bilinear_values, refined_grid};
pub use rollout::{block_forecasts, rollout, rollout_calls, single_step_forecasts, Feedback, RolloutRequest};
pub use step::{ForecastResult, Forecaster, StepOutput};
