//! Reference forecasts DUNE is compared against.

mod mlr;
mod persistence;

pub use mlr::{least_squares, mlr_features, MlrModel, MLR_RESOLUTION};
pub use persistence::{climatology_forecast, persistence_forecast, persistence_source, BaselineKind};

use crate::data::{ClimatologyTable, MonthlyField, Stamp};
use crate::error::{DuneError, Result};
use crate::verify::ForecastSet;

/// Lead-1 anomaly forecasts of `targets` by `kind`, ready for scoring.
/// `mlr` is required for [`BaselineKind::MultipleLinearRegression`].
pub fn baseline_forecasts(
    kind: BaselineKind,
    history: &[MonthlyField],
    targets: &[Stamp],
    climatology: &ClimatologyTable,
    mlr: Option<&MlrModel>,
) -> Result<ForecastSet> {
    let fields = targets
        .iter()
        .map(|&t| match kind {
            BaselineKind::PersistPriorStep | BaselineKind::PersistPriorYear => persistence_forecast(kind, history, t),
            BaselineKind::Climatology => climatology_forecast(climatology, t),
            BaselineKind::MultipleLinearRegression => {
                let model =
                    mlr.ok_or_else(|| DuneError::InvalidArgument("MLR baseline needs a fitted model".into()))?;
                let prior = history
                    .iter()
                    .find(|f| f.stamp == Some(t.prev()))
                    .ok_or(DuneError::MissingStamp(t.prev()))?;
                model.forecast(prior, t)
            }
        })
        .collect::<Result<_>>()?;
    Ok(ForecastSet {
        method: kind.name().to_string(),
        horizon: 1,
        fields,
    })
}
