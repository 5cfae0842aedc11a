//! Persistence and climatology reference forecasts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ClimatologyTable, MonthlyField, Stamp};
use crate::error::{DuneError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// The preceding month, season or year.
    PersistPriorStep,
    /// The same month or season one year earlier.
    PersistPriorYear,
    /// The climatological mean: a zero anomaly.
    Climatology,
    /// Per-gridpoint linear regression on a coarse grid.
    MultipleLinearRegression,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::PersistPriorStep,
        BaselineKind::PersistPriorYear,
        BaselineKind::Climatology,
        BaselineKind::MultipleLinearRegression,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::PersistPriorStep => "persist_prior_step",
            BaselineKind::PersistPriorYear => "persist_prior_year",
            BaselineKind::Climatology => "climatology",
            BaselineKind::MultipleLinearRegression => "mlr",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = DuneError;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| DuneError::InvalidArgument(format!("unknown baseline `{s}`")))
    }
}

/// The stamp a persistence forecast copies.
pub fn persistence_source(kind: BaselineKind, target: Stamp) -> Result<Stamp> {
    match kind {
        BaselineKind::PersistPriorStep => Ok(target.prev()),
        BaselineKind::PersistPriorYear => Ok(target.prior_year()),
        _ => Err(DuneError::InvalidArgument(format!(
            "{kind} is not a persistence baseline"
        ))),
    }
}

/// Copies the source anomaly verbatim, re-stamped to `target`.
pub fn persistence_forecast(kind: BaselineKind, history: &[MonthlyField], target: Stamp) -> Result<MonthlyField> {
    let source = persistence_source(kind, target)?;
    let f = history
        .iter()
        .find(|f| f.stamp == Some(source))
        .ok_or(DuneError::MissingStamp(source))?;
    let mut out = f.clone();
    out.stamp = Some(target);
    Ok(out)
}

/// The all-zero anomaly on the climatology grid.
pub fn climatology_forecast(clim: &ClimatologyTable, target: Stamp) -> Result<MonthlyField> {
    if target.cadence() != clim.cadence() {
        return Err(DuneError::InvalidArgument(format!(
            "{target} does not match a {} climatology",
            clim.cadence()
        )));
    }
    Ok(MonthlyField::filled(
        crate::data::VariableId::BlendedT,
        Some(target),
        clim.grid().clone(),
        0.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::data::{GridSpec, VariableId};

    fn history() -> Vec<MonthlyField> {
        let g = Arc::new(GridSpec::regular(2, 4).unwrap());
        Stamp::range(Stamp::month(2022, 1), Stamp::month(2023, 11))
            .into_iter()
            .enumerate()
            .map(|(i, s)| MonthlyField::filled(VariableId::BlendedT, Some(s), g.clone(), i as f32 * 0.1))
            .collect()
    }

    #[test]
    fn copies_source_stamp() {
        let h = history();
        let pm = persistence_forecast(BaselineKind::PersistPriorStep, &h, Stamp::month(2023, 12)).unwrap();
        assert_eq!(pm.values, h.last().unwrap().values);
        assert_eq!(pm.stamp, Some(Stamp::month(2023, 12)));
        let py = persistence_forecast(BaselineKind::PersistPriorYear, &h, Stamp::month(2023, 12)).unwrap();
        assert_eq!(py.values, h[11].values);
        assert!(matches!(
            persistence_forecast(BaselineKind::PersistPriorYear, &h, Stamp::month(2021, 6)),
            Err(DuneError::MissingStamp(_))
        ));
    }
}
