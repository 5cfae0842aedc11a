//! Forecast files: anomaly and absolute grids plus a JSON manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::step::ForecastResult;
use crate::data::{Cadence, MonthlyField, Stamp};
use crate::error::{DuneError, Result};
use crate::ingest::{read_grid_file, write_grid_file};

pub const FORECAST_MANIFEST: &str = "forecast.json";
pub const ANOMALY_FILE: &str = "anomaly.dgrid";
pub const ABSOLUTE_FILE: &str = "absolute.dgrid";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastManifest {
    /// Source of the forecasts, e.g. `dune` or a baseline name.
    pub method: String,
    pub mode: Cadence,
    pub window: usize,
    pub checkpoint_id: Option<String>,
    pub stamps: Vec<Stamp>,
    pub leads: Vec<usize>,
    pub anomaly_path: PathBuf,
    pub absolute_path: Option<PathBuf>,
    /// Free-form request parameters.
    pub request: serde_json::Value,
}

/// Writes `results` under `dir` and returns the manifest (also written).
pub fn write_forecast(
    dir: &Path,
    method: &str,
    mode: Cadence,
    window: usize,
    results: &[ForecastResult],
    request: serde_json::Value,
) -> Result<ForecastManifest> {
    fs::create_dir_all(dir)?;
    let anomalies: Vec<MonthlyField> = results.iter().map(|r| r.anomaly.clone()).collect();
    write_grid_file(&dir.join(ANOMALY_FILE), &anomalies)?;
    let absolute: Option<Vec<MonthlyField>> = results.iter().map(|r| r.absolute.clone()).collect();
    let absolute_path = match absolute {
        Some(a) if !a.is_empty() => {
            write_grid_file(&dir.join(ABSOLUTE_FILE), &a)?;
            Some(PathBuf::from(ABSOLUTE_FILE))
        }
        _ => None,
    };
    let manifest = ForecastManifest {
        method: method.to_string(),
        mode,
        window,
        checkpoint_id: results
            .first()
            .map(|r| r.checkpoint_id.clone())
            .filter(|s| !s.is_empty()),
        stamps: results.iter().map(|r| r.stamp).collect(),
        leads: results.iter().map(|r| r.lead).collect(),
        anomaly_path: PathBuf::from(ANOMALY_FILE),
        absolute_path,
        request,
    };
    fs::write(dir.join(FORECAST_MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Manifest and anomaly fields of a forecast directory.
pub fn read_forecast(dir: &Path) -> Result<(ForecastManifest, Vec<MonthlyField>)> {
    let path = dir.join(FORECAST_MANIFEST);
    let manifest: ForecastManifest = serde_json::from_slice(&fs::read(&path)?).map_err(|e| DuneError::Corrupt {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let fields = read_grid_file(&dir.join(&manifest.anomaly_path))?;
    Ok((manifest, fields))
}
