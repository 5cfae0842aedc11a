//! Climatology, persistence and regression forecasts of the test years.

use dune::baselines::{baseline_forecasts, BaselineKind, MlrModel};
use dune::data::{Cadence, GridSpec};
use dune::ingest::{generate_synthetic_corpus, Dataset, Split, SyntheticConfig, DEFAULT_LSM_THRESHOLD};
use dune::train::{ExperimentConfig, PreparedData};
use dune::verify::{rmse, RegionMask};

fn main() -> dune::Result<()> {
    let grid = GridSpec::regular(32, 64)?;
    let corpus = generate_synthetic_corpus(&grid, &SyntheticConfig::default())?;
    let ds = Dataset::from_synthetic(&corpus, DEFAULT_LSM_THRESHOLD)?;
    let prep = PreparedData::prepare(&ds, ExperimentConfig::synthetic(1))?;
    let targets = prep.config.splits.targets(Split::Test, Cadence::Monthly);

    let mlr = MlrModel::fit(&prep.anomalies, prep.config.splits.train)?;
    println!(
        "regression on a {}x coarser grid, {} fallback cells",
        mlr.factor, mlr.fallback_count
    );

    let w = prep.grid.latitude_weights();
    let global = RegionMask::global(&prep.grid);
    for kind in BaselineKind::ALL {
        let set = baseline_forecasts(kind, &prep.anomalies, &targets, &prep.climatology, Some(&mlr))?;
        let mut total = 0.0;
        for f in &set.fields {
            total += rmse(&f.values, &prep.anomaly(f.stamp_or_err()?)?.values, &w, &global)?;
        }
        println!(
            "{:<20} mean rmse {:.3} K over {} months",
            set.method,
            total / set.fields.len() as f64,
            set.fields.len()
        );
    }
    Ok(())
}
