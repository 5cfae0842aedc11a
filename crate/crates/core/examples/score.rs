//! Scores the baselines by region and prints the summary table.

use dune::baselines::{baseline_forecasts, BaselineKind, MlrModel};
use dune::data::{build_climatology, Cadence, GridSpec};
use dune::ingest::{generate_synthetic_corpus, Dataset, Split, SyntheticConfig, DEFAULT_LSM_THRESHOLD};
use dune::train::{ExperimentConfig, PreparedData};
use dune::verify::{score_run, RegionKind, RegionMask, ScoreContext};

fn main() -> dune::Result<()> {
    let grid = GridSpec::regular(32, 64)?;
    let corpus = generate_synthetic_corpus(&grid, &SyntheticConfig::default())?;
    let ds = Dataset::from_synthetic(&corpus, DEFAULT_LSM_THRESHOLD)?;
    let prep = PreparedData::prepare(&ds, ExperimentConfig::synthetic(1))?;
    let targets = prep.config.splits.targets(Split::Test, Cadence::Monthly);
    // Tercile thresholds come from absolute temperatures over the same base.
    let percentiles = build_climatology(&ds.series(Cadence::Monthly)?, prep.config.climatology_base, true)?;

    let regions = [
        RegionKind::Global,
        RegionKind::GlobalLand,
        RegionKind::GlobalOcean,
        RegionKind::Us,
    ]
    .into_iter()
    .map(|k| RegionMask::standard(k, &prep.grid, &ds.constants.lsm, DEFAULT_LSM_THRESHOLD))
    .collect::<dune::Result<Vec<_>>>()?;
    let ctx = ScoreContext {
        climatology: &percentiles,
        acc_climatology: None,
        percentiles: Some(&percentiles),
        hss_coarsen: 1,
    };
    let mlr = MlrModel::fit(&prep.anomalies, prep.config.splits.train)?;
    let mut report = None;
    for kind in BaselineKind::ALL {
        let set = baseline_forecasts(kind, &prep.anomalies, &targets, &prep.climatology, Some(&mlr))?;
        let r = score_run(&set, &prep.anomalies, &regions, &ctx)?;
        match report.as_mut() {
            None => report = Some(r),
            Some(all) => all.merge(r),
        }
    }
    print!("{}", report.expect("at least one baseline").table());
    Ok(())
}
