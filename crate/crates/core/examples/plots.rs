//! SVG figures: baseline RMSE panels and the global-mean temperature trend.

use dune::baselines::{baseline_forecasts, BaselineKind};
use dune::cli::plot::{global_mean_series, global_mean_trend, metric_panels, Metric};
use dune::data::{Cadence, GridSpec};
use dune::ingest::{generate_synthetic_corpus, Dataset, Split, SyntheticConfig, DEFAULT_LSM_THRESHOLD};
use dune::train::{ExperimentConfig, PreparedData};
use dune::verify::{score_run, RegionMask, ScoreContext};

fn main() -> dune::Result<()> {
    let grid = GridSpec::regular(32, 64)?;
    let corpus = generate_synthetic_corpus(&grid, &SyntheticConfig::default())?;
    let ds = Dataset::from_synthetic(&corpus, DEFAULT_LSM_THRESHOLD)?;
    let prep = PreparedData::prepare(&ds, ExperimentConfig::synthetic(1))?;
    let targets = prep.config.splits.targets(Split::Test, Cadence::Monthly);
    let dir = std::env::temp_dir().join("dune-plots");

    let global = RegionMask::global(&prep.grid);
    let ctx = ScoreContext::new(&prep.climatology);
    let mut report = None;
    for kind in [
        BaselineKind::Climatology,
        BaselineKind::PersistPriorStep,
        BaselineKind::PersistPriorYear,
    ] {
        let set = baseline_forecasts(kind, &prep.anomalies, &targets, &prep.climatology, None)?;
        let r = score_run(&set, &prep.anomalies, std::slice::from_ref(&global), &ctx)?;
        match report.as_mut() {
            None => report = Some(r),
            Some(all) => all.merge(r),
        }
    }
    let out = metric_panels(
        &report.expect("scored"),
        Metric::Rmse,
        &global.name,
        &dir.join("rmse.svg"),
    )?;
    println!("{} panels -> {}", out.panels, out.path.display());

    let series = global_mean_series(&ds.series(Cadence::Monthly)?)?;
    let (first, last) = (series[0].1, series[series.len() - 1].1);
    let out = global_mean_trend(&[("synthetic".to_string(), series)], &dir.join("trend.svg"))?;
    println!("global mean {first:.2} K -> {last:.2} K, figure {}", out.path.display());
    Ok(())
}
