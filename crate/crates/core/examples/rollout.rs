//! Autoregressive twelve-month rollout from a saved checkpoint.
//!
//! Run `train_monthly` first, or pass a checkpoint path.

use std::path::PathBuf;

use dune::data::{GridSpec, Stamp};
use dune::forecast::{rollout, Feedback, Forecaster, RolloutRequest};
use dune::ingest::{generate_synthetic_corpus, Dataset, SyntheticConfig, DEFAULT_LSM_THRESHOLD};
use dune::net::Checkpoint;
use dune::train::{ExperimentConfig, PreparedData};

fn main() -> dune::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("dune-example.dckpt"));
    let ckpt = Checkpoint::load(&path)?;
    let grid = GridSpec::regular(ckpt.header.grid.n_lat(), ckpt.header.grid.n_lon())?;
    let corpus = generate_synthetic_corpus(&grid, &SyntheticConfig::default())?;
    let ds = Dataset::from_synthetic(&corpus, DEFAULT_LSM_THRESHOLD)?;
    let prep = PreparedData::prepare(&ds, ExperimentConfig::synthetic(ckpt.header.window))?;
    ckpt.check_stats(prep.builder.stats())?;

    let fc = Forecaster::new(ckpt, &ds.constants)?;
    let start = Stamp::month(2014, 1);
    for feedback in [Feedback::Forecast, Feedback::Truth] {
        let req = RolloutRequest {
            start,
            horizon: 12,
            feedback,
            keep_heads: false,
        };
        let out = rollout(&fc, &prep.anomalies, &req, Some(&prep.climatology))?;
        println!("feeding back {feedback:?}:");
        for r in &out {
            let truth = prep.anomaly(r.stamp)?;
            let w = prep.grid.latitude_weights();
            let region = dune::verify::RegionMask::global(&prep.grid);
            let e = dune::verify::rmse(&r.anomaly.values, &truth.values, &w, &region)?;
            println!("  {} lead {:>2}  rmse {e:.3} K", r.stamp, r.lead);
        }
    }
    Ok(())
}
