//! Per-month climatology, anomalies and tercile thresholds of a corpus.

use dune::data::{anomalize, build_climatology, deanomalize, Cadence, GridSpec, Stamp};
use dune::ingest::{generate_synthetic_corpus, Dataset, SyntheticConfig, DEFAULT_LSM_THRESHOLD};
use dune::verify::{categorize, Category};

fn main() -> dune::Result<()> {
    let grid = GridSpec::regular(16, 32)?;
    let corpus = generate_synthetic_corpus(&grid, &SyntheticConfig::default())?;
    let ds = Dataset::from_synthetic(&corpus, DEFAULT_LSM_THRESHOLD)?;
    let series = ds.series(Cadence::Monthly)?;
    let clim = build_climatology(&series, (1980, 2011), true)?;
    println!(
        "base {:?}, samples per month {:?}",
        clim.base_period(),
        clim.samples_per_slot()
    );

    let target = Stamp::month(2016, 7);
    let field = series
        .iter()
        .find(|f| f.stamp == Some(target))
        .expect("stamp in corpus");
    let anomaly = anomalize(field, &clim)?;
    let back = deanomalize(&anomaly, &clim)?;
    assert_eq!(back.values, field.values);
    let mean = anomaly.values.iter().map(|&v| v as f64).sum::<f64>() / anomaly.values.len() as f64;
    println!("{target}: mean anomaly {mean:+.3} K");

    // Terciles are thresholds on absolute temperature.
    let slot = target.slot();
    let cats = categorize(&field.values, clim.p33(slot).unwrap(), clim.p66(slot).unwrap())?;
    let count = |c: Category| cats.iter().filter(|&&x| x == c).count();
    println!(
        "{target}: {} below, {} near, {} above normal",
        count(Category::Below),
        count(Category::Near),
        count(Category::Above)
    );
    Ok(())
}
