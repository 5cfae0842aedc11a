//! Generates the seeded synthetic corpus and prints what the model sees.

use dune::data::GridSpec;
use dune::ingest::{generate_synthetic_corpus, Dataset, SyntheticConfig, DEFAULT_LSM_THRESHOLD};

fn main() -> dune::Result<()> {
    let grid = GridSpec::regular(32, 64)?;
    let config = SyntheticConfig::default();
    let corpus = generate_synthetic_corpus(&grid, &config)?;
    let ds = Dataset::from_synthetic(&corpus, DEFAULT_LSM_THRESHOLD)?;

    let first = &ds.temperature[0];
    let last = ds.temperature.last().expect("non-empty corpus");
    println!(
        "grid {}x{}, {} months",
        grid.n_lat(),
        grid.n_lon(),
        ds.temperature.len()
    );
    println!("span {} .. {}", first.stamp.unwrap(), last.stamp.unwrap());
    let land = ds
        .constants
        .lsm
        .values
        .iter()
        .filter(|&&v| v >= DEFAULT_LSM_THRESHOLD as f32)
        .count();
    println!("land cells {land} of {}", grid.len());
    let (lo, hi) = first
        .values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("first month blended temperature {lo:.1} .. {hi:.1} K");
    Ok(())
}
