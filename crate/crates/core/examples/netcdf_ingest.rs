//! Round trip through an ERA5-style packed NetCDF-3 file, then blending
//! T2m over land with SST over ocean.

use dune::data::{GridSpec, MonthlyField, VariableId};
use dune::ingest::{
    corpus_series, generate_synthetic_corpus, read_netcdf, write_netcdf, ConstantChannels, Dataset, Packing,
    SyntheticConfig, DEFAULT_LSM_THRESHOLD,
};

fn main() -> dune::Result<()> {
    let grid = GridSpec::regular(16, 32)?;
    let config = SyntheticConfig {
        years: 3,
        ..SyntheticConfig::default()
    };
    let corpus = generate_synthetic_corpus(&grid, &config)?;
    let dir = std::env::temp_dir().join("dune-netcdf-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("era5_like.nc");
    write_netcdf(&path, &corpus_series(&corpus), Packing::Short)?;
    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    let mut wanted = vec![VariableId::T2m, VariableId::Sst, VariableId::Tisr];
    wanted.extend(VariableId::CONSTANTS);
    let mut series = read_netcdf(&path, &wanted)?;
    let worst = series[0]
        .fields
        .iter()
        .zip(&corpus.t2m)
        .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()))
        .fold(0.0f32, f32::max);
    println!("t2m packing error at most {worst:.4} K");

    let constants: Vec<MonthlyField> = series.drain(3..).map(|s| s.fields[0].clone()).collect();
    let constants: [MonthlyField; 5] = constants.try_into().expect("five constant fields");
    let tisr = series.pop().expect("tisr").fields;
    let sst = series.pop().expect("sst").fields;
    let t2m = series.pop().expect("t2m").fields;
    let channels = ConstantChannels::from_tisr_series(constants, &tisr)?;
    let ds = Dataset::from_parts(&t2m, &sst, channels, DEFAULT_LSM_THRESHOLD)?;
    println!(
        "{} blended months, {} ocean cells fell back to T2m",
        ds.temperature.len(),
        ds.blend_fallbacks
    );
    Ok(())
}
