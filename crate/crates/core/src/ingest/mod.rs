//! Reading gridded monthly means, SST/T2m blending, constant channels,
//! the synthetic corpus, input stacks and train/val/test splits.

mod blend;
mod constants;
mod format;
mod netcdf;
mod splits;
mod stack;
mod synthetic;

use std::path::Path;
use std::sync::Arc;

pub use blend::{blend_sst_t2m, Blended, DEFAULT_LSM_THRESHOLD};
pub use constants::ConstantChannels;
pub use format::{
    read_climatology, read_grid_file, read_monthly_dataset, write_climatology, write_grid_file, MonthlySeries,
    GRID_EXTENSION,
};
pub use netcdf::{read_netcdf, write_netcdf, Packing, STANDARD_GRAVITY};
pub use splits::{DataSource, DatasetManifest, Split, SplitConfig, DATASET_MANIFEST};
pub use stack::{
    assemble_input_stack, channel_count, check_window, fit_channel_stats, InputStack, StackBuilder, TisrAlignment,
    SUPPORTED_WINDOWS,
};
pub use synthetic::{
    daily_insolation, generate_synthetic_corpus, land_fraction, trend_component, SyntheticConfig, SyntheticCorpus,
};

use crate::data::{Cadence, GridSpec, MonthlyField, PoleRow, VariableId};
use crate::error::{DuneError, Result};

/// Directory used for stamps outside every split (e.g. lead-in years).
pub const OTHER_SPLIT_DIR: &str = "other";

/// Options applied while loading data onto the model grid.
#[derive(Clone, Copy, Debug)]
pub struct LoadOptions {
    pub lsm_threshold: f64,
    pub pole_row: PoleRow,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            lsm_threshold: DEFAULT_LSM_THRESHOLD,
            pole_row: PoleRow::default(),
        }
    }
}

/// Blended monthly surface temperature and constant channels on the model
/// grid.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub grid: Arc<GridSpec>,
    /// Contiguous, sorted monthly fields.
    pub temperature: Vec<MonthlyField>,
    pub constants: ConstantChannels,
    pub blend_fallbacks: usize,
}

impl Dataset {
    /// Builds a dataset from raw T2m/SST series (blending them) and the
    /// constant channels.
    pub fn from_parts(
        t2m: &[MonthlyField],
        sst: &[MonthlyField],
        constants: ConstantChannels,
        lsm_threshold: f64,
    ) -> Result<Self> {
        if t2m.len() != sst.len() {
            return Err(DuneError::Shape(format!(
                "{} t2m fields but {} sst fields",
                t2m.len(),
                sst.len()
            )));
        }
        let mut blend_fallbacks = 0;
        let temperature = t2m
            .iter()
            .zip(sst)
            .map(|(t, s)| {
                let b = blend_sst_t2m(t, s, &constants.lsm, lsm_threshold)?;
                blend_fallbacks += b.fallback_count;
                Ok(b.field)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_blended(temperature, constants, blend_fallbacks)
    }

    pub fn from_blended(
        mut temperature: Vec<MonthlyField>,
        constants: ConstantChannels,
        blend_fallbacks: usize,
    ) -> Result<Self> {
        temperature.sort_by_key(|f| f.stamp);
        for w in temperature.windows(2) {
            let (a, b) = (w[0].stamp_or_err()?, w[1].stamp_or_err()?);
            if b != a.next() {
                return Err(DuneError::MissingStamp(a.next()));
            }
        }
        for f in &temperature {
            constants.grid().ensure_same(&f.grid, "temperature")?;
            if f.stamp_or_err()?.cadence() != Cadence::Monthly {
                return Err(DuneError::InvalidArgument("dataset temperature must be monthly".into()));
            }
        }
        Ok(Self {
            grid: constants.grid().clone(),
            temperature,
            constants,
            blend_fallbacks,
        })
    }

    pub fn from_synthetic(corpus: &SyntheticCorpus, lsm_threshold: f64) -> Result<Self> {
        Self::from_parts(&corpus.t2m, &corpus.sst, corpus.constants.clone(), lsm_threshold)
    }

    /// Temperature series at `cadence`: the monthly fields, or means over
    /// every complete season or year.
    pub fn series(&self, cadence: Cadence) -> Result<Vec<MonthlyField>> {
        match cadence {
            Cadence::Monthly => Ok(self.temperature.clone()),
            _ => crate::forecast::aggregate_complete(&self.temperature, cadence),
        }
    }

    /// Drops a pole row (pole-inclusive grids only) so that the grid has an
    /// even number of rows.
    pub fn to_model_grid(self, pole: PoleRow) -> Result<Self> {
        let lat = self.grid.lat();
        let has_pole =
            lat.first().is_some_and(|l| (l - 90.0).abs() < 1e-9) || lat.last().is_some_and(|l| (l + 90.0).abs() < 1e-9);
        if !has_pole || self.grid.n_lat().is_multiple_of(2) {
            return Ok(self);
        }
        let (grid, offset) = self.grid.model_grid(pole)?;
        let grid = Arc::new(grid);
        let temperature = self
            .temperature
            .iter()
            .map(|f| f.select_rows(grid.clone(), offset))
            .collect::<Result<Vec<_>>>()?;
        let constants = self.constants.select_rows(&grid, offset)?;
        Ok(Self {
            grid,
            temperature,
            constants,
            blend_fallbacks: self.blend_fallbacks,
        })
    }
}

fn has_variable(path: &Path, v: VariableId) -> bool {
    if path.is_file() {
        return false;
    }
    format::variable_file(path, v).exists()
        || std::fs::read_dir(path).is_ok_and(|rd| {
            rd.filter_map(|e| e.ok())
                .any(|e| format::variable_file(&e.path(), v).exists())
        })
}

/// Loads a dataset written by `ingest` (blended temperature) or `synth`
/// (raw T2m and SST), or reads a CF NetCDF file directly.
pub fn load_dataset(path: &Path, opts: &LoadOptions) -> Result<Dataset> {
    let consts: Vec<&str> = VariableId::CONSTANTS.iter().map(|v| v.name()).collect();
    let mut constants = read_monthly_dataset(path, &consts, None)?;
    let constants: [MonthlyField; 5] = std::array::from_fn(|i| {
        std::mem::take(&mut constants[i].fields)
            .into_iter()
            .next()
            .expect("constant file holds one field")
    });
    let tisr = read_monthly_dataset(path, &["tisr"], None)?.remove(0).fields;
    let constants = ConstantChannels::from_tisr_series(constants, &tisr)?;
    let dataset = if has_variable(path, VariableId::BlendedT) {
        let t = read_monthly_dataset(path, &["blended_t"], None)?.remove(0).fields;
        Dataset::from_blended(t, constants, 0)?
    } else {
        let mut raw = read_monthly_dataset(path, &["t2m", "sst"], None)?;
        let sst = raw.pop().expect("two series").fields;
        let t2m = raw.pop().expect("two series").fields;
        Dataset::from_parts(&t2m, &sst, constants, opts.lsm_threshold)?
    };
    dataset.to_model_grid(opts.pole_row)
}

/// Writes time series split by `splits` into `<dir>/<split>/<var>.dgrid`
/// (stamps outside every split go to `other/`) and constants into
/// `<dir>/<var>.dgrid`.
pub fn write_split_series(dir: &Path, series: &[MonthlySeries], splits: &SplitConfig) -> Result<()> {
    for s in series {
        if s.fields.first().is_some_and(|f| f.stamp.is_none()) {
            write_grid_file(&format::variable_file(dir, s.variable), &s.fields)?;
            continue;
        }
        let mut buckets: Vec<(String, Vec<MonthlyField>)> = Vec::new();
        for f in &s.fields {
            let name = splits
                .split_of(f.stamp_or_err()?)
                .map_or(OTHER_SPLIT_DIR, Split::name)
                .to_string();
            match buckets.iter_mut().find(|(n, _)| *n == name) {
                Some((_, v)) => v.push(f.clone()),
                None => buckets.push((name, vec![f.clone()])),
            }
        }
        for (name, fields) in buckets {
            write_grid_file(&format::variable_file(&dir.join(name), s.variable), &fields)?;
        }
    }
    Ok(())
}

/// Series view of a synthetic corpus: t2m, sst, tisr and the constants.
pub fn corpus_series(corpus: &SyntheticCorpus) -> Vec<MonthlySeries> {
    let mut out = vec![
        MonthlySeries {
            variable: VariableId::T2m,
            fields: corpus.t2m.clone(),
        },
        MonthlySeries {
            variable: VariableId::Sst,
            fields: corpus.sst.clone(),
        },
        MonthlySeries {
            variable: VariableId::Tisr,
            fields: corpus.tisr.clone(),
        },
    ];
    for f in corpus.constants.ordered() {
        out.push(MonthlySeries {
            variable: f.variable,
            fields: vec![f.clone()],
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_round_trip_through_split_directories() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::regular(16, 32).unwrap();
        let cfg = SyntheticConfig {
            first_year: 2010,
            years: 4,
            ..Default::default()
        };
        let corpus = generate_synthetic_corpus(&g, &cfg).unwrap();
        let splits = SplitConfig {
            train: (2011, 2011),
            val: (2012, 2012),
            test: (2013, 2013),
        };
        write_split_series(dir.path(), &corpus_series(&corpus), &splits).unwrap();
        assert!(dir.path().join("other/t2m.dgrid").exists());
        assert!(dir.path().join("train/sst.dgrid").exists());
        let back = read_monthly_dataset(dir.path(), &["t2m"], None).unwrap();
        assert_eq!(back[0].fields.len(), 48);
        for (a, b) in corpus.t2m.iter().zip(&back[0].fields) {
            assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let ds = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        let direct = Dataset::from_synthetic(&corpus, DEFAULT_LSM_THRESHOLD).unwrap();
        assert_eq!(ds.temperature, direct.temperature);
        assert_eq!(ds.constants.tisr_cycle, direct.constants.tisr_cycle);
    }

    #[test]
    fn pole_row_dropped_for_pole_inclusive_grids() {
        let g = Arc::new(GridSpec::pole_inclusive(22.5).unwrap());
        assert_eq!(g.n_lat(), 9);
        let f = |v| MonthlyField::filled(v, None, g.clone(), 0.5);
        let cycle: Vec<MonthlyField> = (0..12).map(|_| f(VariableId::Tisr)).collect();
        let constants = ConstantChannels::new(VariableId::CONSTANTS.map(f), cycle).unwrap();
        let t: Vec<MonthlyField> = (1..=12)
            .map(|m| {
                MonthlyField::filled(
                    VariableId::BlendedT,
                    Some(crate::data::Stamp::month(2000, m)),
                    g.clone(),
                    280.0,
                )
            })
            .collect();
        let ds = Dataset::from_blended(t, constants, 0)
            .unwrap()
            .to_model_grid(PoleRow::DropSouth)
            .unwrap();
        assert_eq!(ds.grid.n_lat(), 8);
        assert_eq!(ds.grid.lat()[0], 90.0);
        assert_eq!(ds.constants.grid().n_lat(), 8);
    }
}
