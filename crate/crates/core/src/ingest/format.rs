//! Internal gridded file format: one file per variable (per split), a JSON
//! header describing grid, stamps, variable and units, then the values as
//! little-endian f32 in `time, lat, lon` row-major order. Missing values
//! are NaN.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::container;
use crate::data::{ClimatologyMeta, ClimatologyTable, GridSpec, MonthlyField, Stamp, VariableId};
use crate::error::{DuneError, Result};

pub const GRID_MAGIC: &[u8; 8] = b"DUNEGRD1";
pub const CLIMATOLOGY_MAGIC: &[u8; 8] = b"DUNECLM1";
pub const GRID_EXTENSION: &str = "dgrid";

#[derive(Debug, Serialize, Deserialize)]
struct GridFileHeader {
    format: String,
    version: u32,
    variable: VariableId,
    units: String,
    grid: GridSpec,
    /// `None` for time-invariant fields (exactly one record).
    stamps: Option<Vec<Stamp>>,
    layout: String,
    dtype: String,
    missing: String,
}

/// Writes same-variable, same-grid fields to one file.
pub fn write_grid_file(path: &Path, fields: &[MonthlyField]) -> Result<()> {
    let first = fields
        .first()
        .ok_or_else(|| DuneError::InvalidArgument("no fields to write".into()))?;
    for f in fields {
        first.grid.ensure_same(&f.grid, "grid file")?;
        if f.variable != first.variable {
            return Err(DuneError::InvalidArgument(format!(
                "mixed variables {} and {} in one file",
                first.variable, f.variable
            )));
        }
    }
    let stamps = if first.stamp.is_some() {
        Some(
            fields
                .iter()
                .map(MonthlyField::stamp_or_err)
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        if fields.len() != 1 {
            return Err(DuneError::InvalidArgument(
                "time-invariant files hold exactly one field".into(),
            ));
        }
        None
    };
    let header = GridFileHeader {
        format: "dune-grid".into(),
        version: 1,
        variable: first.variable,
        units: first.variable.units().into(),
        grid: (*first.grid).clone(),
        stamps,
        layout: "time,lat,lon row-major".into(),
        dtype: "f32le".into(),
        missing: "nan".into(),
    };
    container::write(path, GRID_MAGIC, &header, fields.iter().map(|f| f.values.as_slice()))
}

pub fn read_grid_file(path: &Path) -> Result<Vec<MonthlyField>> {
    let (header, payload): (GridFileHeader, _) = container::read(path, GRID_MAGIC)?;
    let corrupt = |reason: String| DuneError::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    if header.format != "dune-grid" || header.version != 1 || header.dtype != "f32le" {
        return Err(corrupt("unsupported format variant".into()));
    }
    let grid = Arc::new(header.grid);
    let n = grid.len();
    let records = header.stamps.as_ref().map_or(1, Vec::len);
    if payload.len() != records * n {
        return Err(corrupt(format!(
            "expected {} values, found {}",
            records * n,
            payload.len()
        )));
    }
    let stamps: Vec<Option<Stamp>> = match header.stamps {
        Some(s) => s.into_iter().map(Some).collect(),
        None => vec![None],
    };
    stamps
        .into_iter()
        .zip(payload.chunks_exact(n))
        .map(|(stamp, values)| MonthlyField::new(header.variable, stamp, grid.clone(), values.to_vec()))
        .collect()
}

/// All fields of one variable, sorted by stamp.
#[derive(Clone, Debug)]
pub struct MonthlySeries {
    pub variable: VariableId,
    pub fields: Vec<MonthlyField>,
}

impl MonthlySeries {
    pub fn stamps(&self) -> Vec<Stamp> {
        self.fields.iter().filter_map(|f| f.stamp).collect()
    }

    pub fn get(&self, stamp: Stamp) -> Option<&MonthlyField> {
        self.fields
            .binary_search_by(|f| f.stamp.cmp(&Some(stamp)))
            .ok()
            .map(|i| &self.fields[i])
    }
}

pub(crate) fn variable_file(dir: &Path, v: VariableId) -> PathBuf {
    dir.join(format!("{}.{GRID_EXTENSION}", v.name()))
}

/// Reads the requested variables from `path` and restricts them to the
/// inclusive `time_range`.
///
/// `path` may be a CF NetCDF-3 file (`.nc`), a directory of `<var>.dgrid`
/// files, or a directory of split sub-directories holding such files, in
/// which case the splits are concatenated. Within the time range every
/// stamp must be present.
pub fn read_monthly_dataset(
    path: &Path,
    variables: &[&str],
    time_range: Option<(Stamp, Stamp)>,
) -> Result<Vec<MonthlySeries>> {
    let ids = variables
        .iter()
        .map(|v| v.parse::<VariableId>())
        .collect::<Result<Vec<_>>>()?;
    let mut series = if path.extension().is_some_and(|e| e == "nc") {
        super::netcdf::read_netcdf(path, &ids)?
    } else {
        ids.iter()
            .map(|&v| read_variable_from_dir(path, v))
            .collect::<Result<Vec<_>>>()?
    };
    for s in &mut series {
        s.fields.sort_by_key(|f| f.stamp);
        if s.fields.windows(2).any(|w| w[0].stamp == w[1].stamp) {
            return Err(DuneError::Corrupt {
                path: path.to_path_buf(),
                reason: format!("duplicate stamps for {}", s.variable),
            });
        }
        if let Some(g) = s.fields.first().map(|f| f.grid.clone()) {
            for f in &s.fields {
                g.ensure_same(&f.grid, s.variable.name())?;
            }
        }
        if let Some((first, last)) = time_range {
            if s.fields.first().is_some_and(|f| f.stamp.is_some()) {
                s.fields.retain(|f| f.stamp.is_some_and(|t| t >= first && t <= last));
                let have = s.stamps();
                for (i, want) in Stamp::range(first, last).into_iter().enumerate() {
                    if have.get(i) != Some(&want) {
                        return Err(DuneError::MissingStamp(want));
                    }
                }
            }
        }
    }
    Ok(series)
}

fn read_variable_from_dir(dir: &Path, v: VariableId) -> Result<MonthlySeries> {
    let direct = variable_file(dir, v);
    if direct.exists() {
        return Ok(MonthlySeries {
            variable: v,
            fields: read_grid_file(&direct)?,
        });
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && variable_file(p, v).exists())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(DuneError::InvalidArgument(format!(
            "variable {v} not present under {}",
            dir.display()
        )));
    }
    let mut fields = Vec::new();
    for d in subdirs {
        fields.extend(read_grid_file(&variable_file(&d, v))?);
    }
    Ok(MonthlySeries { variable: v, fields })
}

pub fn write_climatology(path: &Path, table: &ClimatologyTable) -> Result<()> {
    container::write(path, CLIMATOLOGY_MAGIC, &table.meta(), table.all_grids())
}

pub fn read_climatology(path: &Path) -> Result<ClimatologyTable> {
    let (meta, payload): (ClimatologyMeta, Vec<f32>) = container::read(path, CLIMATOLOGY_MAGIC)?;
    let n = meta.grid.len();
    if n == 0 || payload.len() % n != 0 {
        return Err(DuneError::Corrupt {
            path: path.to_path_buf(),
            reason: "payload is not a whole number of grids".into(),
        });
    }
    ClimatologyTable::from_parts(meta, payload.chunks_exact(n).map(<[f32]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(grid: &Arc<GridSpec>, n: usize) -> Vec<MonthlyField> {
        (0..n)
            .map(|i| {
                let stamp = Stamp::month(1980, 1).offset(i as i64);
                let values = (0..grid.len()).map(|c| (i * 1000 + c) as f32 * 0.37).collect();
                MonthlyField::new(VariableId::T2m, Some(stamp), grid.clone(), values).unwrap()
            })
            .collect()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(GridSpec::regular(4, 8).unwrap());
        let fields = series(&g, 24);
        let p = dir.path().join("t2m.dgrid");
        write_grid_file(&p, &fields).unwrap();
        let back = read_grid_file(&p).unwrap();
        assert_eq!(back.len(), 24);
        for (a, b) in fields.iter().zip(&back) {
            assert_eq!(a.stamp, b.stamp);
            assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn range_selection_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(GridSpec::regular(4, 8).unwrap());
        let mut fields = series(&g, 24);
        write_grid_file(&variable_file(dir.path(), VariableId::T2m), &fields).unwrap();
        let out = read_monthly_dataset(
            dir.path(),
            &["t2m"],
            Some((Stamp::month(1980, 1), Stamp::month(1980, 12))),
        )
        .unwrap();
        assert_eq!(out[0].fields.len(), 12);
        assert_eq!(
            out[0].stamps(),
            Stamp::range(Stamp::month(1980, 1), Stamp::month(1980, 12))
        );

        assert!(matches!(
            read_monthly_dataset(dir.path(), &["q"], None),
            Err(DuneError::UnknownVariable(_))
        ));

        fields.remove(5);
        write_grid_file(&variable_file(dir.path(), VariableId::T2m), &fields).unwrap();
        assert!(matches!(
            read_monthly_dataset(dir.path(), &["t2m"], Some((Stamp::month(1980, 1), Stamp::month(1980, 12)))),
            Err(DuneError::MissingStamp(s)) if s == Stamp::month(1980, 6)
        ));
    }
}
