//! CF-convention NetCDF-3 reader (and a small writer used to produce
//! reanalysis-shaped files from in-memory fields).
//!
//! Handles `latitude`/`lat`, `longitude`/`lon` and `time`/`valid_time`
//! coordinate names, `scale_factor`/`add_offset` packing, `_FillValue` and
//! `missing_value`, `<unit> since <date>` time axes, ascending latitude
//! (flipped to north to south) and longitudes in `[-180, 180)` (rolled to
//! `[0, 360)`). Orography is stored as geopotential and divided by g.

use std::path::Path;
use std::sync::Arc;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use netcdf3::{DataSet, DataVector, FileReader, FileWriter, Version};

use super::format::MonthlySeries;
use crate::data::{GridSpec, MonthlyField, Stamp, VariableId};
use crate::error::{DuneError, Result};

/// Standard gravity, converting geopotential (m² s⁻²) to height (m).
pub const STANDARD_GRAVITY: f64 = 9.80665;

const LAT_NAMES: [&str; 2] = ["latitude", "lat"];
const LON_NAMES: [&str; 2] = ["longitude", "lon"];
const TIME_NAMES: [&str; 2] = ["time", "valid_time"];

fn nc_err(path: &Path, reason: impl Into<String>) -> DuneError {
    DuneError::NetCdf {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn to_f64(v: DataVector) -> Vec<f64> {
    match v {
        DataVector::I8(x) => x.into_iter().map(f64::from).collect(),
        DataVector::U8(x) => x.into_iter().map(f64::from).collect(),
        DataVector::I16(x) => x.into_iter().map(f64::from).collect(),
        DataVector::I32(x) => x.into_iter().map(f64::from).collect(),
        DataVector::F32(x) => x.into_iter().map(f64::from).collect(),
        DataVector::F64(x) => x,
    }
}

fn attr_values(ds: &DataSet, var: &str, name: &str) -> Vec<f64> {
    let Some(a) = ds.get_var_attr(var, name) else {
        return Vec::new();
    };
    a.get_f64()
        .map(|x| x.to_vec())
        .or_else(|| a.get_f32().map(|x| x.iter().map(|&v| v as f64).collect()))
        .or_else(|| a.get_i32().map(|x| x.iter().map(|&v| v as f64).collect()))
        .or_else(|| a.get_i16().map(|x| x.iter().map(|&v| v as f64).collect()))
        .or_else(|| a.get_i8().map(|x| x.iter().map(|&v| v as f64).collect()))
        .unwrap_or_default()
}

fn attr_f64(ds: &DataSet, var: &str, name: &str) -> Option<f64> {
    attr_values(ds, var, name).first().copied()
}

fn find_name<'a>(names: &[String], candidates: &[&'a str]) -> Option<&'a str> {
    candidates.iter().copied().find(|c| names.iter().any(|n| n == c))
}

/// Parses CF `"<unit> since <reference>"` and converts `values` to months.
fn decode_time(path: &Path, units: &str, values: &[f64]) -> Result<Vec<Stamp>> {
    let (unit, reference) = units
        .split_once(" since ")
        .ok_or_else(|| nc_err(path, format!("unsupported time units `{units}`")))?;
    let reference = reference.trim();
    let date_part = reference.split([' ', 'T']).next().unwrap_or(reference);
    let base = NaiveDate::parse_from_str(date_part, "%Y-%m-%d")
        .map_err(|e| nc_err(path, format!("bad reference date `{reference}`: {e}")))?
        .and_hms_opt(0, 0, 0)
        .expect("midnight");
    let seconds_per_unit = match unit.trim() {
        "seconds" | "second" | "s" => 1.0,
        "minutes" | "minute" => 60.0,
        "hours" | "hour" | "h" => 3600.0,
        "days" | "day" | "d" => 86400.0,
        other => return Err(nc_err(path, format!("unsupported time unit `{other}`"))),
    };
    values
        .iter()
        .map(|&v| {
            let t: NaiveDateTime = base + Duration::milliseconds((v * seconds_per_unit * 1000.0).round() as i64);
            Ok(Stamp::month(t.year(), t.month() as u8))
        })
        .collect()
}

/// Index permutation taking source lon order to ascending `[0, 360)`.
fn lon_order(lon: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let wrapped: Vec<f64> = lon.iter().map(|l| l.rem_euclid(360.0)).collect();
    let mut order: Vec<usize> = (0..lon.len()).collect();
    order.sort_by(|&a, &b| wrapped[a].total_cmp(&wrapped[b]));
    (order.iter().map(|&i| wrapped[i]).collect(), order)
}

struct VarMeta {
    variable: VariableId,
    name: String,
    dims: Vec<String>,
    scale: f64,
    offset: f64,
    fills: Vec<f64>,
}

/// Reads the requested variables of a CF NetCDF-3 file. Constant fields
/// take the first time step when stored with a time axis.
pub fn read_netcdf(path: &Path, variables: &[VariableId]) -> Result<Vec<MonthlySeries>> {
    let mut reader = FileReader::open(path).map_err(|e| nc_err(path, format!("{e}")))?;
    let (lat_name, lon_name, time_name, time_units, metas) = {
        let ds = reader.data_set();
        let dim_names = ds.dim_names();
        let lat_name = find_name(&dim_names, &LAT_NAMES).ok_or_else(|| nc_err(path, "no latitude dimension"))?;
        let lon_name = find_name(&dim_names, &LON_NAMES).ok_or_else(|| nc_err(path, "no longitude dimension"))?;
        let time_name = find_name(&dim_names, &TIME_NAMES).filter(|t| ds.has_var(t));
        let time_units = time_name.and_then(|t| ds.get_var_attr_as_string(t, "units"));
        let metas = variables
            .iter()
            .map(|&v| {
                let var = ds
                    .get_var(v.source_name())
                    .or_else(|| ds.get_var(v.name()))
                    .ok_or_else(|| DuneError::UnknownVariable(v.name().to_string()))?;
                let name = var.name().to_string();
                Ok(VarMeta {
                    variable: v,
                    dims: var.dim_names(),
                    scale: attr_f64(ds, &name, "scale_factor").unwrap_or(1.0),
                    offset: attr_f64(ds, &name, "add_offset").unwrap_or(0.0),
                    fills: ["_FillValue", "missing_value"]
                        .iter()
                        .flat_map(|a| attr_values(ds, &name, a))
                        .collect(),
                    name,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        (lat_name, lon_name, time_name, time_units, metas)
    };

    let read_axis = |reader: &mut FileReader, name: &str| -> Result<Vec<f64>> {
        reader
            .read_var(name)
            .map(to_f64)
            .map_err(|e| nc_err(path, format!("reading `{name}`: {e}")))
    };
    let lat_src = read_axis(&mut reader, lat_name)?;
    let lon_src = read_axis(&mut reader, lon_name)?;
    let flip = lat_src.len() > 1 && lat_src[0] < lat_src[1];
    let lat: Vec<f64> = if flip {
        lat_src.iter().rev().copied().collect()
    } else {
        lat_src
    };
    let (lon, lon_perm) = lon_order(&lon_src);
    let grid = Arc::new(GridSpec::from_axes(lat, lon)?);
    let (n_lat, n_lon) = (grid.n_lat(), grid.n_lon());

    let stamps = match time_name {
        Some(t) => {
            let units = time_units.ok_or_else(|| nc_err(path, "time variable has no units"))?;
            let raw = read_axis(&mut reader, t)?;
            Some(decode_time(path, &units, &raw)?)
        }
        None => None,
    };

    let mut out = Vec::with_capacity(variables.len());
    for VarMeta {
        variable: v,
        name: var_name,
        dims,
        scale,
        offset,
        fills,
    } in metas
    {
        let has_time = time_name.is_some_and(|t| dims.iter().any(|d| d == t));
        let spatial = [lat_name, lon_name];
        if dims.len() < 2 || dims[dims.len() - 2..] != spatial {
            return Err(nc_err(
                path,
                format!("`{var_name}` dims {dims:?} do not end in (lat, lon)"),
            ));
        }
        let raw = reader
            .read_var(&var_name)
            .map_err(|e| nc_err(path, format!("reading `{var_name}`: {e}")))?;
        let raw = to_f64(raw);
        let per_step = n_lat * n_lon;
        let steps = raw.len() / per_step;
        if raw.len() != steps * per_step || steps == 0 {
            return Err(nc_err(path, format!("`{var_name}` size is not a multiple of the grid")));
        }
        let g = if v == VariableId::Orography {
            STANDARD_GRAVITY
        } else {
            1.0
        };
        let decode_step = |s: usize| -> Vec<f32> {
            let src = &raw[s * per_step..(s + 1) * per_step];
            let mut values = vec![f32::NAN; per_step];
            for j in 0..n_lat {
                let sj = if flip { n_lat - 1 - j } else { j };
                for (k, &sk) in lon_perm.iter().enumerate() {
                    let packed = src[sj * n_lon + sk];
                    if fills.contains(&packed) || !packed.is_finite() {
                        continue;
                    }
                    values[j * n_lon + k] = ((packed * scale + offset) / g) as f32;
                }
            }
            values
        };
        let fields = if v.is_constant() || !has_time {
            vec![MonthlyField::new(v, None, grid.clone(), decode_step(0))?]
        } else {
            let stamps = stamps
                .as_ref()
                .ok_or_else(|| nc_err(path, "time-dependent variable without time axis"))?;
            if stamps.len() != steps {
                return Err(nc_err(
                    path,
                    format!("`{var_name}` has {steps} steps, time axis {}", stamps.len()),
                ));
            }
            (0..steps)
                .map(|s| MonthlyField::new(v, Some(stamps[s]), grid.clone(), decode_step(s)))
                .collect::<Result<Vec<_>>>()?
        };
        out.push(MonthlySeries { variable: v, fields });
    }
    Ok(out)
}

/// How a variable is stored by [`write_netcdf`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Packing {
    /// 32-bit floats, NaN written as `_FillValue`.
    Float,
    /// 16-bit integers with `scale_factor`/`add_offset`, as ERA5 files ship.
    Short,
}

const FLOAT_FILL: f32 = -32767.0;
const SHORT_FILL: i16 = -32767;
/// netcdf3 pads odd-length 16-bit attributes with fill bytes, which its
/// reader then rejects as a corrupt header, so the marker pair is written
/// as an even-length `missing_value` vector. Neither value is produced by
/// the packing clamp.
const SHORT_MISSING: [i16; 2] = [SHORT_FILL, i16::MIN];

/// Writes series sharing one grid and one set of monthly stamps as a CF
/// file with dims `(time, latitude, longitude)`, time in hours since
/// 1900-01-01 and latitude north to south. Constant series are written
/// without a time axis; orography is stored as geopotential `z`.
pub fn write_netcdf(path: &Path, series: &[MonthlySeries], packing: Packing) -> Result<()> {
    let grid = series
        .iter()
        .flat_map(|s| s.fields.first())
        .map(|f| f.grid.clone())
        .next()
        .ok_or_else(|| DuneError::InvalidArgument("no fields to write".into()))?;
    let stamps = series
        .iter()
        .find(|s| s.fields.first().is_some_and(|f| f.stamp.is_some()))
        .map(MonthlySeries::stamps)
        .unwrap_or_default();
    let err = |e: String| nc_err(path, e);
    let mut ds = DataSet::new();
    ds.add_fixed_dim("latitude", grid.n_lat())
        .map_err(|e| err(format!("{e}")))?;
    ds.add_fixed_dim("longitude", grid.n_lon())
        .map_err(|e| err(format!("{e}")))?;
    ds.set_unlimited_dim("time", stamps.len())
        .map_err(|e| err(format!("{e}")))?;
    ds.add_var_f32("latitude", &["latitude"])
        .map_err(|e| err(format!("{e}")))?;
    ds.add_var_f32("longitude", &["longitude"])
        .map_err(|e| err(format!("{e}")))?;
    ds.add_var_i32("time", &["time"]).map_err(|e| err(format!("{e}")))?;
    ds.add_var_attr_string("time", "units", "hours since 1900-01-01 00:00:00.0")
        .map_err(|e| err(format!("{e}")))?;

    let base = NaiveDate::from_ymd_opt(1900, 1, 1).expect("valid date");
    let hours: Vec<i32> = stamps
        .iter()
        .map(|s| {
            let (y, m) = s.months()[0];
            let d = NaiveDate::from_ymd_opt(y, m as u32, 1).expect("valid month");
            (d - base).num_hours() as i32
        })
        .collect();

    let mut encoded: Vec<(String, DataVector)> = Vec::new();
    for s in series {
        let name = s.variable.source_name();
        let g = if s.variable == VariableId::Orography {
            STANDARD_GRAVITY
        } else {
            1.0
        };
        let is_const = s.fields.first().is_some_and(|f| f.stamp.is_none());
        if !is_const && s.stamps() != stamps {
            return Err(DuneError::InvalidArgument(format!(
                "{} stamps differ from the time axis",
                s.variable
            )));
        }
        let dims: &[&str] = if is_const {
            &["latitude", "longitude"]
        } else {
            &["time", "latitude", "longitude"]
        };
        let values: Vec<f64> = s
            .fields
            .iter()
            .flat_map(|f| f.values.iter().map(move |&v| v as f64 * g))
            .collect();
        match packing {
            Packing::Float => {
                ds.add_var_f32(name, dims).map_err(|e| err(format!("{e}")))?;
                ds.add_var_attr_f32(name, "_FillValue", vec![FLOAT_FILL])
                    .map_err(|e| err(format!("{e}")))?;
                let data = values
                    .iter()
                    .map(|&v| if v.is_finite() { v as f32 } else { FLOAT_FILL })
                    .collect();
                encoded.push((name.to_string(), DataVector::F32(data)));
            }
            Packing::Short => {
                let (lo, hi) = values
                    .iter()
                    .filter(|v| v.is_finite())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
                let scale = ((hi - lo) / 65532.0).max(f64::MIN_POSITIVE);
                let offset = (hi + lo) / 2.0;
                ds.add_var_i16(name, dims).map_err(|e| err(format!("{e}")))?;
                ds.add_var_attr_f64(name, "scale_factor", vec![scale])
                    .map_err(|e| err(format!("{e}")))?;
                ds.add_var_attr_f64(name, "add_offset", vec![offset])
                    .map_err(|e| err(format!("{e}")))?;
                ds.add_var_attr_i16(name, "missing_value", SHORT_MISSING.to_vec())
                    .map_err(|e| err(format!("{e}")))?;
                let data = values
                    .iter()
                    .map(|&v| {
                        if v.is_finite() {
                            ((v - offset) / scale).round().clamp(-32766.0, 32767.0) as i16
                        } else {
                            SHORT_FILL
                        }
                    })
                    .collect();
                encoded.push((name.to_string(), DataVector::I16(data)));
            }
        }
        ds.add_var_attr_string(name, "units", s.variable.units())
            .map_err(|e| err(format!("{e}")))?;
    }

    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = FileWriter::open(path).map_err(|e| err(format!("{e:?}")))?;
    w.set_def(&ds, Version::Classic, 0).map_err(|e| err(format!("{e:?}")))?;
    let lat: Vec<f32> = grid.lat().iter().map(|&x| x as f32).collect();
    let lon: Vec<f32> = grid.lon().iter().map(|&x| x as f32).collect();
    w.write_var_f32("latitude", &lat).map_err(|e| err(format!("{e:?}")))?;
    w.write_var_f32("longitude", &lon).map_err(|e| err(format!("{e:?}")))?;
    w.write_var_i32("time", &hours).map_err(|e| err(format!("{e:?}")))?;
    for (name, data) in &encoded {
        match data {
            DataVector::F32(d) => w.write_var_f32(name, d),
            DataVector::I16(d) => w.write_var_i16(name, d),
            _ => unreachable!("only f32 and i16 are encoded"),
        }
        .map_err(|e| err(format!("{e:?}")))?;
    }
    w.close().map_err(|e| err(format!("{e:?}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_units_decode_to_months() {
        let p = Path::new("x.nc");
        let s = decode_time(p, "hours since 1900-01-01 00:00:00.0", &[701256.0]).unwrap();
        assert_eq!(s, vec![Stamp::month(1980, 1)]);
        let s = decode_time(p, "days since 1980-01-01", &[0.0, 31.0, 60.0]).unwrap();
        assert_eq!(
            s,
            vec![Stamp::month(1980, 1), Stamp::month(1980, 2), Stamp::month(1980, 3)]
        );
        assert!(decode_time(p, "months since 1980-01-01", &[0.0]).is_err());
    }

    #[test]
    fn packed_round_trip_keeps_missing_cells() {
        let grid = Arc::new(GridSpec::regular(4, 8).unwrap());
        let fields: Vec<MonthlyField> = (0..3)
            .map(|m| {
                let mut v: Vec<f32> = (0..32).map(|i| 270.0 + i as f32 * 0.7 + m as f32).collect();
                v[5] = f32::NAN;
                MonthlyField::new(VariableId::Sst, Some(Stamp::month(1990, 1).offset(m)), grid.clone(), v).unwrap()
            })
            .collect();
        let series = [MonthlySeries {
            variable: VariableId::Sst,
            fields: fields.clone(),
        }];
        let dir = tempfile::tempdir().unwrap();
        for (packing, tol) in [(Packing::Float, 0.0), (Packing::Short, 1e-3)] {
            let path = dir.path().join(format!("{packing:?}.nc"));
            write_netcdf(&path, &series, packing).unwrap();
            let back = read_netcdf(&path, &[VariableId::Sst]).unwrap();
            assert_eq!(back[0].stamps(), series[0].stamps());
            for (a, b) in back[0].fields.iter().zip(&fields) {
                assert!(a.values[5].is_nan());
                for (x, y) in a.values.iter().zip(&b.values).filter(|(_, y)| y.is_finite()) {
                    assert!((x - y).abs() <= tol, "{packing:?}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn lon_roll_from_signed_axis() {
        let (lon, perm) = lon_order(&[-180.0, -90.0, 0.0, 90.0]);
        assert_eq!(lon, vec![0.0, 90.0, 180.0, 270.0]);
        assert_eq!(perm, vec![2, 3, 0, 1]);
    }
}
