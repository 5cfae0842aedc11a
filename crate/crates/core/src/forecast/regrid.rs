//! Bilinear interpolation between regular latitude/longitude grids.
//!
//! Longitude wraps periodically. Latitudes beyond the outermost source
//! rows are extrapolated linearly from the two nearest rows, so fields
//! linear in latitude are reproduced everywhere.

use std::sync::Arc;

use crate::data::{GridSpec, MonthlyField};
use crate::error::{DuneError, Result};

/// Bracketing indices and the fractional position along a descending
/// latitude axis.
fn lat_bracket(lat: &[f64], y: f64) -> (usize, usize, f64) {
    if lat.len() == 1 {
        return (0, 0, 0.0);
    }
    let n = lat.len();
    let step = lat[0] - lat[1];
    let pos = (lat[0] - y) / step;
    let j0 = (pos.floor() as isize).clamp(0, n as isize - 2) as usize;
    (j0, j0 + 1, pos - j0 as f64)
}

/// Bracketing indices and fraction along a periodic ascending longitude axis.
fn lon_bracket(lon: &[f64], x: f64) -> (usize, usize, f64) {
    let n = lon.len();
    let step = 360.0 / n as f64;
    let pos = (x - lon[0]).rem_euclid(360.0) / step;
    let k0 = (pos.floor() as usize).min(n - 1);
    (k0, (k0 + 1) % n, pos - k0 as f64)
}

/// Interpolates row-major `values` on `src` onto `dst`.
pub fn bilinear_values(values: &[f32], src: &GridSpec, dst: &GridSpec) -> Result<Vec<f32>> {
    if values.len() != src.len() {
        return Err(DuneError::Shape(format!(
            "{} values for a {}-cell grid",
            values.len(),
            src.len()
        )));
    }
    let cols: Vec<(usize, usize, f64)> = dst.lon().iter().map(|&x| lon_bracket(src.lon(), x)).collect();
    let mut out = Vec::with_capacity(dst.len());
    for &y in dst.lat() {
        let (j0, j1, ty) = lat_bracket(src.lat(), y);
        for &(k0, k1, tx) in &cols {
            let v = |j: usize, k: usize| values[src.index(j, k)] as f64;
            let top = v(j0, k0) * (1.0 - tx) + v(j0, k1) * tx;
            let bottom = v(j1, k0) * (1.0 - tx) + v(j1, k1) * tx;
            out.push((top * (1.0 - ty) + bottom * ty) as f32);
        }
    }
    Ok(out)
}

pub fn bilinear_regrid(field: &MonthlyField, dst: &Arc<GridSpec>) -> Result<MonthlyField> {
    let values = bilinear_values(&field.values, &field.grid, dst)?;
    MonthlyField::new(field.variable, field.stamp, dst.clone(), values)
}

/// The grid refined by `factor` in both directions over the same cells:
/// a cell-centred 0.5 degree grid becomes the cell-centred 0.25 degree one.
pub fn refined_grid(src: &GridSpec, factor: usize) -> Result<GridSpec> {
    if factor == 0 {
        return Err(DuneError::InvalidArgument("refinement factor must be positive".into()));
    }
    let f = factor as f64;
    let dlat = src.lat_spacing();
    let dlon = src.resolution();
    let lat = src
        .lat()
        .iter()
        .flat_map(|&c| (0..factor).map(move |i| c + dlat / 2.0 - dlat / f * (i as f64 + 0.5)))
        .collect();
    let lon = src
        .lon()
        .iter()
        .flat_map(|&c| (0..factor).map(move |i| (c - dlon / 2.0 + dlon / f * (i as f64 + 0.5)).rem_euclid(360.0)))
        .collect::<Vec<f64>>();
    let mut lon = lon;
    lon.sort_by(f64::total_cmp);
    GridSpec::from_axes(lat, lon)
}

/// Doubles (or multiplies by `factor`) the resolution of `field`.
pub fn bilinear_upsample(field: &MonthlyField, factor: usize) -> Result<MonthlyField> {
    let dst = Arc::new(refined_grid(&field.grid, factor)?);
    bilinear_regrid(field, &dst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::VariableId;

    #[test]
    fn constant_and_linear_fields() {
        let src = Arc::new(GridSpec::regular(6, 12).unwrap());
        let c = MonthlyField::filled(VariableId::BlendedT, None, src.clone(), 273.5);
        let up = bilinear_upsample(&c, 2).unwrap();
        assert_eq!((up.grid.n_lat(), up.grid.n_lon()), (12, 24));
        assert!(up.values.iter().all(|&v| v == 273.5));

        let lin: Vec<f32> = src
            .lat()
            .iter()
            .flat_map(|&l| std::iter::repeat_n((0.25 * l) as f32, 12))
            .collect();
        let f = MonthlyField::new(VariableId::BlendedT, None, src.clone(), lin).unwrap();
        let up = bilinear_upsample(&f, 2).unwrap();
        for (j, &l) in up.grid.lat().iter().enumerate() {
            for k in 0..up.grid.n_lon() {
                assert!((up.values[up.grid.index(j, k)] as f64 - 0.25 * l).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn longitude_wraps() {
        let src = GridSpec::regular(2, 4).unwrap();
        let values = vec![0.0, 1.0, 2.0, 3.0, 0.0, 1.0, 2.0, 3.0];
        let dst = GridSpec::from_axes(src.lat().to_vec(), vec![45.0, 135.0, 225.0, 315.0]).unwrap();
        let out = bilinear_values(&values, &src, &dst).unwrap();
        assert_eq!(&out[..4], &[0.5, 1.5, 2.5, 1.5]);
    }
}
