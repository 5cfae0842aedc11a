use serde::{Deserialize, Serialize};

use crate::error::{DuneError, Result};

const AXIS_TOL: f64 = 1e-6;

/// A regular latitude/longitude grid.
///
/// Latitudes run north to south, longitudes run eastward from the first
/// column and wrap at 360 degrees. Values are stored row-major as
/// `[lat][lon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lat: Vec<f64>,
    lon: Vec<f64>,
    resolution: f64,
}

/// Which polar row to remove when mapping a 721-row data grid onto the
/// 720-row model grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleRow {
    #[default]
    DropSouth,
    DropNorth,
    Keep,
}

impl GridSpec {
    /// Validates axes and builds a grid.
    pub fn from_axes(lat: Vec<f64>, lon: Vec<f64>) -> Result<Self> {
        if lat.is_empty() || lon.is_empty() {
            return Err(DuneError::InvalidGrid("empty axis".into()));
        }
        if lat.iter().any(|v| !v.is_finite() || v.abs() > 90.0 + AXIS_TOL) {
            return Err(DuneError::InvalidGrid("latitude outside [-90, 90]".into()));
        }
        let dlon = 360.0 / lon.len() as f64;
        for (k, &v) in lon.iter().enumerate() {
            let expected = lon[0] + k as f64 * dlon;
            if (v - expected).abs() > AXIS_TOL * dlon.max(1.0) {
                return Err(DuneError::InvalidGrid(format!(
                    "longitude axis is not uniform and periodic at index {k}: {v} vs {expected}"
                )));
            }
        }
        if lon[0] < -AXIS_TOL || lon[0] >= 360.0 {
            return Err(DuneError::InvalidGrid("first longitude outside [0, 360)".into()));
        }
        if lat.len() > 1 {
            let dlat = lat[0] - lat[1];
            if dlat <= 0.0 {
                return Err(DuneError::InvalidGrid("latitudes must descend".into()));
            }
            for (j, &v) in lat.iter().enumerate() {
                let expected = lat[0] - j as f64 * dlat;
                if (v - expected).abs() > AXIS_TOL * dlat.max(1.0) {
                    return Err(DuneError::InvalidGrid(format!(
                        "latitude axis is not uniform at index {j}"
                    )));
                }
            }
        }
        Ok(Self {
            lat,
            lon,
            resolution: dlon,
        })
    }

    /// Cell-centred global grid, e.g. `regular(32, 64)` has 5.625 degree
    /// spacing with the first row at 87.1875N.
    pub fn regular(n_lat: usize, n_lon: usize) -> Result<Self> {
        if n_lat == 0 || n_lon == 0 {
            return Err(DuneError::InvalidGrid("zero-sized grid".into()));
        }
        let dlat = 180.0 / n_lat as f64;
        let dlon = 360.0 / n_lon as f64;
        let lat = (0..n_lat).map(|j| 90.0 - dlat * (j as f64 + 0.5)).collect();
        let lon = (0..n_lon).map(|k| k as f64 * dlon).collect();
        Self::from_axes(lat, lon)
    }

    /// Pole-inclusive grid in the reanalysis layout: `resolution = 0.25`
    /// gives 721 x 1440.
    pub fn pole_inclusive(resolution: f64) -> Result<Self> {
        let n_lat = (180.0 / resolution).round() as usize + 1;
        let n_lon = (360.0 / resolution).round() as usize;
        let lat = (0..n_lat).map(|j| 90.0 - resolution * j as f64).collect();
        let lon = (0..n_lon).map(|k| resolution * k as f64).collect();
        Self::from_axes(lat, lon)
    }

    pub fn n_lat(&self) -> usize {
        self.lat.len()
    }

    pub fn n_lon(&self) -> usize {
        self.lon.len()
    }

    /// Number of grid cells.
    pub fn len(&self) -> usize {
        self.lat.len() * self.lon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lat(&self) -> &[f64] {
        &self.lat
    }

    pub fn lon(&self) -> &[f64] {
        &self.lon
    }

    /// Longitude spacing in degrees.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Latitude spacing in degrees (the longitude spacing for single-row grids).
    pub fn lat_spacing(&self) -> f64 {
        if self.lat.len() > 1 {
            self.lat[0] - self.lat[1]
        } else {
            self.resolution
        }
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.lon.len() + k
    }

    /// Checks that both dimensions are divisible by `2^depth`.
    pub fn check_divisible(&self, depth: usize) -> Result<()> {
        let f = 1usize << depth;
        if !self.n_lat().is_multiple_of(f) || !self.n_lon().is_multiple_of(f) {
            return Err(DuneError::InvalidGrid(format!(
                "{}x{} is not divisible by 2^{depth}",
                self.n_lat(),
                self.n_lon()
            )));
        }
        Ok(())
    }

    /// Returns the model grid and the index of the first retained row.
    pub fn model_grid(&self, pole: PoleRow) -> Result<(GridSpec, usize)> {
        let n = self.n_lat();
        match pole {
            PoleRow::Keep => Ok((self.clone(), 0)),
            _ if n < 2 => Err(DuneError::InvalidGrid(
                "cannot drop a row from a single-row grid".into(),
            )),
            PoleRow::DropSouth => Ok((Self::from_axes(self.lat[..n - 1].to_vec(), self.lon.clone())?, 0)),
            PoleRow::DropNorth => Ok((Self::from_axes(self.lat[1..].to_vec(), self.lon.clone())?, 1)),
        }
    }

    /// Block-mean coarsening factor that brings this grid closest to
    /// `target_resolution` while dividing both dimensions.
    pub fn coarsen_factor(&self, target_resolution: f64) -> usize {
        let want = (target_resolution / self.resolution).round().max(1.0) as usize;
        (1..=want)
            .rev()
            .find(|f| self.n_lat().is_multiple_of(*f) && self.n_lon().is_multiple_of(*f))
            .unwrap_or(1)
    }

    /// Grid obtained by averaging `factor x factor` blocks.
    pub fn coarsened(&self, factor: usize) -> Result<GridSpec> {
        if factor == 0 || !self.n_lat().is_multiple_of(factor) || !self.n_lon().is_multiple_of(factor) {
            return Err(DuneError::InvalidGrid(format!("cannot coarsen by {factor}")));
        }
        let lat = self
            .lat
            .chunks(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect();
        let lon = self
            .lon
            .chunks(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect();
        Self::from_axes(lat, lon)
    }

    /// Latitude weights of this grid.
    pub fn latitude_weights(&self) -> LatWeights {
        latitude_weights(&self.lat)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(DuneError::GridMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.n_lat(),
                self.n_lon(),
                other.n_lat(),
                other.n_lon()
            )));
        }
        Ok(())
    }
}

/// Normalized cosine-latitude weights, one per row; they sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct LatWeights {
    weights: Vec<f64>,
}

impl LatWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.weights[j]
    }
}

/// `L(j) = cos(lat_j) / sum_j cos(lat_j)`.
///
/// Pole rows get a weight of exactly zero rather than the ~6e-17 that
/// `cos(90 deg)` evaluates to.
pub fn latitude_weights(lat: &[f64]) -> LatWeights {
    let cos: Vec<f64> = lat
        .iter()
        .map(|l| {
            if (l.abs() - 90.0).abs() < 1e-12 {
                0.0
            } else {
                l.to_radians().cos().max(0.0)
            }
        })
        .collect();
    let total: f64 = cos.iter().sum();
    let weights = if total > 0.0 {
        cos.iter().map(|c| c / total).collect()
    } else {
        vec![1.0 / lat.len() as f64; lat.len()]
    };
    LatWeights { weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_examples() {
        assert_eq!(latitude_weights(&[0.0]).as_slice(), &[1.0]);
        let w = latitude_weights(&[60.0, -60.0]);
        assert!((w.get(0) - 0.5).abs() < 1e-15 && (w.get(1) - 0.5).abs() < 1e-15);
        let w = latitude_weights(&[0.0, 60.0]);
        assert!((w.get(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((w.get(1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_one_on_common_grids() {
        for g in [
            GridSpec::regular(32, 64).unwrap(),
            GridSpec::regular(16, 32).unwrap(),
            GridSpec::pole_inclusive(0.25).unwrap(),
        ] {
            let w = g.latitude_weights();
            let s: f64 = w.as_slice().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(w.as_slice().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn era5_grid_maps_to_720_rows() {
        let g = GridSpec::pole_inclusive(0.25).unwrap();
        assert_eq!((g.n_lat(), g.n_lon()), (721, 1440));
        let (m, offset) = g.model_grid(PoleRow::DropSouth).unwrap();
        assert_eq!((m.n_lat(), offset), (720, 0));
        assert_eq!(m.lat()[719], -89.75);
        let (m, offset) = g.model_grid(PoleRow::DropNorth).unwrap();
        assert_eq!((m.n_lat(), offset), (720, 1));
        assert!(m.check_divisible(4).is_ok());
        assert!(g.check_divisible(4).is_err());
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(GridSpec::from_axes(vec![0.0, 10.0], vec![0.0, 180.0]).is_err());
        assert!(GridSpec::from_axes(vec![10.0, 0.0], vec![0.0, 100.0]).is_err());
        assert!(GridSpec::from_axes(vec![95.0], vec![0.0]).is_err());
    }

    #[test]
    fn coarsen_factor_prefers_divisors() {
        let g = GridSpec::pole_inclusive(0.25).unwrap();
        let (m, _) = g.model_grid(PoleRow::DropSouth).unwrap();
        assert_eq!(m.coarsen_factor(2.0), 8);
        let desk = GridSpec::regular(32, 64).unwrap();
        assert_eq!(desk.coarsen_factor(2.0), 1);
        let c = GridSpec::regular(32, 64).unwrap().coarsened(2).unwrap();
        assert_eq!((c.n_lat(), c.n_lon()), (16, 32));
        assert_eq!(c.lat(), GridSpec::regular(16, 32).unwrap().lat());
        assert_eq!(c.lon()[0], 2.8125);
        assert_eq!(c.resolution(), 11.25);
    }
}
