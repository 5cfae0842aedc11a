//! Verification regions: boolean masks over a grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{GridSpec, MonthlyField};
use crate::error::{DuneError, Result};

/// Which surface a region keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    #[default]
    Any,
    Land,
    Ocean,
}

/// A latitude/longitude box restricted to a surface type.
///
/// Longitude bounds are in `[0, 360)`; `lon_min > lon_max` wraps through 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDef {
    pub name: String,
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    #[serde(default)]
    pub surface: Surface,
}

impl RegionDef {
    fn boxed(name: &str, lat: (f64, f64), lon: (f64, f64), surface: Surface) -> Self {
        Self {
            name: name.to_string(),
            lat_min: lat.0,
            lat_max: lat.1,
            lon_min: lon.0,
            lon_max: lon.1,
            surface,
        }
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        let lon = lon.rem_euclid(360.0);
        let in_lon = if self.lon_min <= self.lon_max {
            lon >= self.lon_min && lon <= self.lon_max
        } else {
            lon >= self.lon_min || lon <= self.lon_max
        };
        lat >= self.lat_min && lat <= self.lat_max && in_lon
    }

    pub fn provenance(&self) -> String {
        let surface = match self.surface {
            Surface::Any => "all cells",
            Surface::Land => "land cells",
            Surface::Ocean => "ocean cells",
        };
        format!(
            "{}: lat {}..{}, lon {}..{} E, {surface}",
            self.name, self.lat_min, self.lat_max, self.lon_min, self.lon_max
        )
    }
}

/// The named regions of the score tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Global,
    GlobalLand,
    GlobalOcean,
    Us,
    Australia,
    BorealForests,
}

impl RegionKind {
    pub const ALL: [RegionKind; 6] = [
        RegionKind::Global,
        RegionKind::GlobalLand,
        RegionKind::GlobalOcean,
        RegionKind::Us,
        RegionKind::Australia,
        RegionKind::BorealForests,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegionKind::Global => "global",
            RegionKind::GlobalLand => "global_land",
            RegionKind::GlobalOcean => "global_ocean",
            RegionKind::Us => "us",
            RegionKind::Australia => "australia",
            RegionKind::BorealForests => "boreal_forests",
        }
    }

    pub fn definition(self) -> RegionDef {
        let world = ((-90.0, 90.0), (0.0, 360.0));
        match self {
            RegionKind::Global => RegionDef::boxed(self.name(), world.0, world.1, Surface::Any),
            RegionKind::GlobalLand => RegionDef::boxed(self.name(), world.0, world.1, Surface::Land),
            RegionKind::GlobalOcean => RegionDef::boxed(self.name(), world.0, world.1, Surface::Ocean),
            RegionKind::Us => RegionDef::boxed(self.name(), (24.0, 50.0), (235.0, 294.0), Surface::Land),
            RegionKind::Australia => RegionDef::boxed(self.name(), (-45.0, -10.0), (112.0, 155.0), Surface::Land),
            RegionKind::BorealForests => RegionDef::boxed(self.name(), (50.0, 70.0), (0.0, 360.0), Surface::Land),
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegionKind {
    type Err = DuneError;

    fn from_str(s: &str) -> Result<Self> {
        RegionKind::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| DuneError::InvalidArgument(format!("unknown region `{s}`")))
    }
}

/// Cells included in a score, row-major like the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMask {
    pub name: String,
    pub mask: Vec<bool>,
    pub definition: String,
}

impl RegionMask {
    /// Every cell of `grid`.
    pub fn global(grid: &GridSpec) -> Self {
        Self {
            name: RegionKind::Global.name().to_string(),
            mask: vec![true; grid.len()],
            definition: RegionKind::Global.definition().provenance(),
        }
    }

    /// Applies `def` to `grid`; land is `lsm >= threshold`.
    pub fn from_def(def: &RegionDef, grid: &GridSpec, lsm: Option<&MonthlyField>, threshold: f64) -> Result<Self> {
        if def.surface != Surface::Any {
            let lsm =
                lsm.ok_or_else(|| DuneError::InvalidArgument(format!("region `{}` needs a land-sea mask", def.name)))?;
            grid.ensure_same(&lsm.grid, "land-sea mask")?;
        }
        let mut mask = Vec::with_capacity(grid.len());
        for (j, &lat) in grid.lat().iter().enumerate() {
            for (k, &lon) in grid.lon().iter().enumerate() {
                let land = lsm.map(|m| m.values[grid.index(j, k)] as f64 >= threshold);
                let surface_ok = match def.surface {
                    Surface::Any => true,
                    Surface::Land => land == Some(true),
                    Surface::Ocean => land == Some(false),
                };
                mask.push(surface_ok && def.contains(lat, lon));
            }
        }
        Self::new(def.name.clone(), mask, def.provenance())
    }

    pub fn standard(kind: RegionKind, grid: &GridSpec, lsm: &MonthlyField, threshold: f64) -> Result<Self> {
        Self::from_def(&kind.definition(), grid, Some(lsm), threshold)
    }

    /// Rejects masks without a single included cell.
    pub fn new(name: String, mask: Vec<bool>, definition: String) -> Result<Self> {
        if !mask.iter().any(|&m| m) {
            return Err(DuneError::EmptyRegion(name));
        }
        Ok(Self { name, mask, definition })
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}
