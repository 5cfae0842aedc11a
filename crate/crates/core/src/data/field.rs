use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{DuneError, Result};

/// Physical variables handled by the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableId {
    T2m,
    Sst,
    BlendedT,
    Tisr,
    Lsm,
    Slt,
    Orography,
    Cvh,
    Cvl,
}

impl VariableId {
    pub const ALL: [VariableId; 9] = [
        VariableId::T2m,
        VariableId::Sst,
        VariableId::BlendedT,
        VariableId::Tisr,
        VariableId::Lsm,
        VariableId::Slt,
        VariableId::Orography,
        VariableId::Cvh,
        VariableId::Cvl,
    ];

    /// Time-invariant surface descriptors, in input-stack order.
    pub const CONSTANTS: [VariableId; 5] = [
        VariableId::Lsm,
        VariableId::Slt,
        VariableId::Orography,
        VariableId::Cvh,
        VariableId::Cvl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariableId::T2m => "t2m",
            VariableId::Sst => "sst",
            VariableId::BlendedT => "blended_t",
            VariableId::Tisr => "tisr",
            VariableId::Lsm => "lsm",
            VariableId::Slt => "slt",
            VariableId::Orography => "orography",
            VariableId::Cvh => "cvh",
            VariableId::Cvl => "cvl",
        }
    }

    /// Variable name used in reanalysis NetCDF files. Orography is stored
    /// there as surface geopotential `z`.
    pub fn source_name(self) -> &'static str {
        match self {
            VariableId::Orography => "z",
            v => v.name(),
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            VariableId::T2m | VariableId::Sst | VariableId::BlendedT => "K",
            VariableId::Tisr => "J m**-2",
            VariableId::Orography => "m",
            _ => "1",
        }
    }

    pub fn is_constant(self) -> bool {
        Self::CONSTANTS.contains(&self)
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariableId {
    type Err = DuneError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(VariableId::Orography),
            _ => VariableId::ALL
                .into_iter()
                .find(|v| v.name() == s)
                .ok_or_else(|| DuneError::UnknownVariable(s.to_string())),
        }
    }
}

/// Meteorological seasons. `Djf` of year `y` is December `y-1` with
/// January and February of `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Season {
    Djf,
    Mam,
    Jja,
    Son,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Djf, Season::Mam, Season::Jja, Season::Son];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Season {
        Self::ALL[i % 4]
    }

    pub fn label(self) -> &'static str {
        match self {
            Season::Djf => "DJF",
            Season::Mam => "MAM",
            Season::Jja => "JJA",
            Season::Son => "SON",
        }
    }
}

/// Temporal cadence of a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cadence {
    Monthly,
    Seasonal,
    Annual,
}

impl Cadence {
    /// Number of climatological slots per year.
    pub fn slots(self) -> usize {
        match self {
            Cadence::Monthly => 12,
            Cadence::Seasonal => 4,
            Cadence::Annual => 1,
        }
    }
}

impl FromStr for Cadence {
    type Err = DuneError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monthly" => Ok(Cadence::Monthly),
            "seasonal" => Ok(Cadence::Seasonal),
            "annual" => Ok(Cadence::Annual),
            _ => Err(DuneError::InvalidArgument(format!("unknown mode `{s}`"))),
        }
    }
}

impl fmt::Display for Cadence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cadence::Monthly => "monthly",
            Cadence::Seasonal => "seasonal",
            Cadence::Annual => "annual",
        })
    }
}

/// Time label of a field: a calendar month, a season or a calendar year.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stamp {
    Month { year: i32, month: u8 },
    Season { year: i32, season: Season },
    Year(i32),
}

impl Stamp {
    /// Panics if `month` is outside 1..=12.
    pub fn month(year: i32, month: u8) -> Stamp {
        assert!((1..=12).contains(&month), "month {month} out of range");
        Stamp::Month { year, month }
    }

    pub fn season(year: i32, season: Season) -> Stamp {
        Stamp::Season { year, season }
    }

    pub fn cadence(&self) -> Cadence {
        match self {
            Stamp::Month { .. } => Cadence::Monthly,
            Stamp::Season { .. } => Cadence::Seasonal,
            Stamp::Year(_) => Cadence::Annual,
        }
    }

    pub fn year(&self) -> i32 {
        match *self {
            Stamp::Month { year, .. } | Stamp::Season { year, .. } | Stamp::Year(year) => year,
        }
    }

    /// Zero-based climatological slot (month-1, season index, or 0).
    pub fn slot(&self) -> usize {
        match *self {
            Stamp::Month { month, .. } => month as usize - 1,
            Stamp::Season { season, .. } => season.index(),
            Stamp::Year(_) => 0,
        }
    }

    /// Continuous step index, so that consecutive stamps differ by one.
    pub fn ordinal(&self) -> i64 {
        let per_year = self.cadence().slots() as i64;
        self.year() as i64 * per_year + self.slot() as i64
    }

    pub fn from_ordinal(cadence: Cadence, ordinal: i64) -> Stamp {
        let per_year = cadence.slots() as i64;
        let year = ordinal.div_euclid(per_year) as i32;
        let slot = ordinal.rem_euclid(per_year) as usize;
        match cadence {
            Cadence::Monthly => Stamp::month(year, slot as u8 + 1),
            Cadence::Seasonal => Stamp::season(year, Season::from_index(slot)),
            Cadence::Annual => Stamp::Year(year),
        }
    }

    pub fn offset(&self, steps: i64) -> Stamp {
        Stamp::from_ordinal(self.cadence(), self.ordinal() + steps)
    }

    pub fn next(&self) -> Stamp {
        self.offset(1)
    }

    pub fn prev(&self) -> Stamp {
        self.offset(-1)
    }

    /// Same slot one year earlier.
    pub fn prior_year(&self) -> Stamp {
        self.offset(-(self.cadence().slots() as i64))
    }

    /// Calendar months (year, month) that make up this stamp.
    pub fn months(&self) -> Vec<(i32, u8)> {
        match *self {
            Stamp::Month { year, month } => vec![(year, month)],
            Stamp::Season { year, season } => match season {
                Season::Djf => vec![(year - 1, 12), (year, 1), (year, 2)],
                Season::Mam => vec![(year, 3), (year, 4), (year, 5)],
                Season::Jja => vec![(year, 6), (year, 7), (year, 8)],
                Season::Son => vec![(year, 9), (year, 10), (year, 11)],
            },
            Stamp::Year(year) => (1..=12).map(|m| (year, m)).collect(),
        }
    }

    /// Every stamp of `cadence` from `first` through `last`, inclusive.
    pub fn range(first: Stamp, last: Stamp) -> Vec<Stamp> {
        if first.cadence() != last.cadence() || last < first {
            return Vec::new();
        }
        let c = first.cadence();
        (first.ordinal()..=last.ordinal())
            .map(|o| Stamp::from_ordinal(c, o))
            .collect()
    }
}

impl fmt::Display for Stamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stamp::Month { year, month } => write!(f, "{year:04}-{month:02}"),
            Stamp::Season { year, season } => write!(f, "{year:04}-{}", season.label()),
            Stamp::Year(year) => write!(f, "{year:04}"),
        }
    }
}

impl FromStr for Stamp {
    type Err = DuneError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || DuneError::InvalidArgument(format!("cannot parse stamp `{s}`"));
        match s.split_once('-') {
            None => s.parse::<i32>().map(Stamp::Year).map_err(|_| bad()),
            Some((y, rest)) => {
                let year: i32 = y.parse().map_err(|_| bad())?;
                if let Some(season) = Season::ALL.into_iter().find(|x| x.label() == rest) {
                    return Ok(Stamp::season(year, season));
                }
                let month: u8 = rest.parse().map_err(|_| bad())?;
                if !(1..=12).contains(&month) {
                    return Err(bad());
                }
                Ok(Stamp::month(year, month))
            }
        }
    }
}

impl Serialize for Stamp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Stamp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One variable on a grid at one time stamp (or time-invariant when
/// `stamp` is `None`).
///
/// Missing values are stored as NaN and flagged in `missing`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonthlyField {
    pub variable: VariableId,
    pub stamp: Option<Stamp>,
    pub grid: Arc<GridSpec>,
    pub values: Vec<f32>,
    pub missing: Option<Vec<bool>>,
}

impl MonthlyField {
    /// Builds a field; non-finite values are treated as missing.
    pub fn new(variable: VariableId, stamp: Option<Stamp>, grid: Arc<GridSpec>, values: Vec<f32>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(DuneError::Shape(format!(
                "{variable}: {} values for a {}-cell grid",
                values.len(),
                grid.len()
            )));
        }
        let missing: Vec<bool> = values.iter().map(|v| !v.is_finite()).collect();
        let missing = missing.iter().any(|&m| m).then_some(missing);
        let mut values = values;
        if let Some(mask) = &missing {
            for (v, &m) in values.iter_mut().zip(mask) {
                if m {
                    *v = f32::NAN;
                }
            }
        }
        let field = Self {
            variable,
            stamp,
            grid,
            values,
            missing,
        };
        field.check_ranges()?;
        Ok(field)
    }

    pub fn filled(variable: VariableId, stamp: Option<Stamp>, grid: Arc<GridSpec>, value: f32) -> Self {
        let n = grid.len();
        Self {
            variable,
            stamp,
            grid,
            values: vec![value; n],
            missing: None,
        }
    }

    fn check_ranges(&self) -> Result<()> {
        let unit_interval = matches!(self.variable, VariableId::Lsm | VariableId::Cvh | VariableId::Cvl);
        if unit_interval && self.values.iter().any(|v| v.is_finite() && !(0.0..=1.0).contains(v)) {
            return Err(DuneError::InvalidArgument(format!(
                "{} values must lie in [0, 1]",
                self.variable
            )));
        }
        Ok(())
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.missing.as_ref().is_some_and(|m| m[i])
    }

    pub fn missing_count(&self) -> usize {
        self.missing.as_ref().map_or(0, |m| m.iter().filter(|&&x| x).count())
    }

    pub fn value(&self, j: usize, k: usize) -> f32 {
        self.values[self.grid.index(j, k)]
    }

    /// Same metadata, new values (missing mask recomputed).
    pub fn with_values(&self, values: Vec<f32>) -> Result<Self> {
        Self::new(self.variable, self.stamp, self.grid.clone(), values)
    }

    pub fn stamp_or_err(&self) -> Result<Stamp> {
        self.stamp
            .ok_or_else(|| DuneError::InvalidArgument(format!("{} field has no time stamp", self.variable)))
    }

    /// Copies the rows `offset..offset + grid.n_lat()` onto `grid`.
    pub fn select_rows(&self, grid: Arc<GridSpec>, offset: usize) -> Result<Self> {
        if grid.n_lon() != self.grid.n_lon() || offset + grid.n_lat() > self.grid.n_lat() {
            return Err(DuneError::GridMismatch("row selection outside source grid".into()));
        }
        let n_lon = grid.n_lon();
        let values = self.values[offset * n_lon..(offset + grid.n_lat()) * n_lon].to_vec();
        Self::new(self.variable, self.stamp, grid, values)
    }

    /// Averages `factor x factor` blocks, ignoring missing cells.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let coarse = Arc::new(self.grid.coarsened(factor)?);
        let (n_lon, c_lon) = (self.grid.n_lon(), coarse.n_lon());
        let mut values = vec![f32::NAN; coarse.len()];
        for cj in 0..coarse.n_lat() {
            for ck in 0..c_lon {
                let (mut sum, mut n) = (0.0f64, 0usize);
                for j in cj * factor..(cj + 1) * factor {
                    for k in ck * factor..(ck + 1) * factor {
                        let v = self.values[j * n_lon + k];
                        if v.is_finite() {
                            sum += v as f64;
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    values[cj * c_lon + ck] = (sum / n as f64) as f32;
                }
            }
        }
        Self::new(self.variable, self.stamp, coarse, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamp_arithmetic() {
        let s = Stamp::month(2023, 12);
        assert_eq!(s.prev(), Stamp::month(2023, 11));
        assert_eq!(s.prior_year(), Stamp::month(2022, 12));
        assert_eq!(s.next(), Stamp::month(2024, 1));
        let djf = Stamp::season(1981, Season::Djf);
        assert_eq!(djf.prev(), Stamp::season(1980, Season::Son));
        assert_eq!(djf.months()[0], (1980, 12));
        assert_eq!(Stamp::Year(2000).next(), Stamp::Year(2001));
        assert_eq!(Stamp::range(Stamp::month(1980, 1), Stamp::month(2016, 12)).len(), 444);
    }

    #[test]
    fn stamp_text_round_trip() {
        for s in [
            Stamp::month(1980, 1),
            Stamp::season(2019, Season::Jja),
            Stamp::Year(2023),
        ] {
            assert_eq!(s.to_string().parse::<Stamp>().unwrap(), s);
        }
        assert!("1980-13".parse::<Stamp>().is_err());
    }

    #[test]
    fn variable_names() {
        assert_eq!("z".parse::<VariableId>().unwrap(), VariableId::Orography);
        assert!(matches!(
            "q".parse::<VariableId>(),
            Err(DuneError::UnknownVariable(v)) if v == "q"
        ));
    }

    #[test]
    fn field_missing_and_ranges() {
        let g = Arc::new(GridSpec::regular(2, 4).unwrap());
        let mut v = vec![280.0f32; 8];
        v[3] = f32::NAN;
        let f = MonthlyField::new(VariableId::Sst, Some(Stamp::month(1980, 1)), g.clone(), v).unwrap();
        assert_eq!(f.missing_count(), 1);
        assert!(f.is_missing(3));
        assert!(MonthlyField::new(VariableId::Lsm, None, g.clone(), vec![1.5; 8]).is_err());
        assert!(MonthlyField::new(VariableId::Lsm, None, g, vec![0.5; 7]).is_err());
    }
}
