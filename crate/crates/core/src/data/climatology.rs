use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::field::{Cadence, MonthlyField, Season, Stamp};
use super::grid::GridSpec;
use crate::error::{DuneError, Result};

/// Lower and upper tercile levels used for categorical verification.
pub const LOWER_PERCENTILE: f64 = 0.33;
pub const UPPER_PERCENTILE: f64 = 0.66;

/// Per-slot climatological mean (and optionally tercile thresholds) over a
/// base period. Monthly tables have 12 slots, seasonal 4, annual 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ClimatologyTable {
    pub(crate) base_period: (i32, i32),
    pub(crate) cadence: Cadence,
    pub(crate) grid: Arc<GridSpec>,
    pub(crate) mean: Vec<Vec<f32>>,
    pub(crate) p33: Option<Vec<Vec<f32>>>,
    pub(crate) p66: Option<Vec<Vec<f32>>>,
    pub(crate) samples_per_slot: Vec<usize>,
}

/// Header metadata persisted alongside the table grids.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct ClimatologyMeta {
    pub base_period: (i32, i32),
    pub cadence: Cadence,
    pub grid: GridSpec,
    pub has_percentiles: bool,
    pub samples_per_slot: Vec<usize>,
}

impl ClimatologyTable {
    pub fn base_period(&self) -> (i32, i32) {
        self.base_period
    }

    pub fn cadence(&self) -> Cadence {
        self.cadence
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn mean(&self, slot: usize) -> &[f32] {
        &self.mean[slot]
    }

    pub fn has_percentiles(&self) -> bool {
        self.p33.is_some()
    }

    pub fn p33(&self, slot: usize) -> Option<&[f32]> {
        self.p33.as_ref().map(|p| p[slot].as_slice())
    }

    pub fn p66(&self, slot: usize) -> Option<&[f32]> {
        self.p66.as_ref().map(|p| p[slot].as_slice())
    }

    pub fn samples_per_slot(&self) -> &[usize] {
        &self.samples_per_slot
    }

    pub(crate) fn meta(&self) -> ClimatologyMeta {
        ClimatologyMeta {
            base_period: self.base_period,
            cadence: self.cadence,
            grid: (*self.grid).clone(),
            has_percentiles: self.has_percentiles(),
            samples_per_slot: self.samples_per_slot.clone(),
        }
    }

    pub(crate) fn from_parts(meta: ClimatologyMeta, grids: Vec<Vec<f32>>) -> Result<Self> {
        let slots = meta.cadence.slots();
        let expected = if meta.has_percentiles { 3 * slots } else { slots };
        if grids.len() != expected || grids.iter().any(|g| g.len() != meta.grid.len()) {
            return Err(DuneError::Shape("climatology payload does not match header".into()));
        }
        let mut it = grids.into_iter();
        let mean: Vec<_> = it.by_ref().take(slots).collect();
        let (p33, p66) = if meta.has_percentiles {
            (Some(it.by_ref().take(slots).collect()), Some(it.take(slots).collect()))
        } else {
            (None, None)
        };
        Ok(Self {
            base_period: meta.base_period,
            cadence: meta.cadence,
            grid: Arc::new(meta.grid),
            mean,
            p33,
            p66,
            samples_per_slot: meta.samples_per_slot,
        })
    }

    pub(crate) fn all_grids(&self) -> Vec<&[f32]> {
        let mut out: Vec<&[f32]> = self.mean.iter().map(Vec::as_slice).collect();
        if let (Some(a), Some(b)) = (&self.p33, &self.p66) {
            out.extend(a.iter().map(Vec::as_slice));
            out.extend(b.iter().map(Vec::as_slice));
        }
        out
    }
}

fn slot_stamp(cadence: Cadence, year: i32, slot: usize) -> Stamp {
    match cadence {
        Cadence::Monthly => Stamp::month(year, slot as u8 + 1),
        Cadence::Seasonal => Stamp::season(year, Season::from_index(slot)),
        Cadence::Annual => Stamp::Year(year),
    }
}

/// Linear interpolation between order statistics: position `p * (n - 1)`
/// in the sorted sample.
pub fn percentile_linear(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = p * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
    }
}

/// Per-slot mean over `base_period` (inclusive years); with `percentiles`,
/// also the 33rd/66th percentile grids.
///
/// Fields outside the base period are ignored. The base period must be
/// covered without gaps; the cadence is taken from the fields.
pub fn build_climatology(
    fields: &[MonthlyField],
    base_period: (i32, i32),
    percentiles: bool,
) -> Result<ClimatologyTable> {
    let (y0, y1) = base_period;
    if y1 < y0 {
        return Err(DuneError::InvalidArgument(format!("empty base period {y0}..{y1}")));
    }
    let mut in_base: BTreeMap<Stamp, &MonthlyField> = BTreeMap::new();
    let mut cadence = None;
    let mut grid: Option<&Arc<GridSpec>> = None;
    for f in fields {
        let Some(stamp) = f.stamp else { continue };
        if stamp.year() < y0 || stamp.year() > y1 {
            continue;
        }
        match cadence {
            None => cadence = Some(stamp.cadence()),
            Some(c) if c != stamp.cadence() => {
                return Err(DuneError::InvalidArgument("mixed cadences in climatology input".into()))
            }
            _ => {}
        }
        match grid {
            None => grid = Some(&f.grid),
            Some(g) => g.ensure_same(&f.grid, "climatology input")?,
        }
        if in_base.insert(stamp, f).is_some() {
            return Err(DuneError::InvalidArgument(format!("duplicate stamp {stamp}")));
        }
    }
    let cadence = cadence.ok_or_else(|| DuneError::MissingStamp(Stamp::month(y0, 1)))?;
    let grid = grid.expect("grid set with cadence").clone();
    let n_years = (y1 - y0 + 1) as usize;
    let slots = cadence.slots();
    let n = grid.len();

    let mut mean = Vec::with_capacity(slots);
    let mut p33 = percentiles.then(|| Vec::with_capacity(slots));
    let mut p66 = percentiles.then(|| Vec::with_capacity(slots));
    for slot in 0..slots {
        let mut samples: Vec<&MonthlyField> = Vec::with_capacity(n_years);
        for year in y0..=y1 {
            let stamp = slot_stamp(cadence, year, slot);
            let f = in_base.get(&stamp).ok_or(DuneError::MissingStamp(stamp))?;
            samples.push(f);
        }
        let mut m = vec![f32::NAN; n];
        let mut lo = vec![f32::NAN; n];
        let mut hi = vec![f32::NAN; n];
        let mut column = Vec::with_capacity(n_years);
        for i in 0..n {
            column.clear();
            column.extend(samples.iter().map(|f| f.values[i] as f64).filter(|v| v.is_finite()));
            if column.is_empty() {
                continue;
            }
            m[i] = (column.iter().sum::<f64>() / column.len() as f64) as f32;
            if percentiles {
                column.sort_by(|a, b| a.total_cmp(b));
                lo[i] = percentile_linear(&column, LOWER_PERCENTILE) as f32;
                hi[i] = percentile_linear(&column, UPPER_PERCENTILE) as f32;
            }
        }
        mean.push(m);
        if let (Some(a), Some(b)) = (p33.as_mut(), p66.as_mut()) {
            a.push(lo);
            b.push(hi);
        }
    }
    Ok(ClimatologyTable {
        base_period,
        cadence,
        grid,
        mean,
        p33,
        p66,
        samples_per_slot: vec![n_years; slots],
    })
}

fn table_slot(field: &MonthlyField, clim: &ClimatologyTable) -> Result<usize> {
    clim.grid.ensure_same(&field.grid, "anomaly")?;
    let stamp = field.stamp_or_err()?;
    if stamp.cadence() != clim.cadence {
        return Err(DuneError::InvalidArgument(format!(
            "{stamp} does not match a {} climatology",
            clim.cadence
        )));
    }
    Ok(stamp.slot())
}

/// Subtracts the climatological mean of the field's slot.
pub fn anomalize(field: &MonthlyField, clim: &ClimatologyTable) -> Result<MonthlyField> {
    let mean = &clim.mean[table_slot(field, clim)?];
    let values = field.values.iter().zip(mean).map(|(v, m)| v - m).collect();
    field.with_values(values)
}

/// Adds the climatological mean back.
pub fn deanomalize(field: &MonthlyField, clim: &ClimatologyTable) -> Result<MonthlyField> {
    let mean = &clim.mean[table_slot(field, clim)?];
    let values = field.values.iter().zip(mean).map(|(v, m)| v + m).collect();
    field.with_values(values)
}
