use std::sync::Arc;

use crate::data::{GridSpec, MonthlyField, Stamp, VariableId};
use crate::error::{DuneError, Result};

/// The five time-invariant surface channels plus the 12-month insolation
/// cycle shared by every year.
#[derive(Clone, Debug)]
pub struct ConstantChannels {
    pub lsm: MonthlyField,
    pub slt: MonthlyField,
    pub orography: MonthlyField,
    pub cvh: MonthlyField,
    pub cvl: MonthlyField,
    /// Index `m - 1` holds calendar month `m`.
    pub tisr_cycle: Vec<MonthlyField>,
}

impl ConstantChannels {
    pub fn new(constants: [MonthlyField; 5], tisr_cycle: Vec<MonthlyField>) -> Result<Self> {
        let [lsm, slt, orography, cvh, cvl] = constants;
        let out = Self {
            lsm,
            slt,
            orography,
            cvh,
            cvl,
            tisr_cycle,
        };
        if out.tisr_cycle.len() != 12 {
            return Err(DuneError::Shape(format!(
                "insolation cycle has {} months, expected 12",
                out.tisr_cycle.len()
            )));
        }
        let grid = out.grid().clone();
        for (want, f) in VariableId::CONSTANTS.iter().zip(out.ordered()) {
            if f.variable != *want {
                return Err(DuneError::InvalidArgument(format!(
                    "expected {want}, got {}",
                    f.variable
                )));
            }
            grid.ensure_same(&f.grid, f.variable.name())?;
        }
        for f in &out.tisr_cycle {
            grid.ensure_same(&f.grid, "tisr")?;
        }
        Ok(out)
    }

    /// Builds the cycle by averaging every calendar month of a TISR series.
    pub fn from_tisr_series(constants: [MonthlyField; 5], tisr: &[MonthlyField]) -> Result<Self> {
        let grid = constants[0].grid.clone();
        let mut sums = vec![vec![0.0f64; grid.len()]; 12];
        let mut counts = [0usize; 12];
        for f in tisr {
            let slot = f.stamp_or_err()?.slot();
            grid.ensure_same(&f.grid, "tisr")?;
            for (s, &v) in sums[slot].iter_mut().zip(&f.values) {
                *s += v as f64;
            }
            counts[slot] += 1;
        }
        let cycle = sums
            .into_iter()
            .zip(counts)
            .enumerate()
            .map(|(m, (s, n))| {
                if n == 0 {
                    return Err(DuneError::Incomplete(format!(
                        "no insolation samples for calendar month {}",
                        m + 1
                    )));
                }
                let values = s.into_iter().map(|v| (v / n as f64) as f32).collect();
                MonthlyField::new(VariableId::Tisr, None, grid.clone(), values)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(constants, cycle)
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.lsm.grid
    }

    /// `lsm, slt, orography, cvh, cvl`.
    pub fn ordered(&self) -> [&MonthlyField; 5] {
        [&self.lsm, &self.slt, &self.orography, &self.cvh, &self.cvl]
    }

    /// Insolation for any stamp: the cycle entry for a month, the mean of
    /// the constituent months for a season or year.
    pub fn tisr_for(&self, stamp: Stamp) -> Vec<f32> {
        let months = stamp.months();
        let n = months.len() as f64;
        let mut acc = vec![0.0f64; self.grid().len()];
        for (_, m) in &months {
            for (a, &v) in acc.iter_mut().zip(&self.tisr_cycle[*m as usize - 1].values) {
                *a += v as f64;
            }
        }
        acc.into_iter().map(|v| (v / n) as f32).collect()
    }

    /// Copies rows onto a model grid (see [`GridSpec::model_grid`]).
    pub fn select_rows(&self, grid: &Arc<GridSpec>, offset: usize) -> Result<Self> {
        let sel = |f: &MonthlyField| f.select_rows(grid.clone(), offset);
        Ok(Self {
            lsm: sel(&self.lsm)?,
            slt: sel(&self.slt)?,
            orography: sel(&self.orography)?,
            cvh: sel(&self.cvh)?,
            cvl: sel(&self.cvl)?,
            tisr_cycle: self.tisr_cycle.iter().map(sel).collect::<Result<_>>()?,
        })
    }

    /// Block-mean coarsening of every channel.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let c = |f: &MonthlyField| f.coarsen(factor);
        Ok(Self {
            lsm: c(&self.lsm)?,
            slt: c(&self.slt)?,
            orography: c(&self.orography)?,
            cvh: c(&self.cvh)?,
            cvl: c(&self.cvl)?,
            tisr_cycle: self.tisr_cycle.iter().map(c).collect::<Result<_>>()?,
        })
    }
}
