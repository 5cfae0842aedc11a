use std::collections::BTreeMap;

use crate::data::{Cadence, MonthlyField, Stamp};
use crate::error::{DuneError, Result};

/// Per-gridpoint mean of the months making up each requested season or
/// year (DJF of year `y` uses December `y-1`).
pub fn seasonal_annual_mean_inputs(monthly: &[MonthlyField], stamps: &[Stamp]) -> Result<Vec<MonthlyField>> {
    let by_stamp: BTreeMap<Stamp, &MonthlyField> = monthly
        .iter()
        .map(|f| Ok((f.stamp_or_err()?, f)))
        .collect::<Result<_>>()?;
    stamps
        .iter()
        .map(|&s| {
            let months = s
                .months()
                .into_iter()
                .map(|(y, m)| {
                    by_stamp
                        .get(&Stamp::month(y, m))
                        .copied()
                        .ok_or_else(|| DuneError::Incomplete(format!("{s} lacks {y:04}-{m:02}")))
                })
                .collect::<Result<Vec<_>>>()?;
            mean_field(&months, s)
        })
        .collect()
}

fn mean_field(months: &[&MonthlyField], stamp: Stamp) -> Result<MonthlyField> {
    let first = months[0];
    let n = months.len() as f64;
    let mut acc = vec![0.0f64; first.values.len()];
    for f in months {
        first.grid.ensure_same(&f.grid, "aggregation")?;
        for (a, &v) in acc.iter_mut().zip(&f.values) {
            *a += v as f64;
        }
    }
    let values = acc.into_iter().map(|v| (v / n) as f32).collect();
    MonthlyField::new(first.variable, Some(stamp), first.grid.clone(), values)
}

/// Every season or year fully covered by `monthly`, in order.
pub fn aggregate_complete(monthly: &[MonthlyField], cadence: Cadence) -> Result<Vec<MonthlyField>> {
    let stamps: Vec<Stamp> = monthly.iter().map(MonthlyField::stamp_or_err).collect::<Result<_>>()?;
    let (Some(&first), Some(&last)) = (stamps.iter().min(), stamps.iter().max()) else {
        return Ok(Vec::new());
    };
    let present: std::collections::BTreeSet<Stamp> = stamps.into_iter().collect();
    let candidates = Stamp::range(
        Stamp::from_ordinal(cadence, first.year() as i64 * cadence.slots() as i64),
        Stamp::from_ordinal(
            cadence,
            (last.year() as i64 + 1) * cadence.slots() as i64 + cadence.slots() as i64 - 1,
        ),
    );
    let complete: Vec<Stamp> = candidates
        .into_iter()
        .filter(|s| s.months().iter().all(|&(y, m)| present.contains(&Stamp::month(y, m))))
        .collect();
    seasonal_annual_mean_inputs(monthly, &complete)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::{GridSpec, Season, VariableId};

    fn months(first: Stamp, last: Stamp) -> Vec<MonthlyField> {
        let g = Arc::new(GridSpec::regular(2, 4).unwrap());
        Stamp::range(first, last)
            .into_iter()
            .map(|s| MonthlyField::filled(VariableId::BlendedT, Some(s), g.clone(), s.ordinal() as f32))
            .collect()
    }

    #[test]
    fn identical_months_give_same_field() {
        let g = Arc::new(GridSpec::regular(2, 4).unwrap());
        let v: Vec<f32> = (0..8).map(|i| 271.3 + i as f32 * 0.77).collect();
        let f: Vec<MonthlyField> = (3..=5)
            .map(|m| {
                MonthlyField::new(VariableId::BlendedT, Some(Stamp::month(2000, m)), g.clone(), v.clone()).unwrap()
            })
            .collect();
        let out = seasonal_annual_mean_inputs(&f, &[Stamp::season(2000, Season::Mam)]).unwrap();
        assert_eq!(out[0].values, v);
    }

    #[test]
    fn djf_uses_previous_december() {
        let f = months(Stamp::month(1999, 12), Stamp::month(2000, 2));
        let out = seasonal_annual_mean_inputs(&f, &[Stamp::season(2000, Season::Djf)]).unwrap();
        let want = (Stamp::month(1999, 12).ordinal() + 1) as f32;
        assert_eq!(out[0].values[0], want);
        assert!(matches!(
            seasonal_annual_mean_inputs(&f[1..], &[Stamp::season(2000, Season::Djf)]),
            Err(DuneError::Incomplete(_))
        ));
    }

    #[test]
    fn complete_counts_on_reanalysis_calendar() {
        let f = months(Stamp::month(1980, 1), Stamp::month(2023, 12));
        let seasons = aggregate_complete(&f, Cadence::Seasonal).unwrap();
        assert_eq!(seasons.first().unwrap().stamp, Some(Stamp::season(1980, Season::Mam)));
        assert_eq!(seasons.len(), 44 * 4 - 1);
        assert_eq!(aggregate_complete(&f, Cadence::Annual).unwrap().len(), 44);
    }
}
