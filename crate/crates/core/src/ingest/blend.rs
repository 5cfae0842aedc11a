use crate::data::{MonthlyField, VariableId};
use crate::error::{DuneError, Result};

/// Land/sea threshold used when the configuration does not override it.
pub const DEFAULT_LSM_THRESHOLD: f64 = 0.5;

/// Blended surface temperature plus the number of ocean cells where SST
/// was missing and T2m was used instead.
#[derive(Clone, Debug)]
pub struct Blended {
    pub field: MonthlyField,
    pub fallback_count: usize,
}

/// T2m where `lsm >= threshold`, SST elsewhere (T2m where SST is missing).
pub fn blend_sst_t2m(t2m: &MonthlyField, sst: &MonthlyField, lsm: &MonthlyField, threshold: f64) -> Result<Blended> {
    t2m.grid.ensure_same(&sst.grid, "sst")?;
    t2m.grid.ensure_same(&lsm.grid, "lsm")?;
    let stamp = t2m.stamp_or_err()?;
    let sst_stamp = sst.stamp_or_err()?;
    if stamp != sst_stamp {
        return Err(DuneError::StampMismatch {
            expected: stamp,
            actual: sst_stamp,
        });
    }
    let mut fallback_count = 0;
    let values: Vec<f32> = t2m
        .values
        .iter()
        .zip(&sst.values)
        .zip(&lsm.values)
        .map(|((&t, &s), &m)| {
            if m as f64 >= threshold {
                t
            } else if s.is_finite() {
                s
            } else {
                fallback_count += 1;
                t
            }
        })
        .collect();
    let field = MonthlyField::new(VariableId::BlendedT, Some(stamp), t2m.grid.clone(), values)?;
    Ok(Blended { field, fallback_count })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::{GridSpec, Stamp};

    fn fields(lsm: Vec<f32>) -> (MonthlyField, MonthlyField, MonthlyField) {
        let g = Arc::new(GridSpec::regular(4, 8).unwrap());
        let s = Some(Stamp::month(1990, 7));
        let t2m = MonthlyField::new(
            VariableId::T2m,
            s,
            g.clone(),
            (0..32).map(|i| 270.0 + i as f32).collect(),
        )
        .unwrap();
        let sst = MonthlyField::new(
            VariableId::Sst,
            s,
            g.clone(),
            (0..32).map(|i| 280.0 - i as f32 * 0.5).collect(),
        )
        .unwrap();
        let lsm = MonthlyField::new(VariableId::Lsm, None, g, lsm).unwrap();
        (t2m, sst, lsm)
    }

    #[test]
    fn all_land_and_all_ocean() {
        let (t, s, l) = fields(vec![1.0; 32]);
        assert_eq!(blend_sst_t2m(&t, &s, &l, 0.5).unwrap().field.values, t.values);
        let (t, s, l) = fields(vec![0.0; 32]);
        assert_eq!(blend_sst_t2m(&t, &s, &l, 0.5).unwrap().field.values, s.values);
    }

    #[test]
    fn checkerboard_matches_point_select() {
        let lsm: Vec<f32> = (0..32).map(|i| ((i / 8 + i % 8) % 2) as f32).collect();
        let (t, s, l) = fields(lsm.clone());
        let out = blend_sst_t2m(&t, &s, &l, 0.5).unwrap();
        for (i, &m) in lsm.iter().enumerate() {
            let want = if m >= 0.5 { t.values[i] } else { s.values[i] };
            assert_eq!(out.field.values[i], want);
        }
    }

    #[test]
    fn missing_sst_falls_back_and_is_counted() {
        let (t, mut s, l) = fields(vec![0.0; 32]);
        s.values[3] = f32::NAN;
        let s = s.with_values(s.values.clone()).unwrap();
        let out = blend_sst_t2m(&t, &s, &l, 0.5).unwrap();
        assert_eq!(out.fallback_count, 1);
        assert_eq!(out.field.values[3], t.values[3]);
        assert!(out.field.missing.is_none());
    }

    #[test]
    fn stamp_mismatch() {
        let (t, s, l) = fields(vec![0.0; 32]);
        let mut s2 = s.clone();
        s2.stamp = Some(Stamp::month(1990, 8));
        assert!(matches!(
            blend_sst_t2m(&t, &s2, &l, 0.5),
            Err(DuneError::StampMismatch { .. })
        ));
    }
}
