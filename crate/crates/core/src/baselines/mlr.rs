//! Per-gridpoint multiple linear regression on a coarse grid.
//!
//! Predictors: intercept, the prior-step anomaly at the same gridpoint,
//! and (monthly and seasonal cadences) sine and cosine of the target's
//! calendar angle. Fitted by least squares through a QR factorization;
//! rank-deficient gridpoints predict a zero anomaly and are counted.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Cadence, GridSpec, MonthlyField, Stamp, VariableId};
use crate::error::{DuneError, Result};
use crate::forecast::bilinear_regrid;

/// Coarse-grid target resolution in degrees.
pub const MLR_RESOLUTION: f64 = 2.0;

/// Relative pivot size below which a design is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Design row for predicting `target` from the prior-step anomaly `x`.
pub fn mlr_features(cadence: Cadence, target: Stamp, x: f64) -> Vec<f64> {
    match cadence {
        Cadence::Annual => vec![1.0, x],
        _ => {
            let angle = 2.0 * std::f64::consts::PI * target.slot() as f64 / cadence.slots() as f64;
            vec![1.0, x, angle.sin(), angle.cos()]
        }
    }
}

/// Least-squares coefficients of `y ~ design`, or `None` when the design
/// is rank deficient.
pub fn least_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    if design.nrows() < design.ncols() {
        return None;
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = r
        .diagonal()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    if r.diagonal().iter().any(|v| v.abs() <= RANK_TOLERANCE * scale) {
        return None;
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlrModel {
    pub cadence: Cadence,
    /// Fine data grid and the block factor down to the fitting grid.
    pub grid: GridSpec,
    pub factor: usize,
    /// Per coarse gridpoint; `None` where the fit fell back to zero.
    pub coefficients: Vec<Option<Vec<f64>>>,
    pub fallback_count: usize,
}

impl MlrModel {
    fn coarse_grid(&self) -> Result<GridSpec> {
        self.grid.coarsened(self.factor)
    }

    /// Fits on every `(t - 1, t)` pair of `anomalies` whose target lies in
    /// `train_years`.
    pub fn fit(anomalies: &[MonthlyField], train_years: (i32, i32)) -> Result<Self> {
        let first = anomalies
            .first()
            .ok_or_else(|| DuneError::InvalidArgument("no anomalies to fit".into()))?;
        let grid = first.grid.clone();
        let cadence = first.stamp_or_err()?.cadence();
        let factor = grid.coarsen_factor(MLR_RESOLUTION);
        let coarse: BTreeMap<Stamp, Vec<f32>> = anomalies
            .iter()
            .map(|f| Ok((f.stamp_or_err()?, f.coarsen(factor)?.values)))
            .collect::<Result<_>>()?;
        let pairs: Vec<(Stamp, &Vec<f32>, &Vec<f32>)> = coarse
            .iter()
            .filter(|(s, _)| {
                s.months()
                    .iter()
                    .all(|&(y, _)| y >= train_years.0 && y <= train_years.1)
            })
            .filter_map(|(s, y)| coarse.get(&s.prev()).map(|x| (*s, x, y)))
            .collect();
        let n_cells = coarse.values().next().map_or(0, Vec::len);
        let coefficients: Vec<Option<Vec<f64>>> = (0..n_cells)
            .into_par_iter()
            .map(|i| {
                let rows: Vec<(Vec<f64>, f64)> = pairs
                    .iter()
                    .filter(|(_, x, y)| x[i].is_finite() && y[i].is_finite())
                    .map(|(s, x, y)| (mlr_features(cadence, *s, x[i] as f64), y[i] as f64))
                    .collect();
                let p = mlr_features(cadence, Stamp::from_ordinal(cadence, 0), 0.0).len();
                let design =
                    DMatrix::from_row_iterator(rows.len(), p, rows.iter().flat_map(|(r, _)| r.iter().copied()));
                let y = DVector::from_iterator(rows.len(), rows.iter().map(|(_, v)| *v));
                least_squares(&design, &y).map(|c| c.iter().copied().collect())
            })
            .collect();
        let fallback_count = coefficients.iter().filter(|c| c.is_none()).count();
        if fallback_count > 0 {
            log::warn!("MLR: {fallback_count} rank-deficient gridpoints predict climatology");
        }
        Ok(Self {
            cadence,
            grid: (*grid).clone(),
            factor,
            coefficients,
            fallback_count,
        })
    }

    /// Coarse-grid forecast of `target` from the prior-step anomaly.
    pub fn forecast_coarse(&self, prior: &MonthlyField, target: Stamp) -> Result<MonthlyField> {
        self.grid.ensure_same(&prior.grid, "MLR predictor")?;
        if prior.stamp != Some(target.prev()) {
            return Err(DuneError::StampMismatch {
                expected: target.prev(),
                actual: prior.stamp_or_err()?,
            });
        }
        let x = prior.coarsen(self.factor)?;
        let values = self
            .coefficients
            .iter()
            .zip(&x.values)
            .map(|(c, &xi)| match c {
                Some(c) => mlr_features(self.cadence, target, xi as f64)
                    .iter()
                    .zip(c)
                    .map(|(a, b)| a * b)
                    .sum::<f64>() as f32,
                None => 0.0,
            })
            .collect();
        MonthlyField::new(
            VariableId::BlendedT,
            Some(target),
            Arc::new(self.coarse_grid()?),
            values,
        )
    }

    /// Forecast interpolated back onto the data grid for scoring.
    pub fn forecast(&self, prior: &MonthlyField, target: Stamp) -> Result<MonthlyField> {
        let coarse = self.forecast_coarse(prior, target)?;
        if self.factor == 1 {
            return MonthlyField::new(coarse.variable, coarse.stamp, prior.grid.clone(), coarse.values);
        }
        bilinear_regrid(&coarse, &prior.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = 5;
            let rows: Vec<[f64; 3]> = (0..n)
                .map(|_| [1.0, rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)])
                .collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let design = DMatrix::from_row_iterator(n, 3, rows.iter().flatten().copied());
            let b = least_squares(&design, &DVector::from_vec(y.clone())).unwrap();
            // X^T X b = X^T y, solved by Cramer's rule
            let mut a = [[0.0; 3]; 3];
            let mut r = [0.0; 3];
            for (row, yi) in rows.iter().zip(&y) {
                for i in 0..3 {
                    r[i] += row[i] * yi;
                    for j in 0..3 {
                        a[i][j] += row[i] * row[j];
                    }
                }
            }
            let det = |m: [[f64; 3]; 3]| {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            };
            let d = det(a);
            for k in 0..3 {
                let mut m = a;
                for i in 0..3 {
                    m[i][k] = r[i];
                }
                assert!((det(m) / d - b[k]).abs() < 1e-10, "{} vs {}", det(m) / d, b[k]);
            }
        }
    }

    #[test]
    fn rank_deficiency_detected() {
        let design = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(least_squares(&design, &DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).is_none());
    }

    #[test]
    fn exact_linear_data_is_reproduced() {
        let g = Arc::new(GridSpec::regular(2, 4).unwrap());
        let stamps = Stamp::range(Stamp::month(2000, 1), Stamp::month(2004, 12));
        let coef = [0.3, 0.8, -0.2, 0.5];
        let mut x = 5.0f64;
        let mut fields = Vec::new();
        for (i, &s) in stamps.iter().enumerate() {
            if i > 0 {
                x = mlr_features(Cadence::Monthly, s, x)
                    .iter()
                    .zip(&coef)
                    .map(|(a, b)| a * b)
                    .sum();
            }
            fields.push(MonthlyField::filled(VariableId::BlendedT, Some(s), g.clone(), x as f32));
        }
        let model = MlrModel::fit(&fields, (2000, 2003)).unwrap();
        assert_eq!(model.fallback_count, 0);
        for c in &model.coefficients {
            let c = c.as_ref().unwrap();
            for (a, b) in c.iter().zip(&coef) {
                assert!((a - b).abs() < 1e-4, "{c:?}");
            }
        }
        let last = fields.len() - 1;
        let f = model.forecast(&fields[last - 1], stamps[last]).unwrap();
        assert!(f.values.iter().all(|v| (v - fields[last].values[0]).abs() < 1e-4));
    }
}
