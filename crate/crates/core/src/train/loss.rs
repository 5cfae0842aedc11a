//! Latitude-weighted RMSE training loss.
//!
//! For each sample `n` and target channel `w`:
//! `s = sqrt( (1 / (n_lat * n_lon)) * sum_j sum_k L(j) * (pred - truth)^2 )`,
//! and the batch loss is the mean of `s` over every `(n, w)` pair. `L(j)`
//! sits inside the per-cell mean, so a uniform offset `d` gives
//! `|d| * sqrt(sum_j L(j) / n_lat)`.

use crate::data::LatWeights;
use crate::error::{DuneError, Result};
use crate::net::{Real, Tensor};

/// Batch loss over concatenated `(sample, channel)` grids of
/// `weights.len() * n_lon` cells each.
pub fn weighted_loss(pred: &[f64], truth: &[f64], weights: &LatWeights, n_lon: usize) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(DuneError::Shape(format!(
            "prediction has {} values, truth {}",
            pred.len(),
            truth.len()
        )));
    }
    let plane = weights.len() * n_lon;
    if plane == 0 || pred.is_empty() || !pred.len().is_multiple_of(plane) {
        return Err(DuneError::Shape(format!(
            "{} values are not a whole number of {}-cell grids",
            pred.len(),
            plane
        )));
    }
    let l = weights.as_slice();
    let grids = pred.len() / plane;
    let total: f64 = pred
        .chunks_exact(plane)
        .zip(truth.chunks_exact(plane))
        .map(|(p, t)| grid_term(p, t, l, n_lon).sqrt())
        .sum();
    Ok(total / grids as f64)
}

/// `(1 / (n_lat * n_lon)) * sum L(j) d^2` for one grid.
fn grid_term(p: &[f64], t: &[f64], l: &[f64], n_lon: usize) -> f64 {
    let mut acc = 0.0;
    for (j, (pr, tr)) in p.chunks_exact(n_lon).zip(t.chunks_exact(n_lon)).enumerate() {
        let row: f64 = pr
            .iter()
            .zip(tr)
            .map(|(&a, &b)| {
                let d = a - b;
                d * d
            })
            .sum();
        acc += l[j] * row;
    }
    acc / p.len() as f64
}

/// Sum over channels of the per-grid loss for one sample, and the gradient
/// of that sum with respect to `pred`.
pub fn sample_loss_grad<R: Real>(pred: &Tensor<R>, truth: &Tensor<R>, weights: &[f64]) -> Result<(f64, Tensor<R>)> {
    if pred.shape() != truth.shape() || weights.len() != pred.h {
        return Err(DuneError::Shape(format!(
            "prediction {:?}, truth {:?}, {} latitude weights",
            pred.shape(),
            truth.shape(),
            weights.len()
        )));
    }
    let plane = pred.plane() as f64;
    let mut grad = Tensor::zeros(pred.c, pred.h, pred.w);
    let mut total = 0.0;
    for c in 0..pred.c {
        let p = pred.channel(c);
        let t = truth.channel(c);
        let mut q = 0.0;
        for (j, &lj) in weights.iter().enumerate() {
            for k in 0..pred.w {
                let i = j * pred.w + k;
                let d = p[i].to_f64_lossy() - t[i].to_f64_lossy();
                q += lj * d * d;
            }
        }
        let s = (q / plane).sqrt();
        total += s;
        if s > 0.0 {
            let g = &mut grad.data[c * pred.plane()..(c + 1) * pred.plane()];
            for (j, &lj) in weights.iter().enumerate() {
                for k in 0..pred.w {
                    let i = j * pred.w + k;
                    let d = p[i].to_f64_lossy() - t[i].to_f64_lossy();
                    g[i] = R::from_f64_lossy(lj * d / (plane * s));
                }
            }
        }
    }
    Ok((total, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::latitude_weights;

    #[test]
    fn zero_for_perfect_prediction() {
        let w = latitude_weights(&[30.0, 0.0, -30.0]);
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        assert_eq!(weighted_loss(&x, &x, &w, 4).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_closed_form() {
        let w = latitude_weights(&[0.0]);
        let t = vec![1.0; 8];
        let p: Vec<f64> = t.iter().map(|v| v - 2.5).collect();
        assert!((weighted_loss(&p, &t, &w, 8).unwrap() - 2.5).abs() < 1e-15);

        let w = latitude_weights(&[60.0, 20.0, -10.0, -50.0]);
        let t = vec![0.0; 4 * 6];
        let p = vec![0.7; 4 * 6];
        let expected = 0.7 * (w.as_slice().iter().sum::<f64>() / 4.0).sqrt();
        assert!((weighted_loss(&p, &t, &w, 6).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let w = latitude_weights(&[45.0, 15.0, -15.0, -45.0]);
        let truth = Tensor::from_vec(2, 4, 3, (0..24).map(|i| (i as f64 * 0.3).cos()).collect());
        let pred = Tensor::from_vec(2, 4, 3, (0..24).map(|i| (i as f64 * 0.7).sin()).collect());
        let (_, g) = sample_loss_grad(&pred, &truth, w.as_slice()).unwrap();
        let h = 1e-6;
        for i in 0..24 {
            let mut a = pred.clone();
            let mut b = pred.clone();
            a.data[i] += h;
            b.data[i] -= h;
            let fa = sample_loss_grad(&a, &truth, w.as_slice()).unwrap().0;
            let fb = sample_loss_grad(&b, &truth, w.as_slice()).unwrap().0;
            assert!(((fa - fb) / (2.0 * h) - g.data[i]).abs() < 1e-7);
        }
    }
}
