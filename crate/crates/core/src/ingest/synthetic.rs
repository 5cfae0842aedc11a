//! Seeded synthetic monthly corpus with the statistical shape of surface
//! temperature reanalysis: latitude-dependent mean, a hemispherically
//! flipped annual cycle, a linear warming trend and spatially smooth AR(1)
//! noise that is more persistent over the ocean.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::constants::ConstantChannels;
use crate::data::{GridSpec, MonthlyField, Stamp, VariableId};
use crate::error::Result;

/// Solar constant in W m⁻².
const SOLAR_CONSTANT: f64 = 1361.0;
const SECONDS_PER_DAY: f64 = 86400.0;
const OBLIQUITY_DEG: f64 = 23.44;
/// SST is warmer than the overlying air by this much.
const SST_OFFSET: f64 = 0.3;
/// Half-width (cells) of the box filter giving the noise spatial coherence.
const NOISE_SMOOTHING: usize = 1;

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub first_year: i32,
    pub years: usize,
    pub seed: u64,
    /// Stationary standard deviation of the AR(1) noise, K.
    pub noise_amplitude: f64,
    /// Warming rate, K per year (amplified towards the poles).
    pub trend_per_year: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            first_year: 1977,
            years: 42,
            seed: 7,
            noise_amplitude: 1.0,
            trend_per_year: 0.03,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub grid: Arc<GridSpec>,
    pub t2m: Vec<MonthlyField>,
    /// NaN over land.
    pub sst: Vec<MonthlyField>,
    pub tisr: Vec<MonthlyField>,
    pub constants: ConstantChannels,
}

/// (center lat, center lon, lat half-width, lon half-width), degrees.
const CONTINENTS: [(f64, f64, f64, f64); 6] = [
    (47.0, 262.0, 22.0, 35.0),
    (-15.0, 298.0, 28.0, 16.0),
    (52.0, 85.0, 20.0, 75.0),
    (5.0, 20.0, 30.0, 22.0),
    (-25.0, 134.0, 13.0, 20.0),
    (-82.0, 180.0, 12.0, 400.0),
];

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn wrap_dlon(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Smooth land fraction in (0, 1): the strongest continent membership.
pub fn land_fraction(lat: f64, lon: f64) -> f64 {
    CONTINENTS
        .iter()
        .map(|&(clat, clon, hlat, hlon)| {
            let d = ((lat - clat) / hlat).powi(2) + (wrap_dlon(lon, clon) / hlon).powi(2);
            logistic(8.0 * (1.0 - d.sqrt()))
        })
        .fold(0.0, f64::max)
}

/// Solar declination (radians) at the middle of calendar month `month`.
fn declination(month: u8) -> f64 {
    let day = 15.0 + 30.44 * (month as f64 - 1.0);
    OBLIQUITY_DEG.to_radians() * (2.0 * PI * (284.0 + day) / 365.0).sin()
}

/// Daily-mean top-of-atmosphere insolation accumulated over one day,
/// J m⁻², at latitude `lat` degrees in calendar month `month`.
pub fn daily_insolation(lat: f64, month: u8) -> f64 {
    let phi = lat.to_radians();
    let delta = declination(month);
    let x = -(phi.tan() * delta.tan());
    let h0 = if x >= 1.0 {
        0.0
    } else if x <= -1.0 {
        PI
    } else {
        x.acos()
    };
    let q = SOLAR_CONSTANT / PI * (h0 * phi.sin() * delta.sin() + phi.cos() * delta.cos() * h0.sin());
    q.max(0.0) * SECONDS_PER_DAY
}

struct Surface {
    lsm: Vec<f64>,
    orography: Vec<f64>,
}

fn surface(grid: &GridSpec) -> Surface {
    let (n_lat, n_lon) = (grid.n_lat(), grid.n_lon());
    let mut lsm = Vec::with_capacity(grid.len());
    let mut orography = Vec::with_capacity(grid.len());
    for j in 0..n_lat {
        let lat = grid.lat()[j];
        for k in 0..n_lon {
            let lon = grid.lon()[k];
            let l = land_fraction(lat, lon);
            let ridge = 0.5 * (1.0 + (3.0 * lon.to_radians()).sin() * (2.0 * lat.to_radians()).cos());
            lsm.push(l);
            orography.push(l * (200.0 + 1800.0 * ridge * ridge));
        }
    }
    Surface { lsm, orography }
}

fn constant_fields(grid: &Arc<GridSpec>, s: &Surface) -> Result<[MonthlyField; 5]> {
    let n_lon = grid.n_lon();
    let mut slt = Vec::with_capacity(grid.len());
    let mut cvh = Vec::with_capacity(grid.len());
    let mut cvl = Vec::with_capacity(grid.len());
    for (i, &l) in s.lsm.iter().enumerate() {
        let lat = grid.lat()[i / n_lon];
        let lon = grid.lon()[i % n_lon];
        let soil = 1.0 + (3.0 * (1.0 + (2.0 * lat.to_radians()).sin() * (3.0 * lon.to_radians()).cos())).floor();
        slt.push(if l >= 0.5 { soil as f32 } else { 0.0 });
        let boreal = (-((lat.abs() - 58.0) / 10.0).powi(2)).exp();
        let tropical = (-(lat / 12.0).powi(2)).exp();
        cvh.push((l * (0.7 * boreal + 0.6 * tropical)).clamp(0.0, 1.0) as f32);
        cvl.push((l * (0.2 + 0.3 * lat.to_radians().cos())).clamp(0.0, 1.0) as f32);
    }
    let f = |v, values: Vec<f32>| MonthlyField::new(v, None, grid.clone(), values);
    Ok([
        f(VariableId::Lsm, s.lsm.iter().map(|&x| x as f32).collect())?,
        f(VariableId::Slt, slt)?,
        f(VariableId::Orography, s.orography.iter().map(|&x| x as f32).collect())?,
        f(VariableId::Cvh, cvh)?,
        f(VariableId::Cvl, cvl)?,
    ])
}

/// Deterministic (noise-free) temperature at one cell, K.
fn mean_state(lat: f64, lsm: f64, orography: f64, month: u8) -> f64 {
    let s = lat.to_radians().sin();
    let base = 301.0 - 48.0 * s * s - 6.5e-3 * orography - 2.0 * lsm;
    let amp = 1.5 + 14.0 * s.abs() * (0.35 + 0.65 * lsm);
    let phase = -(2.0 * PI * (month as f64 - 1.0) / 12.0).cos();
    base + amp * phase * s.signum()
}

/// Linear warming component at one cell, K.
pub fn trend_component(cfg: &SyntheticConfig, lat: f64, stamp: Stamp) -> f64 {
    let t = (stamp.ordinal() - Stamp::month(cfg.first_year, 1).ordinal()) as f64 / 12.0;
    cfg.trend_per_year * (1.0 + lat.to_radians().sin().abs()) * t
}

/// Box-filtered white noise, rescaled to unit variance; longitude wraps,
/// latitude clamps.
fn smooth_noise(rng: &mut ChaCha8Rng, n_lat: usize, n_lon: usize) -> Vec<f64> {
    let white: Vec<f64> = (0..n_lat * n_lon).map(|_| StandardNormal.sample(rng)).collect();
    let r = NOISE_SMOOTHING as isize;
    let width = (2 * r + 1) as f64;
    let mut out = vec![0.0; white.len()];
    for j in 0..n_lat as isize {
        for k in 0..n_lon as isize {
            let mut acc = 0.0;
            for dj in -r..=r {
                let jj = (j + dj).clamp(0, n_lat as isize - 1) as usize;
                for dk in -r..=r {
                    let kk = (k + dk).rem_euclid(n_lon as isize) as usize;
                    acc += white[jj * n_lon + kk];
                }
            }
            out[j as usize * n_lon + k as usize] = acc / width;
        }
    }
    out
}

/// Generates `cfg.years` years of monthly fields on `grid`.
pub fn generate_synthetic_corpus(grid: &GridSpec, cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    grid.check_divisible(4)?;
    let grid = Arc::new(grid.clone());
    let (n_lat, n_lon) = (grid.n_lat(), grid.n_lon());
    let surf = surface(&grid);
    let constants = constant_fields(&grid, &surf)?;
    let phi: Vec<f64> = surf.lsm.iter().map(|l| 0.6 + 0.3 * (1.0 - l)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise: Vec<f64> = smooth_noise(&mut rng, n_lat, n_lon);
    let first = Stamp::month(cfg.first_year, 1);
    let last = Stamp::month(cfg.first_year + cfg.years as i32 - 1, 12);
    let stamps = if cfg.years == 0 {
        Vec::new()
    } else {
        Stamp::range(first, last)
    };

    let mut t2m = Vec::with_capacity(stamps.len());
    let mut sst = Vec::with_capacity(stamps.len());
    let mut tisr = Vec::with_capacity(stamps.len());
    for (step, &stamp) in stamps.iter().enumerate() {
        if step > 0 {
            let eps = smooth_noise(&mut rng, n_lat, n_lon);
            for ((n, e), p) in noise.iter_mut().zip(eps).zip(&phi) {
                *n = p * *n + (1.0 - p * p).sqrt() * e;
            }
        }
        let month = stamp.slot() as u8 + 1;
        let mut tv = Vec::with_capacity(grid.len());
        let mut sv = Vec::with_capacity(grid.len());
        let mut iv = Vec::with_capacity(grid.len());
        for j in 0..n_lat {
            let lat = grid.lat()[j];
            let trend = trend_component(cfg, lat, stamp);
            let ins = daily_insolation(lat, month) as f32;
            for k in 0..n_lon {
                let i = j * n_lon + k;
                let t = mean_state(lat, surf.lsm[i], surf.orography[i], month) + trend + cfg.noise_amplitude * noise[i];
                tv.push(t as f32);
                sv.push(if surf.lsm[i] >= 0.5 {
                    f32::NAN
                } else {
                    (t + SST_OFFSET) as f32
                });
                iv.push(ins);
            }
        }
        t2m.push(MonthlyField::new(VariableId::T2m, Some(stamp), grid.clone(), tv)?);
        sst.push(MonthlyField::new(VariableId::Sst, Some(stamp), grid.clone(), sv)?);
        tisr.push(MonthlyField::new(VariableId::Tisr, Some(stamp), grid.clone(), iv)?);
    }
    let cycle = (1..=12u8)
        .map(|m| {
            let values = (0..grid.len())
                .map(|i| daily_insolation(grid.lat()[i / n_lon], m) as f32)
                .collect();
            MonthlyField::new(VariableId::Tisr, None, grid.clone(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticCorpus {
        grid,
        t2m,
        sst,
        tisr,
        constants: ConstantChannels::new(constants, cycle)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_determinism() {
        let g = GridSpec::regular(32, 64).unwrap();
        let cfg = SyntheticConfig {
            years: 3,
            ..Default::default()
        };
        let a = generate_synthetic_corpus(&g, &cfg).unwrap();
        let b = generate_synthetic_corpus(&g, &cfg).unwrap();
        assert_eq!(a.t2m.len(), 36);
        assert_eq!(a.t2m, b.t2m);
        let bits = |fs: &[MonthlyField]| -> Vec<u32> {
            fs.iter().flat_map(|f| f.values.iter().map(|v| v.to_bits())).collect()
        };
        assert_eq!(bits(&a.sst), bits(&b.sst));
        let c = generate_synthetic_corpus(&g, &SyntheticConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.t2m, c.t2m);
    }

    #[test]
    fn rejects_indivisible_grid() {
        let g = GridSpec::regular(30, 64).unwrap();
        assert!(generate_synthetic_corpus(&g, &SyntheticConfig::default()).is_err());
    }

    #[test]
    fn sst_missing_exactly_over_land() {
        let g = GridSpec::regular(16, 32).unwrap();
        let c = generate_synthetic_corpus(
            &g,
            &SyntheticConfig {
                years: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for f in &c.sst {
            for (i, v) in f.values.iter().enumerate() {
                assert_eq!(v.is_nan(), c.constants.lsm.values[i] >= 0.5);
            }
        }
    }

    #[test]
    fn insolation_is_hemispherically_seasonal() {
        assert!(daily_insolation(45.0, 6) > daily_insolation(45.0, 12));
        assert!(daily_insolation(-45.0, 6) < daily_insolation(-45.0, 12));
        assert_eq!(daily_insolation(89.0, 12), 0.0);
        let eq = daily_insolation(0.0, 3) / SECONDS_PER_DAY;
        assert!((eq - SOLAR_CONSTANT / PI).abs() < 15.0);
    }
}
