use serde::{Deserialize, Serialize};

use crate::error::{DuneError, Result};

/// Min-max scaling statistics for one input channel.
///
/// Fit on the training period only; values outside `[x_min, x_max]` map
/// outside `[0, 1]` and are never clipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    channel: String,
    x_min: f64,
    x_max: f64,
}

impl NormStats {
    pub fn new(channel: impl Into<String>, x_min: f64, x_max: f64) -> Result<Self> {
        let channel = channel.into();
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(DuneError::Config(format!(
                "non-finite normalization bounds for `{channel}`"
            )));
        }
        if x_max <= x_min {
            return Err(DuneError::DegenerateStats { channel, value: x_min });
        }
        Ok(Self { channel, x_min, x_max })
    }

    /// Min/max over every finite value yielded by `values`.
    pub fn fit<I>(channel: impl Into<String>, values: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<f64>,
    {
        let (lo, hi) = values
            .into_iter()
            .map(Into::into)
            .filter(|v: &f64| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let channel = channel.into();
        if !lo.is_finite() {
            return Err(DuneError::Config(format!("no finite samples for `{channel}`")));
        }
        Self::new(channel, lo, hi)
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    fn range(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// `(x - x_min) / (x_max - x_min)`
    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.x_min) / self.range()
    }

    pub fn denormalize(&self, z: f64) -> f64 {
        z.mul_add(self.range(), self.x_min)
    }

    pub fn normalize_slice(&self, xs: &[f32]) -> Vec<f32> {
        xs.iter().map(|&x| self.normalize(x as f64) as f32).collect()
    }

    pub fn denormalize_slice(&self, zs: &[f32]) -> Vec<f32> {
        zs.iter().map(|&z| self.denormalize(z as f64) as f32).collect()
    }
}

/// One set of statistics per network channel family, frozen at training time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    /// Temperature anomaly (inputs and targets share it).
    pub anomaly: NormStats,
    /// A single set over every TISR sample.
    pub tisr: NormStats,
    /// `lsm, slt, orography, cvh, cvl`, in stack order.
    pub constants: Vec<NormStats>,
}

impl ChannelStats {
    /// Stable 64-bit FNV-1a digest of every bound, as hex.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for s in std::iter::once(&self.anomaly)
            .chain(std::iter::once(&self.tisr))
            .chain(&self.constants)
        {
            feed(s.channel.as_bytes());
            feed(&s.x_min.to_le_bytes());
            feed(&s.x_max.to_le_bytes());
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_and_midpoint() {
        let s = NormStats::new("t", 250.0, 310.0).unwrap();
        assert_eq!(s.normalize(250.0), 0.0);
        assert_eq!(s.normalize(310.0), 1.0);
        assert_eq!(s.normalize(280.0), 0.5);
        assert_eq!(s.denormalize(0.0), 250.0);
        assert_eq!(s.denormalize(1.0), 310.0);
        assert!(s.normalize(320.0) > 1.0);
    }

    #[test]
    fn degenerate_rejected_at_construction() {
        assert!(matches!(
            NormStats::new("c", 1.0, 1.0),
            Err(DuneError::DegenerateStats { .. })
        ));
        assert!(matches!(
            NormStats::fit("c", [2.0f32, 2.0, 2.0]),
            Err(DuneError::DegenerateStats { .. })
        ));
    }

    #[test]
    fn fit_ignores_nan() {
        let s = NormStats::fit("c", [1.0f32, f32::NAN, 3.0]).unwrap();
        assert_eq!((s.x_min(), s.x_max()), (1.0, 3.0));
    }
}
