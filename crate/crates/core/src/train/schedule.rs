//! Cosine-annealed learning rate with a hold after the annealing period.

use serde::{Deserialize, Serialize};

/// What to hold once `epoch > t_max`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldPolicy {
    /// The epoch `t_max - 1` rate, the last nonzero one.
    #[default]
    LastNonzero,
    /// The epoch `t_max` rate (zero: training freezes).
    Floor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineSchedule {
    pub base_lr: f64,
    pub t_max: usize,
    pub hold: HoldPolicy,
}

impl Default for CosineSchedule {
    fn default() -> Self {
        Self {
            base_lr: 1e-3,
            t_max: 225,
            hold: HoldPolicy::default(),
        }
    }
}

impl CosineSchedule {
    /// `0.5 * lr * (1 + cos(pi * epoch / t_max))` for `epoch <= t_max`,
    /// floored at zero; afterwards the rate selected by `hold`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let e = if epoch <= self.t_max {
            epoch
        } else {
            match self.hold {
                HoldPolicy::LastNonzero => self.t_max.saturating_sub(1),
                HoldPolicy::Floor => self.t_max,
            }
        };
        if self.t_max == 0 {
            return self.base_lr;
        }
        let phase = std::f64::consts::PI * e as f64 / self.t_max as f64;
        (0.5 * self.base_lr * (1.0 + phase.cos())).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_hold() {
        let s = CosineSchedule::default();
        assert_eq!(s.lr_at(0), 1e-3);
        assert!(s.lr_at(225) < 1e-18);
        assert_eq!(s.lr_at(226), s.lr_at(224));
        assert_eq!(s.lr_at(499), s.lr_at(224));
        assert!(s.lr_at(224) > 0.0);
        let floor = CosineSchedule {
            hold: HoldPolicy::Floor,
            ..s
        };
        assert_eq!(floor.lr_at(300), floor.lr_at(225));
    }

    #[test]
    fn monotone_over_annealing() {
        let s = CosineSchedule::default();
        for e in 0..225 {
            assert!(s.lr_at(e + 1) <= s.lr_at(e));
        }
    }
}
