//! Tercile categories and the Heidke skill score.

use serde::{Deserialize, Serialize};

use super::region::RegionMask;
use crate::error::{DuneError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "B")]
    Below,
    #[serde(rename = "N")]
    Near,
    #[serde(rename = "A")]
    Above,
    #[serde(rename = ".")]
    Invalid,
}

impl Category {
    pub fn code(self) -> char {
        match self {
            Category::Below => 'B',
            Category::Near => 'N',
            Category::Above => 'A',
            Category::Invalid => '.',
        }
    }

    pub fn from_code(c: char) -> Result<Self> {
        Ok(match c {
            'B' => Category::Below,
            'N' => Category::Near,
            'A' => Category::Above,
            '.' => Category::Invalid,
            _ => return Err(DuneError::InvalidArgument(format!("unknown category code `{c}`"))),
        })
    }

    fn is_extreme(self) -> bool {
        matches!(self, Category::Below | Category::Above)
    }
}

/// Below if `v < p33`, above if `v > p66`, near otherwise (ties included);
/// invalid where any input is not finite.
pub fn categorize(values: &[f32], p33: &[f32], p66: &[f32]) -> Result<Vec<Category>> {
    if values.len() != p33.len() || values.len() != p66.len() {
        return Err(DuneError::Shape(format!(
            "{} values, {} and {} thresholds",
            values.len(),
            p33.len(),
            p66.len()
        )));
    }
    Ok(values
        .iter()
        .zip(p33.iter().zip(p66))
        .map(|(&v, (&lo, &hi))| {
            if !(v.is_finite() && lo.is_finite() && hi.is_finite()) {
                Category::Invalid
            } else if v < lo {
                Category::Below
            } else if v > hi {
                Category::Above
            } else {
                Category::Near
            }
        })
        .collect())
}

/// Counts over valid region cells, with below/above as the event.
///
/// `hits`: same extreme category; `correct_negatives`: both near;
/// `misses`: observed extreme not matched; `false_alarms`: forecast
/// extreme, observed near. Matching categories are
/// `hits + correct_negatives`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub hits: u64,
    pub misses: u64,
    pub false_alarms: u64,
    pub correct_negatives: u64,
    pub total: u64,
}

impl ContingencyTable {
    pub fn from_categories(forecast: &[Category], observed: &[Category], region: &RegionMask) -> Result<Self> {
        if forecast.len() != observed.len() || forecast.len() != region.mask.len() {
            return Err(DuneError::Shape(format!(
                "{} forecast and {} observed categories, region of {}",
                forecast.len(),
                observed.len(),
                region.mask.len()
            )));
        }
        let mut t = Self::default();
        for ((&f, &o), &m) in forecast.iter().zip(observed).zip(&region.mask) {
            if !m || f == Category::Invalid || o == Category::Invalid {
                continue;
            }
            t.total += 1;
            match (f == o, o.is_extreme()) {
                (true, true) => t.hits += 1,
                (true, false) => t.correct_negatives += 1,
                (false, true) => t.misses += 1,
                (false, false) => t.false_alarms += 1,
            }
        }
        Ok(t)
    }

    /// Number of matching categories.
    pub fn matches(&self) -> u64 {
        self.hits + self.correct_negatives
    }

    /// `E = T / 3` as an exact fraction `(T, 3)`.
    pub fn expected(&self) -> (u64, u64) {
        (self.total, 3)
    }

    /// `100 (H - E) / (T - E) = 100 (3H - T) / (2T)`, with the ratio
    /// formed from exact integers.
    pub fn hss(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(DuneError::InvalidArgument("no valid category pairs".into()));
        }
        let num = 3 * self.matches() as i128 - self.total as i128;
        let den = 2 * self.total as i128;
        Ok(100.0 * num as f64 / den as f64)
    }
}

/// Heidke skill score in percent over a region, with its table.
pub fn hss(forecast: &[Category], observed: &[Category], region: &RegionMask) -> Result<(f64, ContingencyTable)> {
    let t = ContingencyTable::from_categories(forecast, observed, region)?;
    Ok((t.hss()?, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Category::*;

    fn region(n: usize) -> RegionMask {
        RegionMask::new("r".into(), vec![true; n], String::new()).unwrap()
    }

    #[test]
    fn tie_rule() {
        let c = categorize(&[0.9, 1.0, 1.5, 2.0, 2.1], &[1.0; 5], &[2.0; 5]).unwrap();
        assert_eq!(c, vec![Below, Near, Near, Near, Above]);
        assert_eq!(categorize(&[f32::NAN], &[0.0], &[1.0]).unwrap(), vec![Invalid]);
    }

    #[test]
    fn extremes() {
        let obs = [Below, Near, Above, Near, Below, Above];
        let wrong = [Near, Above, Below, Below, Above, Near];
        assert_eq!(hss(&obs, &obs, &region(6)).unwrap().0, 100.0);
        assert_eq!(hss(&wrong, &obs, &region(6)).unwrap().0, -50.0);
        let two = [Below, Near, Below, Below, Above, Near];
        assert_eq!(hss(&two, &obs, &region(6)).unwrap().0, 0.0);
    }

    #[test]
    fn table_adds_up() {
        let f = [Below, Near, Above, Near, Invalid, Above];
        let o = [Below, Above, Above, Near, Near, Near];
        let t = ContingencyTable::from_categories(&f, &o, &region(6)).unwrap();
        assert_eq!(t.total, 5);
        assert_eq!(t.hits + t.misses + t.false_alarms + t.correct_negatives, t.total);
        assert_eq!((t.hits, t.misses, t.false_alarms, t.correct_negatives), (2, 1, 1, 1));
    }

    #[test]
    fn codes_round_trip() {
        for c in [Below, Near, Above, Invalid] {
            assert_eq!(Category::from_code(c.code()).unwrap(), c);
        }
    }
}
