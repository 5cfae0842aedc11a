use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Cadence, GridSpec, Stamp, VariableId};
use crate::error::{DuneError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Split {
    type Err = DuneError;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| DuneError::InvalidArgument(format!("unknown split `{s}`")))
    }
}

/// Inclusive calendar-year ranges of the three splits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train: (i32, i32),
    pub val: (i32, i32),
    pub test: (i32, i32),
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self::reanalysis()
    }
}

impl SplitConfig {
    /// 1980-2016 / 2017-2018 / 2019-2023: 444 / 24 / 60 months and
    /// 37 / 2 / 5 years.
    pub fn reanalysis() -> Self {
        Self {
            train: (1980, 2016),
            val: (2017, 2018),
            test: (2019, 2023),
        }
    }

    /// Seasonal experiments train on 36 years (1981-2016), giving
    /// 142 / 6 / 18 consecutive season pairs.
    pub fn reanalysis_seasonal() -> Self {
        Self {
            train: (1981, 2016),
            ..Self::reanalysis()
        }
    }

    /// The 42-year synthetic corpus starting 1977: three lead-in years,
    /// then 32 / 2 / 5 years.
    pub fn synthetic() -> Self {
        Self {
            train: (1980, 2011),
            val: (2012, 2013),
            test: (2014, 2018),
        }
    }

    pub fn range(&self, split: Split) -> (i32, i32) {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }

    /// Ranges must be non-empty, disjoint and ordered train < val < test.
    pub fn validate(&self) -> Result<()> {
        for s in Split::ALL {
            let (a, b) = self.range(s);
            if b < a {
                return Err(DuneError::Config(format!("split {s} ends before it starts")));
            }
        }
        if self.train.1 >= self.val.0 || self.val.1 >= self.test.0 {
            return Err(DuneError::Config(
                "splits must be disjoint and ordered train < val < test".into(),
            ));
        }
        Ok(())
    }

    /// The split whose years contain every month of `stamp`.
    pub fn split_of(&self, stamp: Stamp) -> Option<Split> {
        let months = stamp.months();
        Split::ALL.into_iter().find(|&s| {
            let (a, b) = self.range(s);
            months.iter().all(|&(y, _)| y >= a && y <= b)
        })
    }

    /// Complete stamps of `cadence` lying wholly inside the split's years.
    pub fn targets(&self, split: Split, cadence: Cadence) -> Vec<Stamp> {
        let (a, b) = self.range(split);
        complete_stamps(cadence, a, b)
    }

    /// First target stamps of every `window`-long sample in `split`.
    ///
    /// Targets lie inside the split. Monthly and annual inputs may come
    /// from earlier data (not before `earliest_input`); seasonal samples
    /// are consecutive pairs with inputs inside the split too.
    pub fn sample_starts(&self, split: Split, cadence: Cadence, window: usize, earliest_input: Stamp) -> Vec<Stamp> {
        let targets = self.targets(split, cadence);
        let Some(&first) = targets.first() else {
            return Vec::new();
        };
        let earliest = match cadence {
            Cadence::Seasonal => first.max(earliest_input),
            _ => earliest_input,
        };
        let w = window as i64;
        targets
            .iter()
            .enumerate()
            .filter(|&(i, t)| i + window <= targets.len() && t.offset(-w) >= earliest)
            .map(|(_, &t)| t)
            .collect()
    }
}

fn complete_stamps(cadence: Cadence, first_year: i32, last_year: i32) -> Vec<Stamp> {
    use crate::data::Season;
    match cadence {
        Cadence::Monthly => Stamp::range(Stamp::month(first_year, 1), Stamp::month(last_year, 12)),
        Cadence::Seasonal => Stamp::range(
            Stamp::season(first_year, Season::Mam),
            Stamp::season(last_year, Season::Son),
        ),
        Cadence::Annual => Stamp::range(Stamp::Year(first_year), Stamp::Year(last_year)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    ReanalysisFile,
    Synthetic,
}

/// Written next to ingested data: where it came from and how it is split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub source: DataSource,
    pub grid: GridSpec,
    pub time_range: (Stamp, Stamp),
    pub variables: Vec<VariableId>,
    pub split: SplitConfig,
    /// Ocean cells where SST was missing and T2m was used.
    #[serde(default)]
    pub blend_fallbacks: usize,
}

pub const DATASET_MANIFEST: &str = "dataset.json";

#[cfg(test)]
mod tests {
    use super::*;

    fn count(c: &SplitConfig, cadence: Cadence, s: Split) -> usize {
        c.sample_starts(s, cadence, 1, Stamp::from_ordinal(cadence, 0)).len()
    }

    #[test]
    fn reanalysis_counts() {
        let m = SplitConfig::reanalysis();
        let s = SplitConfig::reanalysis_seasonal();
        let got: Vec<usize> = Split::ALL.iter().map(|&x| count(&m, Cadence::Monthly, x)).collect();
        assert_eq!(got, vec![444, 24, 60]);
        let got: Vec<usize> = Split::ALL.iter().map(|&x| count(&s, Cadence::Seasonal, x)).collect();
        assert_eq!(got, vec![142, 6, 18]);
        let got: Vec<usize> = Split::ALL.iter().map(|&x| count(&m, Cadence::Annual, x)).collect();
        assert_eq!(got, vec![37, 2, 5]);
    }

    #[test]
    fn validation_and_membership() {
        assert!(SplitConfig::synthetic().validate().is_ok());
        let bad = SplitConfig {
            val: (2016, 2018),
            ..SplitConfig::reanalysis()
        };
        assert!(bad.validate().is_err());
        let c = SplitConfig::reanalysis();
        assert_eq!(c.split_of(Stamp::month(2017, 1)), Some(Split::Val));
        assert_eq!(c.split_of(Stamp::season(2017, crate::data::Season::Djf)), None);
        assert_eq!(c.split_of(Stamp::month(1979, 12)), None);
    }

    #[test]
    fn window_starts_leave_room_for_targets() {
        let c = SplitConfig::synthetic();
        let starts = c.sample_starts(Split::Test, Cadence::Monthly, 12, Stamp::month(1977, 1));
        assert_eq!(starts.len(), 60 - 11);
        assert_eq!(starts[0], Stamp::month(2014, 1));
    }
}
