//! From a loaded dataset to normalized training samples.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{anomalize, build_climatology, Cadence, ClimatologyTable, GridSpec, MonthlyField, Stamp};
use crate::error::{DuneError, Result};
use crate::ingest::{check_window, fit_channel_stats, Dataset, Split, SplitConfig, StackBuilder, TisrAlignment};

/// Everything that fixes how samples are cut from a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub cadence: Cadence,
    pub window: usize,
    pub splits: SplitConfig,
    /// Years whose mean defines the anomalies.
    pub climatology_base: (i32, i32),
    pub tisr_alignment: TisrAlignment,
}

impl ExperimentConfig {
    /// Monthly, one-step settings for the synthetic corpus: climatology
    /// and splits both within 1977-2018.
    pub fn synthetic(window: usize) -> Self {
        let splits = SplitConfig::synthetic();
        Self {
            cadence: Cadence::Monthly,
            window,
            splits,
            climatology_base: splits.train,
            tisr_alignment: TisrAlignment::default(),
        }
    }
}

/// One training example: a normalized input stack and the normalized
/// anomalies of the `W` target stamps starting at `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub start: Stamp,
    pub input: Vec<f32>,
    pub target: Vec<f32>,
}

impl Sample {
    pub fn input_stamps(&self, window: usize) -> Vec<Stamp> {
        (1..=window as i64).rev().map(|i| self.start.offset(-i)).collect()
    }

    pub fn target_stamps(&self, window: usize) -> Vec<Stamp> {
        (0..window as i64).map(|i| self.start.offset(i)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SampleSet {
    pub split: Split,
    pub window: usize,
    pub channels: usize,
    pub n_lat: usize,
    pub n_lon: usize,
    /// Normalized latitude weights of the grid rows.
    pub lat_weights: Vec<f64>,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Anomalies, frozen statistics and a stack builder for one experiment.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub config: ExperimentConfig,
    pub grid: Arc<GridSpec>,
    pub climatology: ClimatologyTable,
    /// Contiguous anomaly series at the experiment cadence (K).
    pub anomalies: Vec<MonthlyField>,
    pub builder: StackBuilder,
    /// Stamps whose values entered the normalization statistics.
    pub stats_stamps: Vec<Stamp>,
}

impl PreparedData {
    pub fn prepare(dataset: &Dataset, config: ExperimentConfig) -> Result<Self> {
        check_window(config.window)?;
        config.splits.validate()?;
        let series = dataset.series(config.cadence)?;
        let climatology = build_climatology(&series, config.climatology_base, false)?;
        let anomalies = series
            .iter()
            .map(|f| anomalize(f, &climatology))
            .collect::<Result<Vec<_>>>()?;
        let train: Vec<&MonthlyField> = anomalies
            .iter()
            .filter(|f| f.stamp.and_then(|s| config.splits.split_of(s)) == Some(Split::Train))
            .collect();
        let stats_stamps = train.iter().filter_map(|f| f.stamp).collect();
        let stats = fit_channel_stats(
            train.iter().map(|f| f.values.as_slice()),
            &dataset.constants,
            config.cadence,
        )?;
        let builder = StackBuilder::new(stats, &dataset.constants, config.window, config.tisr_alignment)?;
        Ok(Self {
            config,
            grid: dataset.grid.clone(),
            climatology,
            anomalies,
            builder,
            stats_stamps,
        })
    }

    pub fn first_stamp(&self) -> Option<Stamp> {
        self.anomalies.first().and_then(|f| f.stamp)
    }

    /// Anomaly field at `stamp`, located by ordinal offset.
    pub fn anomaly(&self, stamp: Stamp) -> Result<&MonthlyField> {
        let first = self.first_stamp().ok_or(DuneError::MissingStamp(stamp))?;
        if first.cadence() != stamp.cadence() {
            return Err(DuneError::InvalidArgument(format!(
                "{stamp} is not a {} stamp",
                first.cadence()
            )));
        }
        let i = stamp.ordinal() - first.ordinal();
        usize::try_from(i)
            .ok()
            .and_then(|i| self.anomalies.get(i))
            .filter(|f| f.stamp == Some(stamp))
            .ok_or(DuneError::MissingStamp(stamp))
    }

    /// First-target stamps of every sample in `split`.
    pub fn sample_starts(&self, split: Split) -> Vec<Stamp> {
        let Some(first) = self.first_stamp() else {
            return Vec::new();
        };
        let last = self.anomalies.last().and_then(|f| f.stamp).unwrap_or(first);
        let w = self.config.window as i64;
        self.config
            .splits
            .sample_starts(split, self.config.cadence, self.config.window, first)
            .into_iter()
            .filter(|s| s.offset(w - 1) <= last)
            .collect()
    }

    pub fn sample(&self, start: Stamp) -> Result<Sample> {
        let w = self.config.window as i64;
        let inputs = (1..=w)
            .rev()
            .map(|i| self.anomaly(start.offset(-i)).map(|f| f.values.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        let stack = self.builder.build(&inputs, start.prev())?;
        let stats = &self.builder.stats().anomaly;
        let mut target = Vec::with_capacity(self.config.window * self.grid.len());
        for i in 0..w {
            target.extend(stats.normalize_slice(&self.anomaly(start.offset(i))?.values));
        }
        Ok(Sample {
            start,
            input: stack.data,
            target,
        })
    }

    pub fn samples(&self, split: Split) -> Result<SampleSet> {
        let samples = self
            .sample_starts(split)
            .into_iter()
            .map(|s| self.sample(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(SampleSet {
            split,
            window: self.config.window,
            channels: crate::ingest::channel_count(self.config.window),
            n_lat: self.grid.n_lat(),
            n_lon: self.grid.n_lon(),
            lat_weights: self.grid.latitude_weights().as_slice().to_vec(),
            samples,
        })
    }
}
