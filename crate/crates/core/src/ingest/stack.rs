use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::constants::ConstantChannels;
use crate::data::{Cadence, ChannelStats, GridSpec, NormStats, Stamp, VariableId};
use crate::error::{DuneError, Result};

/// Moving-window lengths the network supports.
pub const SUPPORTED_WINDOWS: [usize; 6] = [1, 2, 3, 4, 6, 12];

pub fn check_window(window: usize) -> Result<()> {
    if SUPPORTED_WINDOWS.contains(&window) {
        Ok(())
    } else {
        Err(DuneError::UnsupportedWindow(window))
    }
}

/// `2W + 5`: W anomaly months, W insolation months, five constants.
pub fn channel_count(window: usize) -> usize {
    2 * window + VariableId::CONSTANTS.len()
}

/// Which months the insolation channels describe.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TisrAlignment {
    /// The W months being forecast.
    #[default]
    Target,
    /// The W input months.
    Input,
}

/// Normalized network input, channel-major `(C, lat, lon)`.
///
/// Channel order: anomalies `t-W+1 ..= t`, insolation for the W aligned
/// months, then `lsm, slt, orography, cvh, cvl`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputStack {
    pub grid: Arc<GridSpec>,
    pub window: usize,
    pub data: Vec<f32>,
}

impl InputStack {
    pub fn channels(&self) -> usize {
        self.data.len() / self.grid.len()
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.grid.len();
        &self.data[c * n..(c + 1) * n]
    }
}

/// Stacks already-normalized grids in the fixed channel order.
pub fn assemble_input_stack(
    grid: &Arc<GridSpec>,
    anomalies: &[&[f32]],
    tisr: &[&[f32]],
    constants: [&[f32]; 5],
) -> Result<InputStack> {
    let window = anomalies.len();
    check_window(window)?;
    if tisr.len() != window {
        return Err(DuneError::Shape(format!(
            "{} insolation channels for a window of {window}",
            tisr.len()
        )));
    }
    let n = grid.len();
    let mut data = Vec::with_capacity(channel_count(window) * n);
    for ch in anomalies.iter().chain(tisr).chain(constants.iter()) {
        if ch.len() != n {
            return Err(DuneError::GridMismatch(format!(
                "channel of {} cells on a {}-cell grid",
                ch.len(),
                n
            )));
        }
        data.extend_from_slice(ch);
    }
    Ok(InputStack {
        grid: grid.clone(),
        window,
        data,
    })
}

/// Fits the per-channel statistics from training-period anomalies and the
/// time-invariant channels. `train_anomalies` must hold only stamps inside
/// the training split.
pub fn fit_channel_stats<'a, I>(
    train_anomalies: I,
    constants: &ConstantChannels,
    cadence: Cadence,
) -> Result<ChannelStats>
where
    I: IntoIterator<Item = &'a [f32]>,
{
    let anomaly = NormStats::fit("anomaly", train_anomalies.into_iter().flat_map(|s| s.iter().copied()))?;
    let tisr = NormStats::fit("tisr", tisr_samples(constants, cadence).into_iter().flatten())?;
    let constants = constants
        .ordered()
        .iter()
        .map(|f| NormStats::fit(f.variable.name(), f.values.iter().copied()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelStats {
        anomaly,
        tisr,
        constants,
    })
}

fn tisr_samples(constants: &ConstantChannels, cadence: Cadence) -> Vec<Vec<f32>> {
    (0..cadence.slots())
        .map(|slot| constants.tisr_for(Stamp::from_ordinal(cadence, slot as i64)))
        .collect()
}

/// Builds normalized stacks from raw anomalies (K) with frozen statistics.
#[derive(Clone, Debug)]
pub struct StackBuilder {
    grid: Arc<GridSpec>,
    stats: ChannelStats,
    window: usize,
    alignment: TisrAlignment,
    constants: Vec<Vec<f32>>,
    tisr: ConstantChannels,
}

impl StackBuilder {
    pub fn new(
        stats: ChannelStats,
        constants: &ConstantChannels,
        window: usize,
        alignment: TisrAlignment,
    ) -> Result<Self> {
        check_window(window)?;
        if stats.constants.len() != 5 {
            return Err(DuneError::Shape("expected five constant-channel statistics".into()));
        }
        let normalized = constants
            .ordered()
            .iter()
            .zip(&stats.constants)
            .map(|(f, s)| s.normalize_slice(&f.values))
            .collect();
        Ok(Self {
            grid: constants.grid().clone(),
            stats,
            window,
            alignment,
            constants: normalized,
            tisr: constants.clone(),
        })
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn stats(&self) -> &ChannelStats {
        &self.stats
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// `inputs` are the W raw anomaly grids ending at `last_input`.
    pub fn build(&self, inputs: &[&[f32]], last_input: Stamp) -> Result<InputStack> {
        if inputs.len() != self.window {
            return Err(DuneError::Shape(format!(
                "{} input months for a window of {}",
                inputs.len(),
                self.window
            )));
        }
        let w = self.window as i64;
        let anomalies: Vec<Vec<f32>> = inputs.iter().map(|a| self.stats.anomaly.normalize_slice(a)).collect();
        let first_tisr = match self.alignment {
            TisrAlignment::Target => last_input.next(),
            TisrAlignment::Input => last_input.offset(1 - w),
        };
        let tisr: Vec<Vec<f32>> = (0..w)
            .map(|i| {
                self.stats
                    .tisr
                    .normalize_slice(&self.tisr.tisr_for(first_tisr.offset(i)))
            })
            .collect();
        let a: Vec<&[f32]> = anomalies.iter().map(Vec::as_slice).collect();
        let t: Vec<&[f32]> = tisr.iter().map(Vec::as_slice).collect();
        let c = &self.constants;
        assemble_input_stack(&self.grid, &a, &t, [&c[0], &c[1], &c[2], &c[3], &c[4]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_counts_follow_window() {
        let g = Arc::new(GridSpec::regular(2, 4).unwrap());
        let z = vec![0.0f32; 8];
        for (w, want) in [(1, 7), (2, 9), (3, 11), (4, 13), (6, 17), (12, 29)] {
            let a: Vec<&[f32]> = vec![&z; w];
            let s = assemble_input_stack(&g, &a, &a, [&z, &z, &z, &z, &z]).unwrap();
            assert_eq!(s.channels(), want);
            assert_eq!(channel_count(w), want);
        }
        let a: Vec<&[f32]> = vec![&z; 5];
        assert!(matches!(
            assemble_input_stack(&g, &a, &a, [&z, &z, &z, &z, &z]),
            Err(DuneError::UnsupportedWindow(5))
        ));
    }

    #[test]
    fn wrong_grid_rejected() {
        let g = Arc::new(GridSpec::regular(2, 4).unwrap());
        let z = vec![0.0f32; 8];
        let short = vec![0.0f32; 6];
        let a: Vec<&[f32]> = vec![&short];
        let t: Vec<&[f32]> = vec![&z];
        assert!(matches!(
            assemble_input_stack(&g, &a, &t, [&z, &z, &z, &z, &z]),
            Err(DuneError::GridMismatch(_))
        ));
    }
}
