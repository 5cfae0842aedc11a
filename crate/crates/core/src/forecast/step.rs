//! Single network calls: W anomaly grids in, the next W out.

use std::sync::Arc;

use crate::data::{ClimatologyTable, GridSpec, MonthlyField, Stamp, VariableId};
use crate::error::{DuneError, Result};
use crate::ingest::{ConstantChannels, InputStack, StackBuilder};
use crate::net::{Checkpoint, Dune, ParamSet, Tensor, HEAD_COUNT};

/// Per-step denormalized anomalies and, when kept, the four head outputs of each step.
pub type StackOutput = (Vec<Vec<f32>>, Option<Vec<Vec<Vec<f32>>>>);

/// A loaded checkpoint bound to the constant channels of its grid.
#[derive(Clone, Debug)]
pub struct Forecaster {
    checkpoint: Checkpoint,
    net: Dune,
    builder: StackBuilder,
    grid: Arc<GridSpec>,
}

/// Anomalies (K) for the W stamps following the input window.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub stamps: Vec<Stamp>,
    pub anomalies: Vec<Vec<f32>>,
    /// Per-head anomalies, `[head][step]`, when requested.
    pub heads: Option<Vec<Vec<Vec<f32>>>>,
}

impl Forecaster {
    pub fn new(checkpoint: Checkpoint, constants: &ConstantChannels) -> Result<Self> {
        let h = &checkpoint.header;
        let grid = constants.grid().clone();
        h.grid.ensure_same(&grid, "constant channels")?;
        let builder = StackBuilder::new(h.stats.clone(), constants, h.window, h.tisr_alignment)?;
        let net = checkpoint.network()?;
        Ok(Self {
            checkpoint,
            net,
            builder,
            grid,
        })
    }

    pub fn checkpoint(&self) -> &Checkpoint {
        &self.checkpoint
    }

    pub fn params(&self) -> &ParamSet<f32> {
        &self.checkpoint.params
    }

    pub fn window(&self) -> usize {
        self.checkpoint.header.window
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn builder(&self) -> &StackBuilder {
        &self.builder
    }

    /// Runs the network on a stack normalized with `stats`.
    pub fn forecast_stack(
        &self,
        stack: &InputStack,
        stats: &crate::data::ChannelStats,
        keep_heads: bool,
    ) -> Result<StackOutput> {
        self.checkpoint.check_stats(stats)?;
        self.grid.ensure_same(&stack.grid, "input stack")?;
        let c = self.net.config();
        let x = Tensor::from_vec(
            stack.channels(),
            self.grid.n_lat(),
            self.grid.n_lon(),
            stack.data.clone(),
        );
        if stack.channels() != c.in_channels {
            return Err(DuneError::Shape(format!(
                "{} input channels, checkpoint expects {}",
                stack.channels(),
                c.in_channels
            )));
        }
        let out = self.net.forward(self.params(), x)?;
        let a = &self.checkpoint.header.stats.anomaly;
        let split =
            |t: &Tensor<f32>| -> Vec<Vec<f32>> { (0..t.c).map(|w| a.denormalize_slice(t.channel(w))).collect() };
        let heads = keep_heads.then(|| (0..HEAD_COUNT).map(|k| split(&out.heads[k])).collect());
        Ok((split(&out.mean), heads))
    }

    /// `inputs` are the W anomaly grids (K) ending at `last_input`.
    pub fn forecast_step(&self, inputs: &[&[f32]], last_input: Stamp, keep_heads: bool) -> Result<StepOutput> {
        let stack = self.builder.build(inputs, last_input)?;
        let (anomalies, heads) = self.forecast_stack(&stack, self.builder.stats(), keep_heads)?;
        Ok(StepOutput {
            stamps: (1..=self.window() as i64).map(|i| last_input.offset(i)).collect(),
            anomalies,
            heads,
        })
    }
}

/// One forecast stamp with its anomaly and, given a climatology, the
/// absolute temperature.
///
/// With a climatology the stored anomaly is `absolute - mean`, so that
/// `absolute - anomaly == mean` holds exactly in f32.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastResult {
    pub stamp: Stamp,
    /// Steps after the last observed input, from 1.
    pub lead: usize,
    pub anomaly: MonthlyField,
    pub absolute: Option<MonthlyField>,
    pub heads: Option<Vec<Vec<f32>>>,
    pub checkpoint_id: String,
}

impl ForecastResult {
    pub fn new(
        stamp: Stamp,
        lead: usize,
        anomaly: Vec<f32>,
        grid: &Arc<GridSpec>,
        climatology: Option<&ClimatologyTable>,
        checkpoint_id: String,
    ) -> Result<Self> {
        let (anomaly, absolute) = match climatology {
            Some(clim) => {
                clim.grid().ensure_same(grid, "climatology")?;
                let mean = clim.mean(stamp.slot());
                let abs: Vec<f32> = anomaly.iter().zip(mean).map(|(a, m)| a + m).collect();
                let anom = abs.iter().zip(mean).map(|(x, m)| x - m).collect();
                (anom, Some(abs))
            }
            None => (anomaly, None),
        };
        let field = |v| MonthlyField::new(VariableId::BlendedT, Some(stamp), grid.clone(), v);
        Ok(Self {
            stamp,
            lead,
            anomaly: field(anomaly)?,
            absolute: absolute.map(field).transpose()?,
            heads: None,
            checkpoint_id,
        })
    }
}
