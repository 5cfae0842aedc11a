//! Self-contained trained-model files: architecture, provenance,
//! normalization statistics and f32 parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Dune, ModelConfig};
use super::param::{ParamSet, ParamSpec};
use crate::container;
use crate::data::{Cadence, ChannelStats, GridSpec};
use crate::error::{DuneError, Result};
use crate::ingest::TisrAlignment;
use crate::train::EpochRecord;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DUNECKP1";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Space in which the training loss was measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSpace {
    #[default]
    NormalizedAnomaly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub model: ModelConfig,
    pub grid: GridSpec,
    pub seed: u64,
    pub window: usize,
    pub cadence: Cadence,
    pub stats: ChannelStats,
    pub stats_fingerprint: String,
    pub loss_space: LossSpace,
    pub tisr_alignment: TisrAlignment,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub params: Vec<ParamSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: ParamSet<f32>,
}

impl Checkpoint {
    pub fn network(&self) -> Result<Dune> {
        Dune::new(self.header.model.clone())
    }

    /// Short identifier derived from the statistics and parameter bytes.
    pub fn id(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self
            .header
            .stats_fingerprint
            .bytes()
            .chain(self.params.values.iter().flatten().flat_map(|v| v.to_le_bytes()))
        {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }

    /// Rejects inputs normalized with different statistics.
    pub fn check_stats(&self, stats: &ChannelStats) -> Result<()> {
        let inputs = stats.fingerprint();
        if inputs != self.header.stats_fingerprint {
            return Err(DuneError::StatsMismatch {
                checkpoint: self.header.stats_fingerprint.clone(),
                inputs,
            });
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        container::write(
            path,
            CHECKPOINT_MAGIC,
            &self.header,
            self.params.values.iter().map(Vec::as_slice),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (header, payload): (CheckpointHeader, Vec<f32>) = container::read(path, CHECKPOINT_MAGIC)?;
        let corrupt = |reason: String| DuneError::Corrupt {
            path: path.to_path_buf(),
            reason,
        };
        if header.version != CHECKPOINT_VERSION {
            return Err(corrupt(format!("unsupported checkpoint version {}", header.version)));
        }
        let net = Dune::new(header.model.clone())?;
        if net.param_specs() != header.params.as_slice() {
            return Err(corrupt(
                "parameter layout does not match the model configuration".into(),
            ));
        }
        if header.stats.fingerprint() != header.stats_fingerprint {
            return Err(corrupt("statistics fingerprint does not match".into()));
        }
        let expected: usize = header.params.iter().map(ParamSpec::len).sum();
        if payload.len() != expected {
            return Err(corrupt(format!("{} parameters, expected {expected}", payload.len())));
        }
        let mut values = Vec::with_capacity(header.params.len());
        let mut rest = payload.as_slice();
        for spec in &header.params {
            let (head, tail) = rest.split_at(spec.len());
            values.push(head.to_vec());
            rest = tail;
        }
        let params = ParamSet {
            specs: header.params.clone(),
            values,
        };
        Ok(Self { header, params })
    }
}
