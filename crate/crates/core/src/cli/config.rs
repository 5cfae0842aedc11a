//! Run configuration: defaults, then a TOML file, then `DUNE__*`
//! environment variables, then command-line flags.
//!
//! Every key of the file can be overridden from the environment with
//! `DUNE__<section>__<key>=<toml value>`, e.g.
//! `DUNE__train__max_epochs=20` or `DUNE__data__splits='{train=[1980,2011],val=[2012,2013],test=[2014,2018]}'`.
//! Values that do not parse as TOML are taken as strings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::PoleRow;
use crate::error::{DuneError, Result};
use crate::ingest::{SplitConfig, TisrAlignment, DEFAULT_LSM_THRESHOLD};
use crate::net::DESK_WIDTHS;
use crate::train::TrainConfig;
use crate::verify::{RegionDef, RegionKind};

pub const ENV_PREFIX: &str = "DUNE__";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Land/sea mask value at or above which a cell is land.
    pub lsm_threshold: f64,
    /// Pole row removed from pole-inclusive grids.
    pub pole_row: PoleRow,
    /// Overrides the splits recorded in the dataset manifest.
    pub splits: Option<SplitConfig>,
    /// Years of the anomaly climatology; the training split by default.
    pub climatology_base: Option<(i32, i32)>,
    pub tisr_alignment: TisrAlignment,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            lsm_threshold: DEFAULT_LSM_THRESHOLD,
            pole_row: PoleRow::default(),
            splits: None,
            climatology_base: None,
            tisr_alignment: TisrAlignment::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub depth: usize,
    /// Filters per level; `depth + 1` entries.
    pub widths: Vec<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            depth: 4,
            widths: DESK_WIDTHS.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSection {
    /// Standard region names.
    pub regions: Vec<RegionKind>,
    /// Extra regions scored after the standard ones.
    pub custom_regions: Vec<RegionDef>,
    /// Base years of the ACC reference climatology; the anomaly
    /// climatology when unset.
    pub acc_climatology_base: Option<(i32, i32)>,
    /// Categorize for HSS on a grid block-averaged to roughly this
    /// resolution (degrees); native grid when unset.
    pub hss_resolution: Option<f64>,
}

impl Default for ScoreSection {
    fn default() -> Self {
        Self {
            regions: RegionKind::ALL.to_vec(),
            custom_regions: Vec::new(),
            acc_climatology_base: None,
            hss_resolution: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub members: usize,
    /// Standard deviation (K) of the per-member input perturbation.
    pub noise: f64,
    /// Members come from the data block-averaged by this factor and
    /// interpolated back, when set.
    pub upsample_factor: Option<usize>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            members: 10,
            noise: 0.1,
            upsample_factor: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub score: ScoreSection,
    pub ensemble: EnsembleSection,
}

fn parse_env_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut t = table;
    for p in parents {
        let entry = t
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| DuneError::Config(format!("`{p}` is not a section")))?;
    }
    t.insert(last.clone(), value);
    Ok(())
}

impl Config {
    /// Layers the file at `path` (if any) and the `DUNE__*` variables in
    /// `env` over the defaults.
    pub fn load<I>(path: Option<&Path>, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| DuneError::Config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text).map_err(|e| DuneError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        let mut overrides: Vec<(String, String)> = env
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX) && k.len() > ENV_PREFIX.len())
            .collect();
        overrides.sort();
        for (k, v) in overrides {
            let path: Vec<String> = k[ENV_PREFIX.len()..].split("__").map(str::to_ascii_lowercase).collect();
            if path.iter().any(String::is_empty) {
                return Err(DuneError::Config(format!("malformed override `{k}`")));
            }
            set_path(&mut table, &path, parse_env_value(&v))?;
        }
        let config: Config = table
            .try_into()
            .map_err(|e: toml::de::Error| DuneError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.data.lsm_threshold) {
            return Err(DuneError::Config(format!(
                "lsm_threshold {} outside [0, 1]",
                self.data.lsm_threshold
            )));
        }
        if let Some(s) = &self.data.splits {
            s.validate().map_err(|e| DuneError::Config(e.to_string()))?;
        }
        if self.model.widths.len() != self.model.depth + 1 {
            return Err(DuneError::Config(format!(
                "model.widths needs depth + 1 = {} entries, got {}",
                self.model.depth + 1,
                self.model.widths.len()
            )));
        }
        if self.ensemble.members == 0 || self.ensemble.noise.is_nan() || self.ensemble.noise < 0.0 {
            return Err(DuneError::Config(
                "ensemble needs members and a non-negative noise".into(),
            ));
        }
        self.train.validate().map_err(|e| DuneError::Config(e.to_string()))
    }

    /// FNV-1a hash of the resolved configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:016x}", fnv1a(&bytes))
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn precedence_file_then_env() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(
            &p,
            "[train]\nmax_epochs = 40\npatience = 5\nlearning_rate = 0.002\n[model]\ndepth = 2\nwidths = [4, 8, 16]\n",
        )
        .unwrap();
        let c = Config::load(Some(&p), env(&[("DUNE__train__max_epochs", "30"), ("UNRELATED", "1")])).unwrap();
        assert_eq!(c.train.max_epochs, 30);
        assert_eq!(c.train.patience, 5);
        assert_eq!(c.train.learning_rate, 0.002);
        assert_eq!(c.train.batch_size, 4);
        assert_eq!(c.model.widths, vec![4, 8, 16]);
        let c = Config::load(None, env(&[("DUNE__data__pole_row", "keep")])).unwrap();
        assert_eq!(c.data.pole_row, PoleRow::Keep);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            Config::load(None, env(&[("DUNE__train__nonsense", "1")])),
            Err(DuneError::Config(_))
        ));
        assert!(Config::load(None, env(&[("DUNE__train__patience", "600")])).is_err());
        assert!(Config::load(None, env(&[("DUNE__model__depth", "3")])).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.train.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
