#![allow(dead_code)]

use dune::data::GridSpec;
use dune::ingest::{generate_synthetic_corpus, Dataset, SyntheticConfig, DEFAULT_LSM_THRESHOLD};
use dune::net::{Checkpoint, CheckpointHeader, Dune, LossSpace, ModelConfig, ParamSet, CHECKPOINT_VERSION};
use dune::train::{ExperimentConfig, PreparedData};

/// The seeded synthetic corpus (1977-2018) as a dataset.
pub fn synthetic_dataset(n_lat: usize, n_lon: usize) -> Dataset {
    let grid = GridSpec::regular(n_lat, n_lon).unwrap();
    let corpus = generate_synthetic_corpus(&grid, &SyntheticConfig::default()).unwrap();
    Dataset::from_synthetic(&corpus, DEFAULT_LSM_THRESHOLD).unwrap()
}

pub fn prepared(ds: &Dataset, window: usize) -> PreparedData {
    PreparedData::prepare(ds, ExperimentConfig::synthetic(window)).unwrap()
}

/// Depth 2 with widths 4/8/16: small enough to train in seconds.
pub fn small_model(window: usize, n_lat: usize, n_lon: usize) -> ModelConfig {
    let mut m = ModelConfig::desk(window, 2, n_lat, n_lon);
    m.widths = vec![4, 8, 16];
    m
}

pub fn checkpoint(prep: &PreparedData, model: ModelConfig, params: ParamSet<f32>, seed: u64) -> Checkpoint {
    let net = Dune::new(model.clone()).unwrap();
    let stats = prep.builder.stats().clone();
    Checkpoint {
        header: CheckpointHeader {
            version: CHECKPOINT_VERSION,
            window: model.out_channels,
            model,
            grid: (*prep.grid).clone(),
            seed,
            cadence: prep.config.cadence,
            stats_fingerprint: stats.fingerprint(),
            stats,
            loss_space: LossSpace::NormalizedAnomaly,
            tisr_alignment: prep.config.tisr_alignment,
            history: Vec::new(),
            best_epoch: None,
            params: net.param_specs().to_vec(),
        },
        params,
    }
}

/// Distance in units in the last place between two finite floats.
pub fn ulps_f32(a: f32, b: f32) -> u64 {
    let ordered = |x: f32| {
        let bits = x.to_bits();
        if bits >> 31 == 1 {
            -((bits & 0x7fff_ffff) as i64)
        } else {
            bits as i64
        }
    };
    (ordered(a) - ordered(b)).unsigned_abs()
}

pub fn ulps_f64(a: f64, b: f64) -> u64 {
    let ordered = |x: f64| {
        let bits = x.to_bits();
        if bits >> 63 == 1 {
            -((bits & 0x7fff_ffff_ffff_ffff) as i128)
        } else {
            bits as i128
        }
    };
    (ordered(a) - ordered(b)).unsigned_abs() as u64
}
