//! Noise-perturbed ensemble around an untrained network: spread grows
//! with the perturbation amplitude.

use dune::data::{GridSpec, Stamp};
use dune::forecast::{ensemble_inference, EnsembleMember, Forecaster};
use dune::ingest::{generate_synthetic_corpus, Dataset, SyntheticConfig, DEFAULT_LSM_THRESHOLD};
use dune::net::{Checkpoint, CheckpointHeader, Dune, LossSpace, ModelConfig, CHECKPOINT_VERSION};
use dune::train::{ExperimentConfig, PreparedData};

fn main() -> dune::Result<()> {
    let grid = GridSpec::regular(16, 32)?;
    let corpus = generate_synthetic_corpus(&grid, &SyntheticConfig::default())?;
    let ds = Dataset::from_synthetic(&corpus, DEFAULT_LSM_THRESHOLD)?;
    let prep = PreparedData::prepare(&ds, ExperimentConfig::synthetic(1))?;

    let model = ModelConfig::desk(1, 2, 16, 32);
    let net = Dune::new(model.clone())?;
    let stats = prep.builder.stats().clone();
    let ckpt = Checkpoint {
        header: CheckpointHeader {
            version: CHECKPOINT_VERSION,
            window: 1,
            params: net.param_specs().to_vec(),
            model,
            grid: (*prep.grid).clone(),
            seed: 0,
            cadence: prep.config.cadence,
            stats_fingerprint: stats.fingerprint(),
            stats,
            loss_space: LossSpace::NormalizedAnomaly,
            tisr_alignment: prep.config.tisr_alignment,
            history: Vec::new(),
            best_epoch: None,
        },
        params: net.init_params(0),
    };
    let fc = Forecaster::new(ckpt, &ds.constants)?;
    let targets = Stamp::range(Stamp::month(2014, 1), Stamp::month(2014, 12));

    for amplitude in [0.05, 0.1, 0.2] {
        let members = (0..8)
            .map(|k| EnsembleMember::perturbed(format!("m{k}"), &prep.anomalies, amplitude, 100 + k))
            .collect::<dune::Result<Vec<_>>>()?;
        let report = ensemble_inference(&fc, &members, &targets, None)?;
        let cells: Vec<f64> = report
            .std
            .iter()
            .flat_map(|f| f.values.iter().map(|&v| v as f64))
            .collect();
        let spread = cells.iter().sum::<f64>() / cells.len() as f64;
        println!(
            "noise {amplitude:.2} K: {} samples, mean spread {spread:.4} K",
            report.samples
        );
    }
    Ok(())
}
