//! Trains a small monthly network on the synthetic corpus and saves it.
//!
//! `cargo run --release --example train_monthly -- [EPOCHS]`

use dune::data::GridSpec;
use dune::ingest::{generate_synthetic_corpus, Dataset, Split, SyntheticConfig, DEFAULT_LSM_THRESHOLD};
use dune::net::{Checkpoint, CheckpointHeader, Dune, LossSpace, ModelConfig, CHECKPOINT_VERSION};
use dune::train::{train, ExperimentConfig, PreparedData, TrainConfig, TrainHooks};

fn main() -> dune::Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let grid = GridSpec::regular(32, 64)?;
    let corpus = generate_synthetic_corpus(&grid, &SyntheticConfig::default())?;
    let ds = Dataset::from_synthetic(&corpus, DEFAULT_LSM_THRESHOLD)?;
    let prep = PreparedData::prepare(&ds, ExperimentConfig::synthetic(1))?;

    let mut model = ModelConfig::desk(1, 2, 32, 64);
    model.widths = vec![4, 8, 16];
    let net = Dune::new(model.clone())?;
    let cfg = TrainConfig {
        learning_rate: 3e-3,
        t_max: epochs,
        max_epochs: epochs,
        patience: epochs.saturating_sub(1),
        ..TrainConfig::default()
    };
    let train_set = prep.samples(Split::Train)?;
    let val_set = prep.samples(Split::Val)?;
    println!("{} parameters, {} training samples", net.param_count(), train_set.len());
    let out = train(
        &net,
        net.init_params(1),
        &train_set,
        &val_set,
        &cfg,
        TrainHooks::default(),
    )?;
    for r in &out.history {
        println!(
            "epoch {:>3}  lr {:.2e}  train {:.5}  val {:.5}{}",
            r.epoch,
            r.lr,
            r.train_loss,
            r.val_loss,
            if r.is_best { "  *" } else { "" }
        );
    }

    let stats = prep.builder.stats().clone();
    let ckpt = Checkpoint {
        header: CheckpointHeader {
            version: CHECKPOINT_VERSION,
            window: 1,
            params: net.param_specs().to_vec(),
            model,
            grid: (*prep.grid).clone(),
            seed: cfg.seed,
            cadence: prep.config.cadence,
            stats_fingerprint: stats.fingerprint(),
            stats,
            loss_space: LossSpace::NormalizedAnomaly,
            tisr_alignment: prep.config.tisr_alignment,
            history: out.history.clone(),
            best_epoch: Some(out.best_epoch),
        },
        params: out.params,
    };
    let path = std::env::temp_dir().join("dune-example.dckpt");
    ckpt.save(&path)?;
    println!("best epoch {} -> {}", out.best_epoch, path.display());
    Ok(())
}
