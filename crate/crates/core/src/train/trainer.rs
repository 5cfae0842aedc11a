//! Mini-batch training with cosine annealing, early stopping and
//! restoration of the best validation checkpoint.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{Sample, SampleSet};
use super::loss::sample_loss_grad;
use super::optim::{Adam, AdamConfig};
use super::schedule::{CosineSchedule, HoldPolicy};
use crate::data::Stamp;
use crate::error::{DuneError, Result};
use crate::net::{Dune, ParamSet, Tape, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    /// Cosine annealing period in epochs.
    pub t_max: usize,
    pub hold: HoldPolicy,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 4,
            weight_decay: 1e-4,
            t_max: 225,
            hold: HoldPolicy::LastNonzero,
            max_epochs: 500,
            patience: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(DuneError::Config("batch size and epoch count must be positive".into()));
        }
        if self.patience >= self.max_epochs {
            return Err(DuneError::Config(format!(
                "patience {} must be below max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if [self.learning_rate, self.weight_decay]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return Err(DuneError::Config("rates must be non-negative".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> CosineSchedule {
        CosineSchedule {
            base_lr: self.learning_rate,
            t_max: self.t_max,
            hold: self.hold,
        }
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Set on the single epoch whose parameters were restored.
    pub is_best: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub params: ParamSet<f32>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
    /// Every stamp read by a gradient step.
    pub gradient_stamps: BTreeSet<Stamp>,
}

type BestHook<'a> = Box<dyn FnMut(&ParamSet<f32>, &[EpochRecord]) -> Result<()> + 'a>;

/// Side outputs of a run.
#[derive(Default)]
pub struct TrainHooks<'a> {
    /// Appends one JSON record per epoch.
    pub log_path: Option<PathBuf>,
    /// Called whenever the validation loss reaches a new minimum.
    pub on_best: Option<BestHook<'a>>,
}

fn to_tensor(data: &[f32], c: usize, h: usize, w: usize) -> Tensor<f32> {
    Tensor::from_vec(c, h, w, data.to_vec())
}

/// Loss summed over target channels and its parameter gradients.
fn sample_grads(
    net: &Dune,
    p: &ParamSet<f32>,
    s: &Sample,
    set: &SampleSet,
    weights: &[f64],
) -> Result<(f64, Vec<Vec<f32>>)> {
    let mut tape = Tape::new(true);
    let x = to_tensor(&s.input, set.channels, set.n_lat, set.n_lon);
    let (_, mean) = net.forward_tape(&mut tape, p, x)?;
    let truth = to_tensor(&s.target, set.window, set.n_lat, set.n_lon);
    let (loss, dmean) = sample_loss_grad(tape.value(mean), &truth, weights)?;
    let mut grads = p.zero_grads();
    tape.backward(vec![(mean, dmean)], p, &mut grads);
    Ok((loss, grads))
}

/// Mean loss over every `(sample, target channel)` pair.
pub fn evaluate_loss(net: &Dune, p: &ParamSet<f32>, set: &SampleSet) -> Result<f64> {
    if set.is_empty() {
        return Err(DuneError::InvalidArgument(format!("empty {} split", set.split)));
    }
    let weights = &set.lat_weights;
    let losses = set
        .samples
        .par_iter()
        .map(|s| {
            let x = to_tensor(&s.input, set.channels, set.n_lat, set.n_lon);
            let out = net.forward(p, x)?;
            let truth = to_tensor(&s.target, set.window, set.n_lat, set.n_lon);
            Ok(sample_loss_grad(&out.mean, &truth, weights)?.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / (set.len() * set.window) as f64)
}

/// Trains from `init`, returning the best-validation parameters.
pub fn train(
    net: &Dune,
    init: ParamSet<f32>,
    train_set: &SampleSet,
    val_set: &SampleSet,
    config: &TrainConfig,
    mut hooks: TrainHooks<'_>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(DuneError::InvalidArgument(
            "training and validation splits must be nonempty".into(),
        ));
    }
    let weights = &train_set.lat_weights;
    let schedule = config.schedule();
    let mut log = match &hooks.log_path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Some(fs::File::create(p)?)
        }
        None => None,
    };
    let mut params = init;
    let mut opt = Adam::new(
        AdamConfig {
            weight_decay: config.weight_decay,
            ..AdamConfig::default()
        },
        &params.values,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history: Vec<EpochRecord> = Vec::new();
    let mut best: Option<(usize, f64, ParamSet<f32>)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    let mut touched = BTreeSet::new();
    let w = train_set.window;

    for epoch in 0..config.max_epochs {
        let started = Instant::now();
        let lr = schedule.lr_at(epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            for &i in batch {
                let s = &train_set.samples[i];
                touched.extend(s.input_stamps(w));
                touched.extend(s.target_stamps(w));
            }
            let results = batch
                .par_iter()
                .map(|&i| sample_grads(net, &params, &train_set.samples[i], train_set, weights))
                .collect::<Result<Vec<_>>>()?;
            let scale = 1.0 / (batch.len() * w) as f32;
            let mut grads = params.zero_grads();
            let mut batch_loss = 0.0;
            for (loss, g) in &results {
                batch_loss += loss;
                for (acc, gi) in grads.iter_mut().zip(g) {
                    for (a, v) in acc.iter_mut().zip(gi) {
                        *a += v * scale;
                    }
                }
            }
            let finite = grads.iter().flatten().all(|v| v.is_finite());
            if !batch_loss.is_finite() || !finite {
                return Err(DuneError::NonFiniteLoss {
                    epoch,
                    batch: b,
                    detail: format!("loss {batch_loss}, gradients finite: {finite}"),
                });
            }
            epoch_loss += batch_loss;
            opt.step(&mut params.values, &grads, lr);
        }
        let train_loss = epoch_loss / (train_set.len() * w) as f64;
        let val_loss = evaluate_loss(net, &params, val_set)?;
        if !val_loss.is_finite() {
            return Err(DuneError::NonFiniteLoss {
                epoch,
                batch: 0,
                detail: format!("validation loss {val_loss}"),
            });
        }
        history.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            val_loss,
            is_best: false,
        });
        let improved = best.as_ref().is_none_or(|(_, v, _)| val_loss < *v);
        if let Some(f) = log.as_mut() {
            let mut line = serde_json::to_value(history.last().expect("pushed"))?;
            line["seconds"] = serde_json::json!(started.elapsed().as_secs_f64());
            line["improved"] = serde_json::json!(improved);
            writeln!(f, "{line}")?;
        }
        log::info!(
            "epoch {epoch}: lr {lr:.3e} train {train_loss:.5} val {val_loss:.5}{}",
            if improved { " *" } else { "" }
        );
        if improved {
            best = Some((epoch, val_loss, params.clone()));
            since_best = 0;
            if let Some(hook) = hooks.on_best.as_mut() {
                hook(&params, &history)?;
            }
        } else {
            since_best += 1;
            if since_best >= config.patience {
                stopped_early = true;
                break;
            }
        }
    }
    let (best_epoch, best_val_loss, params) = best.expect("at least one epoch");
    history[best_epoch].is_best = true;
    Ok(TrainOutcome {
        params,
        best_epoch,
        best_val_loss,
        history,
        stopped_early,
        gradient_stamps: touched,
    })
}
