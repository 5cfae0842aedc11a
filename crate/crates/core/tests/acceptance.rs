//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dune::data::{
    anomalize, build_climatology, deanomalize, Cadence, GridSpec, MonthlyField, NormStats, Stamp, VariableId,
};
use dune::forecast::{block_forecasts, ensemble_inference, single_step_forecasts, EnsembleMember, Forecaster};
use dune::ingest::{assemble_input_stack, channel_count, Split, SplitConfig};
use dune::net::{Dune, ModelConfig, Tape, Tensor};
use dune::train::{sample_loss_grad, train, CosineSchedule, PreparedData, TrainConfig, TrainHooks};
use dune::verify::{acc, hss, rmse, Category, RegionMask};

use common::{checkpoint, prepared, small_model, synthetic_dataset, ulps_f32, ulps_f64};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !bool::from($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

// ---- 1 -------------------------------------------------------------------

fn oracle_weights(lat: &[f64]) -> Vec<f64> {
    let c: Vec<f64> = lat.iter().map(|l| (l * std::f64::consts::PI / 180.0).cos()).collect();
    let s: f64 = c.iter().sum();
    c.iter().map(|x| x / s).collect()
}

fn oracle_rmse(f: &[f32], t: &[f32], l: &[f64], mask: &[bool], n_lon: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..f.len() {
        if mask[i] {
            let w = l[i / n_lon];
            let d = f[i] as f64 - t[i] as f64;
            num += w * d * d;
            den += w;
        }
    }
    (num / den).sqrt()
}

fn oracle_acc(f: &[f32], t: &[f32], l: &[f64], mask: &[bool], n_lon: usize) -> f64 {
    let (mut ft, mut ff, mut tt) = (0.0, 0.0, 0.0);
    for i in 0..f.len() {
        if mask[i] {
            let w = l[i / n_lon];
            let (a, b) = (f[i] as f64, t[i] as f64);
            ft += w * a * b;
            ff += w * a * a;
            tt += w * b * b;
        }
    }
    ft / (ff * tt).sqrt()
}

fn oracle_hss(f: &[Category], o: &[Category], mask: &[bool]) -> f64 {
    let mut matches = 0.0;
    let mut total = 0.0;
    for i in 0..f.len() {
        if mask[i] {
            total += 1.0;
            if f[i] == o[i] {
                matches += 1.0;
            }
        }
    }
    let expected = total / 3.0;
    100.0 * (matches - expected) / (total - expected)
}

fn metric_oracles() -> Outcome {
    let started = Instant::now();
    let grid = GridSpec::regular(8, 16).unwrap();
    let l = oracle_weights(grid.lat());
    let weights = grid.latitude_weights();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cats = [Category::Below, Category::Near, Category::Above];
    let mut worst = [0.0f64; 4];
    for case in 0..200 {
        let n = grid.len();
        let mut mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
        mask[case % n] = true;
        let region = RegionMask::new(format!("case{case}"), mask.clone(), String::new()).unwrap();
        let f: Vec<f32> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let t: Vec<f32> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let fc: Vec<Category> = (0..n).map(|_| cats[rng.random_range(0..3)]).collect();
        let oc: Vec<Category> = (0..n).map(|_| cats[rng.random_range(0..3)]).collect();
        let lw = l
            .iter()
            .zip(weights.as_slice())
            .map(|(a, b)| rel_err(*a, *b))
            .fold(0.0, f64::max);
        let r = rel_err(
            rmse(&f, &t, &weights, &region).unwrap(),
            oracle_rmse(&f, &t, &l, &mask, 16),
        );
        let a = rel_err(
            acc(&f, &t, &weights, &region).unwrap(),
            oracle_acc(&f, &t, &l, &mask, 16),
        );
        let h = hss(&fc, &oc, &region).unwrap().0;
        let ho = oracle_hss(&fc, &oc, &mask);
        let h = if h.abs() < 1e-9 && ho.abs() < 1e-9 {
            0.0
        } else {
            rel_err(h, ho)
        };
        for (w, e) in worst.iter_mut().zip([r, lw, a, h]) {
            *w = w.max(e);
        }
    }
    let elapsed = started.elapsed();
    ensure!(
        worst.iter().all(|&e| e <= 1e-12),
        "worst relative errors RMSE/L/ACC/HSS {worst:?}"
    );
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "worst relative error {:.1e} over 200 cases in {elapsed:.2?}",
        worst.iter().cloned().fold(0.0, f64::max)
    ))
}

// ---- 2 -------------------------------------------------------------------

fn hss_extremes() -> Outcome {
    let n = 30;
    let region = RegionMask::new("all".into(), vec![true; n], String::new()).unwrap();
    let obs: Vec<Category> = (0..n)
        .map(|i| [Category::Below, Category::Near, Category::Above][i % 3])
        .collect();
    let perfect = hss(&obs, &obs, &region).unwrap().0;
    let wrong: Vec<Category> = obs
        .iter()
        .map(|c| match c {
            Category::Below => Category::Above,
            Category::Near => Category::Below,
            _ => Category::Near,
        })
        .collect();
    let worst = hss(&wrong, &obs, &region).unwrap().0;
    // Exactly a third of the cells match.
    let third: Vec<Category> = obs
        .iter()
        .enumerate()
        .map(|(i, &c)| if i < 10 { c } else { wrong[i] })
        .collect();
    let (chance, table) = hss(&third, &obs, &region).unwrap();
    ensure!(perfect == 100.0, "perfect forecast scored {perfect}");
    ensure!(worst == -50.0, "perfectly wrong forecast scored {worst}");
    ensure!(
        table.matches() * 3 == table.total && chance == 0.0,
        "H = E scored {chance}"
    );
    Ok("100 / -50 / 0 exactly".into())
}

// ---- 3 -------------------------------------------------------------------

fn channel_counts() -> Outcome {
    let grid = Arc::new(GridSpec::regular(4, 8).unwrap());
    let plane = vec![0.5f32; grid.len()];
    let mut got = Vec::new();
    for w in [1, 2, 3, 4, 6, 12] {
        let anomalies = vec![plane.as_slice(); w];
        let tisr = vec![plane.as_slice(); w];
        let stack = assemble_input_stack(&grid, &anomalies, &tisr, [&plane; 5]).map_err(|e| e.to_string())?;
        ensure!(
            stack.channels() == channel_count(w),
            "W={w}: stack {} vs channel_count {}",
            stack.channels(),
            channel_count(w)
        );
        got.push(stack.channels());
    }
    ensure!(got == [7, 9, 11, 13, 17, 29], "got {got:?}");
    Ok(format!("{got:?}"))
}

// ---- 4 -------------------------------------------------------------------

fn network_shape() -> Outcome {
    let mut checked = 0;
    for (h, w) in [(16, 32), (32, 64)] {
        for depth in [2, 4] {
            let cfg = ModelConfig::desk(1, depth, h, w);
            let net = Dune::new(cfg.clone()).map_err(|e| e.to_string())?;
            let p = net.init_params::<f32>(depth as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let data: Vec<f32> = (0..cfg.in_channels * h * w)
                .map(|_| rng.random_range(0.0..1.0))
                .collect();
            let x = Tensor::from_vec(cfg.in_channels, h, w, data);
            let out = net.forward(&p, x.clone()).unwrap();
            ensure!(
                out.mean.shape() == (1, h, w),
                "{h}x{w} depth {depth}: output {:?}",
                out.mean.shape()
            );
            for i in 0..out.mean.data.len() {
                let hd = |k: usize| out.heads[k].data[i];
                let exact = (hd(0) as f64 + hd(1) as f64 + hd(2) as f64 + hd(3) as f64) / 4.0;
                let paired = ((hd(0) + hd(1)) + (hd(2) + hd(3))) * 0.25;
                ensure!(out.mean.data[i] == paired, "mean differs from the head average at {i}");
                ensure!(
                    (out.mean.data[i] as f64 - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                    "head mean off at {i}"
                );
            }
            // Pooling commutes with rolls by whole coarsest-level cells.
            let cell = 1isize << depth;
            for shift in [cell, 3 * cell, -cell] {
                let rolled = net.forward(&p, x.roll_lon(shift)).unwrap().mean;
                let expected = out.mean.roll_lon(shift);
                ensure!(
                    rolled
                        .data
                        .iter()
                        .zip(&expected.data)
                        .all(|(a, b)| a.to_bits() == b.to_bits()),
                    "{h}x{w} depth {depth}: roll by {shift} is not bit-identical"
                );
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} configurations, shapes, head mean and roll equivariance"
    ))
}

// ---- 5 -------------------------------------------------------------------

fn gradient_check() -> Outcome {
    let started = Instant::now();
    let cfg = ModelConfig::desk(1, 2, 8, 8);
    let net = Dune::new(cfg.clone()).unwrap();
    let mut p = net.init_params::<f64>(5);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (spec, v) in p.specs.iter().zip(p.values.iter_mut()) {
        if spec.is_bias() {
            v.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
        }
    }
    let x = Tensor::from_vec(
        cfg.in_channels,
        8,
        8,
        (0..cfg.in_channels * 64).map(|_| rng.random_range(0.0..1.0)).collect(),
    );
    let truth = Tensor::from_vec(1, 8, 8, (0..64).map(|_| rng.random_range(-1.0..1.0)).collect());
    let l = GridSpec::regular(8, 8).unwrap().latitude_weights().as_slice().to_vec();
    let loss = |p: &dune::net::ParamSet<f64>| {
        let out = net.forward(p, x.clone()).unwrap();
        sample_loss_grad(&out.mean, &truth, &l).unwrap().0
    };
    let mut tape = Tape::new(true);
    let (_, mean) = net.forward_tape(&mut tape, &p, x.clone()).unwrap();
    let (_, seed) = sample_loss_grad(tape.value(mean), &truth, &l).unwrap();
    let mut grads = p.zero_grads();
    tape.backward(vec![(mean, seed)], &p, &mut grads);

    let eps = 1e-6;
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut tries = 0;
    while checked < 60 && tries < 1000 {
        tries += 1;
        let id = rng.random_range(0..p.values.len());
        let k = rng.random_range(0..p.values[id].len());
        let w0 = p.values[id][k];
        p.values[id][k] = w0 + eps;
        let up = loss(&p);
        p.values[id][k] = w0 - eps;
        let down = loss(&p);
        p.values[id][k] = w0;
        let numeric = (up - down) / (2.0 * eps);
        let analytic = grads[id][k];
        if analytic.abs().max(numeric.abs()) < 1e-7 {
            continue;
        }
        worst = worst.max(rel_err(analytic, numeric));
        checked += 1;
    }
    let elapsed = started.elapsed();
    ensure!(checked >= 50, "only {checked} weights with a measurable gradient");
    ensure!(worst < 1e-3, "max relative error {worst:.3e}");
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!(
        "max relative error {worst:.2e} over {checked} weights in {elapsed:.2?}"
    ))
}

// ---- 6 -------------------------------------------------------------------

fn round_trips() -> Outcome {
    let grid = Arc::new(GridSpec::regular(20, 42).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fields: Vec<MonthlyField> = Stamp::range(Stamp::month(2000, 1), Stamp::month(2009, 12))
        .into_iter()
        .map(|s| {
            let v = (0..grid.len()).map(|_| rng.random_range(220.0f32..320.0)).collect();
            MonthlyField::new(VariableId::BlendedT, Some(s), grid.clone(), v).unwrap()
        })
        .collect();
    let clim = build_climatology(&fields, (2000, 2009), false).unwrap();
    let mut n = 0usize;
    let mut worst_anom = 0;
    for f in &fields {
        let back = deanomalize(&anomalize(f, &clim).unwrap(), &clim).unwrap();
        for (a, b) in f.values.iter().zip(&back.values) {
            worst_anom = worst_anom.max(ulps_f32(*a, *b));
            n += 1;
        }
    }
    // Ranges anchored at zero or narrower than their offset (kelvin,
    // fractions, insolation, soil type): every value within 4 ulp of itself.
    let mut worst_norm = 0;
    for (lo, hi) in [(200.0, 320.0), (0.0, 1.0), (0.0, 480.0), (1.0, 7.0)] {
        let stats = NormStats::new("c", lo, hi).unwrap();
        for _ in 0..100_000 {
            let x: f64 = rng.random_range(lo..hi);
            worst_norm = worst_norm.max(ulps_f64(x, stats.denormalize(stats.normalize(x))));
        }
    }
    // Anomaly and orography ranges straddle zero; near zero no affine map
    // keeps values to a few of their own ulp, so the bound is on the
    // range's magnitude.
    let stats = NormStats::new("anomaly", -7.5, 9.25).unwrap();
    let scale = f64::EPSILON * 9.25;
    let mut worst_scaled = 0.0f64;
    for _ in 0..100_000 {
        let x: f64 = rng.random_range(-7.5..9.25);
        worst_scaled = worst_scaled.max((stats.denormalize(stats.normalize(x)) - x).abs() / scale);
    }
    ensure!(n >= 100_000, "only {n} anomaly values");
    ensure!(
        worst_anom <= 4 && worst_norm <= 4,
        "worst ulps: anomaly {worst_anom}, normalization {worst_norm}"
    );
    ensure!(
        worst_scaled <= 4.0,
        "zero-straddling range off by {worst_scaled} ulp of its magnitude"
    );
    Ok(format!(
        "worst {worst_anom} ulp over {n} anomaly values, {worst_norm} ulp over 4x100000 normalized values, {worst_scaled:.1} ulp of range on anomaly stats"
    ))
}

// ---- 7 -------------------------------------------------------------------

fn split_counts() -> Outcome {
    let count = |c: &SplitConfig, cadence: Cadence| -> Vec<usize> {
        Split::ALL
            .iter()
            .map(|&s| c.sample_starts(s, cadence, 1, Stamp::from_ordinal(cadence, 0)).len())
            .collect()
    };
    let months = count(&SplitConfig::reanalysis(), Cadence::Monthly);
    let seasons = count(&SplitConfig::reanalysis_seasonal(), Cadence::Seasonal);
    let years = count(&SplitConfig::reanalysis(), Cadence::Annual);
    ensure!(months == [444, 24, 60], "months {months:?}");
    ensure!(seasons == [142, 6, 18], "seasons {seasons:?}");
    ensure!(years == [37, 2, 5], "years {years:?}");
    Ok(format!("{months:?} {seasons:?} {years:?}"))
}

// ---- 8, 9, 10 --------------------------------------------------------------

struct Trained {
    prep: PreparedData,
    fc: Forecaster,
    seconds: f64,
}

fn train_synthetic(ds: &dune::ingest::Dataset, window: usize, epochs: usize) -> Trained {
    let started = Instant::now();
    let prep = prepared(ds, window);
    let model = small_model(window, 32, 64);
    let net = Dune::new(model.clone()).unwrap();
    let cfg = TrainConfig {
        learning_rate: 3e-3,
        t_max: epochs,
        max_epochs: epochs,
        patience: epochs - 1,
        seed: 1,
        ..TrainConfig::default()
    };
    let tr = prep.samples(Split::Train).unwrap();
    let va = prep.samples(Split::Val).unwrap();
    let out = train(&net, net.init_params(1), &tr, &va, &cfg, TrainHooks::default()).unwrap();
    let fc = Forecaster::new(checkpoint(&prep, model, out.params, 1), &ds.constants).unwrap();
    Trained {
        prep,
        fc,
        seconds: started.elapsed().as_secs_f64(),
    }
}

struct Skill {
    rmse: f64,
    acc: f64,
}

fn test_targets(prep: &PreparedData) -> Vec<Stamp> {
    prep.config.splits.targets(Split::Test, Cadence::Monthly)
}

fn skill_of(prep: &PreparedData, forecast: impl Fn(Stamp) -> Vec<f32>) -> Skill {
    let weights = prep.grid.latitude_weights();
    let region = RegionMask::global(&prep.grid);
    let targets = test_targets(prep);
    let (mut r, mut a) = (0.0, 0.0);
    for &t in &targets {
        let truth = &prep.anomaly(t).unwrap().values;
        let f = forecast(t);
        r += rmse(&f, truth, &weights, &region).unwrap();
        a += acc(&f, truth, &weights, &region).unwrap();
    }
    let n = targets.len() as f64;
    Skill {
        rmse: r / n,
        acc: a / n,
    }
}

fn dune_skill(t: &Trained) -> Skill {
    let targets = test_targets(&t.prep);
    let results = block_forecasts(&t.fc, &t.prep.anomalies, &targets, None).unwrap();
    skill_of(&t.prep, |s| {
        results.iter().find(|r| r.stamp == s).unwrap().anomaly.values.clone()
    })
}

fn synthetic_skill(w1: &Trained) -> Outcome {
    let prep = &w1.prep;
    let dune = dune_skill(w1);
    let clim = skill_of(prep, |_| vec![0.0; prep.grid.len()]);
    let prior = skill_of(prep, |s| prep.anomaly(s.prior_year()).unwrap().values.clone());
    let line = format!(
        "RMSE dune {:.3} / climatology {:.3} / prior year {:.3}; ACC {:.3} / {:.3} / {:.3}; trained in {:.0}s",
        dune.rmse, clim.rmse, prior.rmse, dune.acc, clim.acc, prior.acc, w1.seconds
    );
    ensure!(dune.rmse <= 0.9 * clim.rmse && dune.rmse <= 0.9 * prior.rmse, "{line}");
    ensure!(dune.acc > clim.acc && dune.acc > prior.acc, "{line}");
    Ok(line)
}

fn window_trend(w1: &Trained, w12: &Trained) -> Outcome {
    let r1 = dune_skill(w1).rmse;
    let r12 = dune_skill(w12).rmse;
    let line = format!(
        "mean RMSE W=1 {r1:.3}, W=12 {r12:.3} (W=12 trained in {:.0}s)",
        w12.seconds
    );
    ensure!(r12 >= 0.95 * r1, "{line}");
    Ok(line)
}

fn ensemble(w1: &Trained) -> Outcome {
    let prep = &w1.prep;
    let targets = test_targets(prep);
    let standalone = single_step_forecasts(&w1.fc, &prep.anomalies, &targets, None).unwrap();
    let same: Vec<EnsembleMember> = (0..10)
        .map(|k| EnsembleMember {
            name: format!("copy{k}"),
            anomalies: prep.anomalies.clone(),
        })
        .collect();
    let report = ensemble_inference(&w1.fc, &same, &targets, None).unwrap();
    ensure!(
        report.std.iter().all(|f| f.values.iter().all(|&v| v == 0.0)),
        "identical members have spread"
    );
    for (m, s) in report.mean.iter().zip(&standalone) {
        ensure!(
            m.values == s.anomaly.values,
            "ensemble mean differs from standalone at {}",
            s.stamp
        );
    }
    let noisy: Vec<EnsembleMember> = (0..10)
        .map(|k| EnsembleMember::perturbed(format!("m{k}"), &prep.anomalies, 0.1, 100 + k).unwrap())
        .collect();
    let report = ensemble_inference(&w1.fc, &noisy, &targets, None).unwrap();
    let spread: Vec<f64> = report.summary.iter().map(|s| s.rmse_std).collect();
    ensure!(report.samples == 600, "{} samples", report.samples);
    ensure!(
        spread.iter().all(|s| s.is_finite()) && spread.iter().any(|&s| s > 0.0),
        "spread {spread:?}"
    );
    let mean_spread = spread.iter().sum::<f64>() / spread.len() as f64;
    Ok(format!(
        "identical: std 0, mean = standalone; perturbed: 600 samples, mean RMSE spread {mean_spread:.4} K"
    ))
}

// ---- 11 ------------------------------------------------------------------

fn schedule_and_stopping() -> Outcome {
    let s = CosineSchedule::default();
    ensure!(s.lr_at(0) == 1e-3, "lr_at(0) = {}", s.lr_at(0));
    for e in 0..=s.t_max {
        let closed = 0.5 * 1e-3 * (1.0 + (std::f64::consts::PI * e as f64 / 225.0).cos());
        ensure!(
            (s.lr_at(e) - closed).abs() <= 1e-12,
            "epoch {e}: {} vs {closed}",
            s.lr_at(e)
        );
    }

    let ds = synthetic_dataset(16, 32);
    let prep = prepared(&ds, 1);
    let net = Dune::new(small_model(1, 16, 32)).unwrap();
    let init = net.init_params::<f32>(3);
    let patience = 3;
    let cfg = TrainConfig {
        learning_rate: 0.0,
        max_epochs: 20,
        patience,
        ..TrainConfig::default()
    };
    let tr = prep.samples(Split::Train).unwrap();
    let va = prep.samples(Split::Val).unwrap();
    let mut saved = Vec::new();
    let hooks = TrainHooks {
        log_path: None,
        on_best: Some(Box::new(
            |p: &dune::net::ParamSet<f32>, h: &[dune::train::EpochRecord]| {
                saved.push((h.len() - 1, p.clone()));
                Ok(())
            },
        )),
    };
    let out = train(&net, init.clone(), &tr, &va, &cfg, hooks).unwrap();
    ensure!(out.stopped_early, "run did not stop early");
    ensure!(
        out.history.len() == patience + 1,
        "{} epochs for patience {patience}",
        out.history.len()
    );
    let min_epoch = (0..out.history.len())
        .min_by(|&a, &b| out.history[a].val_loss.total_cmp(&out.history[b].val_loss))
        .unwrap();
    ensure!(
        out.best_epoch == min_epoch,
        "restored epoch {} vs minimum at {min_epoch}",
        out.best_epoch
    );
    ensure!(
        saved.len() == 1 && saved[0].0 == min_epoch,
        "best checkpoint saved {} times",
        saved.len()
    );
    ensure!(
        out.params == saved[0].1 && out.params == init,
        "restored parameters differ from the best checkpoint"
    );
    Ok(format!(
        "closed form over {} epochs; plateau stopped after {} epochs, best epoch {}",
        s.t_max + 1,
        out.history.len(),
        out.best_epoch
    ))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let started = Instant::now();
        let outcome = f();
        let tag = if outcome.is_ok() { "PASS" } else { "FAIL" };
        let detail = outcome.unwrap_or_else(|e| e);
        println!("criterion {id:>2} [{tag}] {name}: {detail} ({:.1?})", started.elapsed());
        if tag == "FAIL" {
            failed += 1;
        }
    };
    report(1, "metric oracle equivalence", &mut metric_oracles);
    report(2, "HSS extremes", &mut hss_extremes);
    report(3, "channel-count contract", &mut channel_counts);
    report(4, "network shape and ensemble identity", &mut network_shape);
    report(5, "gradient correctness", &mut gradient_check);
    report(6, "round trips", &mut round_trips);
    report(7, "split counts", &mut split_counts);
    let ds = synthetic_dataset(32, 64);
    let w1 = train_synthetic(&ds, 1, 4);
    report(8, "synthetic end-to-end skill", &mut || synthetic_skill(&w1));
    let w12 = train_synthetic(&ds, 12, 4);
    report(9, "moving-window degradation", &mut || window_trend(&w1, &w12));
    report(10, "ensemble inference", &mut || ensemble(&w1));
    report(11, "scheduler and early stopping", &mut schedule_and_stopping);
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
