//! Subcommand implementations. Each returns the files it wrote, relative
//! to its output directory, for the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::args::*;
use super::config::Config;
use super::manifest::{InputRecord, RunManifest, Versions};
use super::plot;
use crate::baselines::{baseline_forecasts, BaselineKind, MlrModel};
use crate::data::{build_climatology, Cadence, GridSpec, MonthlyField, Stamp, VariableId};
use crate::error::{DuneError, Result};
use crate::forecast::{
    block_forecasts, ensemble_inference, read_forecast, rollout, write_forecast, EnsembleMember, ForecastResult,
    Forecaster, RolloutRequest,
};
use crate::ingest::{
    channel_count, corpus_series, generate_synthetic_corpus, load_dataset, read_monthly_dataset, write_climatology,
    write_grid_file, write_split_series, ConstantChannels, DataSource, Dataset, DatasetManifest, LoadOptions,
    MonthlySeries, Split, SplitConfig, SyntheticConfig, DATASET_MANIFEST,
};
use crate::net::{
    Checkpoint, CheckpointHeader, Dune, LossSpace, ModelConfig, CHECKPOINT_VERSION, DESK_WIDTHS, FULL_SCALE_WIDTHS,
};
use crate::train::{train, EpochRecord, ExperimentConfig, PreparedData, TrainHooks};
use crate::verify::{categorize, score_run, CategoryGridFile, ForecastSet, RegionMask, ScoreContext, ScoreReport};

pub const CHECKPOINT_FILE: &str = "checkpoint.dckpt";
pub const TRAIN_LOG: &str = "train_log.jsonl";
pub const HISTORY_FILE: &str = "history.json";
pub const EXPERIMENT_FILE: &str = "experiment.json";

/// State shared by every subcommand of one invocation.
pub struct RunContext {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub out: PathBuf,
    pub config: Config,
}

impl RunContext {
    fn data_path(&self, arg: &DataArg) -> PathBuf {
        arg.data.clone().unwrap_or_else(|| self.out.join("data"))
    }

    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            lsm_threshold: self.config.data.lsm_threshold,
            pole_row: self.config.data.pole_row,
        }
    }

    /// The dataset and its splits: configured, else recorded with the
    /// data, else the reanalysis calendar.
    fn load(&self, path: &Path) -> Result<(Dataset, SplitConfig)> {
        let ds = load_dataset(path, &self.load_options())?;
        let recorded = path.join(DATASET_MANIFEST);
        let splits = match self.config.data.splits {
            Some(s) => s,
            None if recorded.is_file() => {
                let m: DatasetManifest = serde_json::from_slice(&fs::read(&recorded)?)?;
                m.split
            }
            None => SplitConfig::default(),
        };
        Ok((ds, splits))
    }

    fn experiment(&self, cadence: Cadence, window: usize, splits: SplitConfig) -> ExperimentConfig {
        ExperimentConfig {
            cadence,
            window,
            splits,
            climatology_base: self.config.data.climatology_base.unwrap_or(splits.train),
            tisr_alignment: self.config.data.tisr_alignment,
        }
    }

    fn checkpoint_path(&self, arg: &CheckpointArg, mode: Cadence) -> PathBuf {
        arg.checkpoint
            .clone()
            .unwrap_or_else(|| self.out.join("train").join(format!("{mode}-w1")).join(CHECKPOINT_FILE))
    }

    /// Writes the run manifest into `dir`.
    pub fn finish(&self, dir: &Path, inputs: &[&Path], mut outputs: Vec<PathBuf>) -> Result<()> {
        outputs.sort();
        outputs.dedup();
        let manifest = RunManifest {
            command: self.command.clone(),
            argv: self.argv.clone(),
            seed: self.seed,
            config_hash: self.config.hash(),
            config: self.config.clone(),
            inputs: inputs.iter().map(|p| InputRecord::of(p)).collect::<Result<_>>()?,
            outputs,
            versions: Versions::default(),
        };
        let path = manifest.write(dir)?;
        log::info!("wrote {}", path.display());
        Ok(())
    }
}

/// Checkpoint plus the experiment it was trained under.
fn load_checkpoint(ctx: &RunContext, path: &Path) -> Result<(Checkpoint, Option<ExperimentConfig>)> {
    let ckpt = Checkpoint::load(path)?;
    let exp_path = path.with_file_name(EXPERIMENT_FILE);
    let exp = if exp_path.is_file() {
        Some(serde_json::from_slice(&fs::read(&exp_path)?)?)
    } else {
        None
    };
    log::info!("checkpoint {} ({})", path.display(), ckpt.id());
    let _ = ctx;
    Ok((ckpt, exp))
}

/// Prepared data for a checkpoint, refusing statistics that differ from
/// the ones it was trained with.
fn prepare_for(
    ctx: &RunContext,
    ckpt: &Checkpoint,
    exp: Option<ExperimentConfig>,
    ds: &Dataset,
    splits: SplitConfig,
) -> Result<PreparedData> {
    let h = &ckpt.header;
    let exp = exp.unwrap_or_else(|| ctx.experiment(h.cadence, h.window, splits));
    let prep = PreparedData::prepare(ds, exp)?;
    ckpt.check_stats(prep.builder.stats())?;
    Ok(prep)
}

fn available_targets(prep: &PreparedData, split: Split) -> Vec<Stamp> {
    prep.config
        .splits
        .targets(split, prep.config.cadence)
        .into_iter()
        .filter(|&s| prep.anomaly(s).is_ok())
        .collect()
}

fn method_name(window: usize) -> String {
    if window == 1 {
        "dune".to_string()
    } else {
        format!("dune_w{window}")
    }
}

fn relative(dir: &Path, paths: impl IntoIterator<Item = PathBuf>) -> Vec<PathBuf> {
    paths
        .into_iter()
        .map(|p| p.strip_prefix(dir).map(Path::to_path_buf).unwrap_or(p))
        .collect()
}

fn forecast_outputs(dir: &Path) -> Vec<PathBuf> {
    ["forecast.json", "anomaly.dgrid", "absolute.dgrid"]
        .into_iter()
        .map(PathBuf::from)
        .filter(|p| dir.join(p).exists())
        .collect()
}

fn write_dataset_manifest(dir: &Path, m: &DatasetManifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(DATASET_MANIFEST), serde_json::to_vec_pretty(m)?)?;
    Ok(())
}

fn series_range(fields: &[MonthlyField]) -> Result<(Stamp, Stamp)> {
    let first = fields
        .first()
        .ok_or_else(|| DuneError::Incomplete("empty series".into()))?;
    let last = fields.last().expect("nonempty");
    Ok((first.stamp_or_err()?, last.stamp_or_err()?))
}

pub fn synth(ctx: &RunContext, a: &SynthArgs) -> Result<()> {
    let grid = GridSpec::regular(a.grid.0, a.grid.1)?;
    let cfg = SyntheticConfig {
        first_year: a.first_year,
        years: a.years,
        seed: ctx.seed,
        noise_amplitude: a.noise,
        trend_per_year: a.trend,
    };
    let corpus = generate_synthetic_corpus(&grid, &cfg)?;
    let splits = ctx.config.data.splits.unwrap_or_else(SplitConfig::synthetic);
    let dir = ctx.out.join("data");
    write_split_series(&dir, &corpus_series(&corpus), &splits)?;
    let mut variables = vec![VariableId::T2m, VariableId::Sst, VariableId::Tisr];
    variables.extend(VariableId::CONSTANTS);
    write_dataset_manifest(
        &dir,
        &DatasetManifest {
            source: DataSource::Synthetic,
            grid,
            time_range: series_range(&corpus.t2m)?,
            variables,
            split: splits,
            blend_fallbacks: 0,
        },
    )?;
    println!(
        "synthetic corpus: {} months on {}x{} -> {}",
        corpus.t2m.len(),
        a.grid.0,
        a.grid.1,
        dir.display()
    );
    let outputs = list_files(&dir)?;
    ctx.finish(&dir, &[], relative(&dir, outputs))
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_none_or(|n| n != super::manifest::RUN_MANIFEST) {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn ingest(ctx: &RunContext, a: &IngestArgs) -> Result<()> {
    let range = match (a.from, a.to) {
        (Some(f), Some(t)) => Some((f, t)),
        (None, None) => None,
        _ => return Err(DuneError::InvalidArgument("--from and --to go together".into())),
    };
    let mut names = vec!["t2m", "sst", "tisr"];
    names.extend(VariableId::CONSTANTS.iter().map(|v| v.name()));
    let mut series = read_monthly_dataset(&a.input, &names, range)?;
    let constants: Vec<MonthlyField> = series
        .drain(3..)
        .map(|s| {
            s.fields
                .into_iter()
                .next()
                .ok_or_else(|| DuneError::Incomplete(format!("no {} field", s.variable)))
        })
        .collect::<Result<_>>()?;
    let constants: [MonthlyField; 5] = constants.try_into().expect("five constants");
    let tisr = series.pop().expect("tisr").fields;
    let sst = series.pop().expect("sst").fields;
    let t2m = series.pop().expect("t2m").fields;
    let consts = ConstantChannels::from_tisr_series(constants.clone(), &tisr)?;
    let ds = Dataset::from_parts(&t2m, &sst, consts, ctx.config.data.lsm_threshold)?;
    let splits = ctx.config.data.splits.unwrap_or_default();
    let dir = ctx.out.join("data");
    let mut out = vec![
        MonthlySeries {
            variable: VariableId::BlendedT,
            fields: ds.temperature.clone(),
        },
        MonthlySeries {
            variable: VariableId::Tisr,
            fields: tisr,
        },
    ];
    out.extend(constants.into_iter().map(|f| MonthlySeries {
        variable: f.variable,
        fields: vec![f],
    }));
    write_split_series(&dir, &out, &splits)?;
    let mut variables = vec![VariableId::BlendedT, VariableId::Tisr];
    variables.extend(VariableId::CONSTANTS);
    write_dataset_manifest(
        &dir,
        &DatasetManifest {
            source: DataSource::ReanalysisFile,
            grid: (*ds.grid).clone(),
            time_range: series_range(&ds.temperature)?,
            variables,
            split: splits,
            blend_fallbacks: ds.blend_fallbacks,
        },
    )?;
    println!(
        "ingested {} months ({} ocean cells fell back to T2m) -> {}",
        ds.temperature.len(),
        ds.blend_fallbacks,
        dir.display()
    );
    let outputs = list_files(&dir)?;
    ctx.finish(&dir, &[&a.input], relative(&dir, outputs))
}

pub fn climatology(ctx: &RunContext, a: &ClimatologyArgs) -> Result<()> {
    let data = ctx.data_path(&a.data);
    let (ds, splits) = ctx.load(&data)?;
    let base = a.base.or(ctx.config.data.climatology_base).unwrap_or(splits.train);
    let table = build_climatology(&ds.series(a.mode)?, base, !a.no_percentiles)?;
    let dir = ctx.out.join("climatology");
    let file = PathBuf::from(format!("{}.dclim", a.mode));
    write_climatology(&dir.join(&file), &table)?;
    println!(
        "{} climatology {}-{} -> {}",
        a.mode,
        base.0,
        base.1,
        dir.join(&file).display()
    );
    ctx.finish(&dir, &[&data], vec![file])
}

pub fn train_cmd(ctx: &RunContext, a: &TrainArgs) -> Result<()> {
    let data = ctx.data_path(&a.data);
    let (ds, splits) = ctx.load(&data)?;
    let exp = ctx.experiment(a.mode, a.window, splits);
    let prep = PreparedData::prepare(&ds, exp)?;
    let train_set = prep.samples(Split::Train)?;
    let val_set = prep.samples(Split::Val)?;
    log::info!("{} training and {} validation samples", train_set.len(), val_set.len());

    let depth = a.depth.unwrap_or(ctx.config.model.depth);
    let widths = match &a.widths {
        Some(w) => w.clone(),
        None if depth == ctx.config.model.depth => ctx.config.model.widths.clone(),
        None => DESK_WIDTHS.iter().copied().take(depth + 1).collect(),
    };
    let model = ModelConfig {
        depth,
        widths,
        in_channels: channel_count(a.window),
        out_channels: a.window,
        n_lat: prep.grid.n_lat(),
        n_lon: prep.grid.n_lon(),
    };
    let net = Dune::new(model.clone())?;
    let mut tc = ctx.config.train.clone();
    tc.seed = ctx.seed;
    if let Some(v) = a.epochs {
        tc.max_epochs = v;
    }
    if let Some(v) = a.patience {
        tc.patience = v;
    }
    if let Some(v) = a.lr {
        tc.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        tc.batch_size = v;
    }
    tc.validate()?;

    let dir = ctx.out.join("train").join(format!("{}-w{}", a.mode, a.window));
    fs::create_dir_all(&dir)?;
    let stats = prep.builder.stats().clone();
    let header = CheckpointHeader {
        version: CHECKPOINT_VERSION,
        model,
        grid: (*prep.grid).clone(),
        seed: ctx.seed,
        window: a.window,
        cadence: a.mode,
        stats_fingerprint: stats.fingerprint(),
        stats,
        loss_space: LossSpace::NormalizedAnomaly,
        tisr_alignment: exp.tisr_alignment,
        history: Vec::new(),
        best_epoch: None,
        params: net.param_specs().to_vec(),
    };
    fs::write(dir.join(EXPERIMENT_FILE), serde_json::to_vec_pretty(&exp)?)?;
    let ckpt_path = dir.join(CHECKPOINT_FILE);
    let hook_header = header.clone();
    let hook_path = ckpt_path.clone();
    let hooks = TrainHooks {
        log_path: Some(dir.join(TRAIN_LOG)),
        on_best: Some(Box::new(move |params, history: &[EpochRecord]| {
            let mut h = hook_header.clone();
            h.history = history.to_vec();
            h.best_epoch = history.last().map(|r| r.epoch);
            Checkpoint {
                header: h,
                params: params.clone(),
            }
            .save(&hook_path)
        })),
    };
    let outcome = train(&net, net.init_params(ctx.seed), &train_set, &val_set, &tc, hooks)?;
    let mut h = header;
    h.history = outcome.history.clone();
    h.best_epoch = Some(outcome.best_epoch);
    let ckpt = Checkpoint {
        header: h,
        params: outcome.params,
    };
    ckpt.save(&ckpt_path)?;
    fs::write(dir.join(HISTORY_FILE), serde_json::to_vec_pretty(&outcome.history)?)?;
    println!(
        "trained {} epochs{}; best epoch {} (val loss {:.6}); checkpoint {} -> {}",
        outcome.history.len(),
        if outcome.stopped_early { " (early stop)" } else { "" },
        outcome.best_epoch,
        outcome.best_val_loss,
        ckpt.id(),
        ckpt_path.display()
    );
    let outputs = [CHECKPOINT_FILE, TRAIN_LOG, HISTORY_FILE, EXPERIMENT_FILE]
        .map(PathBuf::from)
        .to_vec();
    ctx.finish(&dir, &[&data], outputs)
}

pub fn forecast_cmd(ctx: &RunContext, a: &ForecastArgs) -> Result<()> {
    let data = ctx.data_path(&a.data);
    let ckpt_path = ctx.checkpoint_path(&a.checkpoint, a.mode);
    let (ckpt, exp) = load_checkpoint(ctx, &ckpt_path)?;
    let (ds, splits) = ctx.load(&data)?;
    let prep = prepare_for(ctx, &ckpt, exp, &ds, splits)?;
    let w = ckpt.header.window;
    let cadence = ckpt.header.cadence;
    let fc = Forecaster::new(ckpt, &ds.constants)?;
    let targets = available_targets(&prep, a.split);
    let results = block_forecasts(&fc, &prep.anomalies, &targets, Some(&prep.climatology))?;
    let dir = ctx.out.join("forecast").join(format!("{cadence}-w{w}-{}", a.split));
    let request = serde_json::json!({ "split": a.split, "checkpoint": ckpt_path });
    write_forecast(&dir, &method_name(w), cadence, w, &results, request)?;
    println!(
        "{} forecasts ({} network calls) -> {}",
        results.len(),
        targets.len().div_ceil(w),
        dir.display()
    );
    ctx.finish(&dir, &[&data, &ckpt_path], forecast_outputs(&dir))
}

pub fn rollout_cmd(ctx: &RunContext, a: &RolloutArgs) -> Result<()> {
    let data = ctx.data_path(&a.data);
    let ckpt_path = ctx.checkpoint_path(&a.checkpoint, a.mode);
    let (ckpt, exp) = load_checkpoint(ctx, &ckpt_path)?;
    let (ds, splits) = ctx.load(&data)?;
    let prep = prepare_for(ctx, &ckpt, exp, &ds, splits)?;
    let w = ckpt.header.window;
    let cadence = ckpt.header.cadence;
    let fc = Forecaster::new(ckpt, &ds.constants)?;
    let request = RolloutRequest {
        start: a.start,
        horizon: a.horizon,
        feedback: a.feedback,
        keep_heads: a.keep_heads,
    };
    let results = rollout(&fc, &prep.anomalies, &request, Some(&prep.climatology))?;
    let feedback = match a.feedback {
        crate::forecast::Feedback::Forecast => "",
        crate::forecast::Feedback::Truth => "-truth",
    };
    let dir = ctx
        .out
        .join("rollout")
        .join(format!("{cadence}-w{w}-{}-h{}{feedback}", a.start, a.horizon));
    write_forecast(
        &dir,
        &method_name(w),
        cadence,
        w,
        &results,
        serde_json::to_value(request)?,
    )?;
    let mut outputs = forecast_outputs(&dir);
    if a.keep_heads {
        for k in 0..crate::net::HEAD_COUNT {
            let fields = results
                .iter()
                .map(|r| {
                    let v = r.heads.as_ref().expect("heads kept")[k].clone();
                    MonthlyField::new(VariableId::BlendedT, Some(r.stamp), fc.grid().clone(), v)
                })
                .collect::<Result<Vec<_>>>()?;
            let name = PathBuf::from(format!("head{k}.dgrid"));
            write_grid_file(&dir.join(&name), &fields)?;
            outputs.push(name);
        }
    }
    println!("{} rollout stamps from {} -> {}", results.len(), a.start, dir.display());
    ctx.finish(&dir, &[&data, &ckpt_path], outputs)
}

/// Baseline forecast sets over the split's targets, with the MLR model
/// fitted on the training years when requested.
fn baseline_sets(prep: &PreparedData, kinds: &[BaselineKind], targets: &[Stamp]) -> Result<Vec<ForecastSet>> {
    let mlr = if kinds.contains(&BaselineKind::MultipleLinearRegression) {
        let m = MlrModel::fit(&prep.anomalies, prep.config.splits.train)?;
        log::info!(
            "MLR on a {}x coarse grid, {} fallback gridpoints",
            m.factor,
            m.fallback_count
        );
        Some(m)
    } else {
        None
    };
    kinds
        .iter()
        .map(|&k| baseline_forecasts(k, &prep.anomalies, targets, &prep.climatology, mlr.as_ref()))
        .collect()
}

pub fn baseline_cmd(ctx: &RunContext, a: &BaselineArgs) -> Result<()> {
    let data = ctx.data_path(&a.data);
    let (ds, splits) = ctx.load(&data)?;
    let prep = PreparedData::prepare(&ds, ctx.experiment(a.mode, 1, splits))?;
    let targets = available_targets(&prep, a.split);
    let root = ctx.out.join("baseline").join(a.mode.to_string());
    let mut outputs = Vec::new();
    for set in baseline_sets(&prep, &a.kind, &targets)? {
        let results = set
            .fields
            .into_iter()
            .map(|f| {
                let s = f.stamp_or_err()?;
                ForecastResult::new(s, 1, f.values, &prep.grid, Some(&prep.climatology), String::new())
            })
            .collect::<Result<Vec<_>>>()?;
        let dir = root.join(&set.method);
        write_forecast(
            &dir,
            &set.method,
            a.mode,
            1,
            &results,
            serde_json::json!({ "split": a.split }),
        )?;
        outputs.extend(
            forecast_outputs(&dir)
                .into_iter()
                .map(|p| PathBuf::from(&set.method).join(p)),
        );
        println!("{}: {} forecasts -> {}", set.method, results.len(), dir.display());
    }
    ctx.finish(&root, &[&data], outputs)
}

fn discover_checkpoints(ctx: &RunContext, mode: Cadence) -> Vec<PathBuf> {
    let root = ctx.out.join("train");
    let prefix = format!("{mode}-w");
    let mut found: Vec<(usize, PathBuf)> = fs::read_dir(&root)
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().to_string();
            let w: usize = name.strip_prefix(&prefix)?.parse().ok()?;
            let p = e.path().join(CHECKPOINT_FILE);
            p.is_file().then_some((w, p))
        })
        .collect();
    found.sort();
    found.into_iter().map(|(_, p)| p).collect()
}

pub fn score_cmd(ctx: &RunContext, a: &ScoreArgs) -> Result<()> {
    let data = ctx.data_path(&a.data);
    let (ds, splits) = ctx.load(&data)?;
    let exp = ctx.experiment(a.mode, 1, splits);
    let prep = PreparedData::prepare(&ds, exp)?;
    let series = ds.series(a.mode)?;
    let with_pct = build_climatology(&series, exp.climatology_base, true)?;
    let acc_clim = ctx
        .config
        .score
        .acc_climatology_base
        .map(|b| build_climatology(&series, b, false))
        .transpose()?;
    let grid = prep.grid.clone();
    let sctx = ScoreContext {
        climatology: &with_pct,
        acc_climatology: acc_clim.as_ref(),
        percentiles: Some(&with_pct),
        hss_coarsen: ctx.config.score.hss_resolution.map_or(1, |r| grid.coarsen_factor(r)),
    };

    let kinds = a.regions.clone().unwrap_or_else(|| ctx.config.score.regions.clone());
    let thr = ctx.config.data.lsm_threshold;
    let mut regions = Vec::new();
    for k in kinds {
        match RegionMask::standard(k, &grid, &ds.constants.lsm, thr) {
            Ok(r) => regions.push(r),
            Err(DuneError::EmptyRegion(n)) => log::warn!("region `{n}` has no cells on this grid; skipped"),
            Err(e) => return Err(e),
        }
    }
    for def in &ctx.config.score.custom_regions {
        regions.push(RegionMask::from_def(def, &grid, Some(&ds.constants.lsm), thr)?);
    }
    if regions.is_empty() {
        return Err(DuneError::InvalidArgument("no regions to score".into()));
    }

    let targets = available_targets(&prep, a.split);
    let mut sets: Vec<ForecastSet> = Vec::new();
    let mut inputs: Vec<PathBuf> = vec![data.clone()];
    let checkpoints = if a.checkpoint.is_empty() {
        discover_checkpoints(ctx, a.mode)
    } else {
        a.checkpoint.clone()
    };
    for path in &checkpoints {
        let (ckpt, exp) = load_checkpoint(ctx, path)?;
        if ckpt.header.cadence != a.mode {
            log::warn!("{} is a {} checkpoint; skipped", path.display(), ckpt.header.cadence);
            continue;
        }
        let cprep = prepare_for(ctx, &ckpt, exp, &ds, splits)?;
        let w = ckpt.header.window;
        let fc = Forecaster::new(ckpt, &ds.constants)?;
        let results = block_forecasts(&fc, &cprep.anomalies, &targets, None)?;
        sets.push(ForecastSet {
            method: method_name(w),
            horizon: w,
            fields: results.into_iter().map(|r| r.anomaly).collect(),
        });
        inputs.push(path.clone());
    }
    for dir in &a.forecast {
        let (m, fields) = read_forecast(dir)?;
        sets.push(ForecastSet {
            method: m.method,
            horizon: m.window,
            fields,
        });
        inputs.push(dir.clone());
    }
    sets.extend(baseline_sets(&prep, &a.baselines, &targets)?);
    if sets.is_empty() {
        return Err(DuneError::InvalidArgument(
            "nothing to score: no checkpoints, forecasts or baselines".into(),
        ));
    }

    let mut report = ScoreReport::default();
    for set in &sets {
        report.merge(score_run(set, &prep.anomalies, &regions, &sctx)?);
    }
    let dir = ctx.out.join("score").join(a.mode.to_string());
    report.write(&dir)?;
    let mut outputs: Vec<PathBuf> = ["scores.csv", "summary.json", "table.md"].map(PathBuf::from).to_vec();
    if a.categories {
        outputs.extend(write_categories(&dir, &sets, &prep, &with_pct)?);
    }
    print!("{}", report.table());
    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    ctx.finish(&dir, &input_refs, outputs)
}

fn write_categories(
    dir: &Path,
    sets: &[ForecastSet],
    prep: &PreparedData,
    pct: &crate::data::ClimatologyTable,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let observed = ForecastSet {
        method: "observed".into(),
        horizon: 0,
        fields: sets
            .first()
            .map(|s| {
                s.fields
                    .iter()
                    .filter_map(|f| f.stamp)
                    .map(|t| prep.anomaly(t).cloned())
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?
            .unwrap_or_default(),
    };
    for set in sets.iter().chain(std::iter::once(&observed)) {
        for f in &set.fields {
            let s = f.stamp_or_err()?;
            let abs: Vec<f32> = f.values.iter().zip(pct.mean(s.slot())).map(|(a, m)| a + m).collect();
            let cats = categorize(
                &abs,
                pct.p33(s.slot()).expect("percentiles"),
                pct.p66(s.slot()).expect("percentiles"),
            )?;
            let rel = PathBuf::from("categories").join(&set.method).join(format!("{s}.json"));
            CategoryGridFile::new(s, &prep.grid, &cats)?.write(&dir.join(&rel))?;
            written.push(rel);
        }
    }
    Ok(written)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EnsembleSummaryFile {
    pub members: Vec<String>,
    pub samples: usize,
    pub noise: f64,
    pub upsample_factor: Option<usize>,
    pub summary: Vec<crate::forecast::EnsembleStampSummary>,
}

pub fn ensemble_cmd(ctx: &RunContext, a: &EnsembleArgs) -> Result<()> {
    let data = ctx.data_path(&a.data);
    let ckpt_path = ctx.checkpoint_path(&a.checkpoint, a.mode);
    let (ckpt, exp) = load_checkpoint(ctx, &ckpt_path)?;
    let (ds, splits) = ctx.load(&data)?;
    let prep = prepare_for(ctx, &ckpt, exp, &ds, splits)?;
    let w = ckpt.header.window;
    let cadence = ckpt.header.cadence;
    let fc = Forecaster::new(ckpt, &ds.constants)?;
    let n = a.members.unwrap_or(ctx.config.ensemble.members);
    let noise = a.noise.unwrap_or(ctx.config.ensemble.noise);
    let factor = a.upsample_factor.or(ctx.config.ensemble.upsample_factor);
    if n == 0 || noise.is_nan() || noise < 0.0 {
        return Err(DuneError::InvalidArgument(
            "ensemble needs members and a non-negative noise".into(),
        ));
    }
    let base = match factor {
        Some(f) => EnsembleMember::upsampled("base", &prep.anomalies, f)?.anomalies,
        None => prep.anomalies.clone(),
    };
    let members = (0..n)
        .map(|k| EnsembleMember::perturbed(format!("member{k:02}"), &base, noise, ctx.seed.wrapping_add(k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let targets = available_targets(&prep, a.split);
    let report = ensemble_inference(&fc, &members, &targets, Some(&prep.climatology))?;
    let dir = ctx.out.join("ensemble").join(format!("{cadence}-w{w}-{}", a.split));
    fs::create_dir_all(&dir)?;
    write_grid_file(&dir.join("mean.dgrid"), &report.mean)?;
    write_grid_file(&dir.join("std.dgrid"), &report.std)?;
    let file = EnsembleSummaryFile {
        members: report.members.clone(),
        samples: report.samples,
        noise,
        upsample_factor: factor,
        summary: report.summary.clone(),
    };
    fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(&file)?)?;
    let mean_rmse = report.summary.iter().map(|s| s.rmse_mean).sum::<f64>() / report.summary.len() as f64;
    let mean_spread = report.summary.iter().map(|s| s.rmse_std).sum::<f64>() / report.summary.len() as f64;
    println!(
        "{} members x {} stamps = {} samples; member RMSE {mean_rmse:.4} K, spread {mean_spread:.4} K -> {}",
        n,
        targets.len(),
        report.samples,
        dir.display()
    );
    ctx.finish(
        &dir,
        &[&data, &ckpt_path],
        ["mean.dgrid", "std.dgrid", "summary.json"].map(PathBuf::from).to_vec(),
    )
}

fn read_history(path: &Path) -> Result<Vec<EpochRecord>> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(&text)?);
    }
    let mut out: Vec<EpochRecord> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<std::result::Result<_, _>>()?;
    // The log marks improvements; the restored epoch is the last one.
    let best = out
        .iter()
        .enumerate()
        .filter(|(i, r)| out[..*i].iter().all(|p| r.val_loss < p.val_loss))
        .map(|(i, _)| i)
        .next_back();
    if let Some(b) = best {
        out[b].is_best = true;
    }
    Ok(out)
}

fn file_stem_label(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .map_or("run".to_string(), |n| n.to_string_lossy().to_string())
}

pub fn plot_cmd(ctx: &RunContext, a: &PlotArgs) -> Result<()> {
    let dir = ctx.out.join("plots");
    let mut inputs: Vec<PathBuf> = Vec::new();
    let mut drawn: Vec<plot::PlotOutput> = Vec::new();
    let explicit = a.loss.is_some() || a.report.is_some() || a.forecast.is_some() || a.trend.is_some();

    let mut losses: Vec<PathBuf> = a.loss.iter().cloned().collect();
    let mut reports: Vec<PathBuf> = a.report.iter().cloned().collect();
    let mut trend = a.trend.clone();
    if !explicit {
        for sub in ["train", "score"] {
            let Ok(rd) = fs::read_dir(ctx.out.join(sub)) else {
                continue;
            };
            let mut dirs: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
            dirs.sort();
            for d in dirs {
                if sub == "train" && d.join(TRAIN_LOG).is_file() {
                    losses.push(d.join(TRAIN_LOG));
                }
                if sub == "score" && d.join("summary.json").is_file() {
                    reports.push(d.join("summary.json"));
                }
            }
        }
        let data = ctx.out.join("data");
        if data.is_dir() {
            trend = Some(data);
        }
    }
    for p in &losses {
        let h = read_history(p)?;
        drawn.push(plot::loss_curve(
            &h,
            &dir.join(format!("loss_{}.svg", file_stem_label(p))),
        )?);
        inputs.push(p.clone());
    }
    for p in &reports {
        let r = ScoreReport::read(p)?;
        let label = file_stem_label(p);
        drawn.push(plot::metric_panels(
            &r,
            a.metric,
            &a.region,
            &dir.join(format!("{label}_{:?}_{}.svg", a.metric, a.region).to_lowercase()),
        )?);
        if r.rows.iter().any(|row| row.region == a.region && row.hss.is_some()) {
            drawn.push(plot::hss_heatmap(
                &r,
                &a.region,
                &dir.join(format!("{label}_hss_{}.svg", a.region)),
            )?);
        }
        inputs.push(p.clone());
    }
    if let Some(fdir) = &a.forecast {
        let (m, fields) = read_forecast(fdir)?;
        let data = ctx.data_path(&a.data);
        let (ds, splits) = ctx.load(&data)?;
        let prep = PreparedData::prepare(&ds, ctx.experiment(m.mode, 1, splits))?;
        for f in fields.iter().filter(|f| a.stamp.is_none() || f.stamp == a.stamp) {
            let s = f.stamp_or_err()?;
            let truth = prep.anomaly(s)?;
            drawn.push(plot::error_map(
                f,
                truth,
                &dir.join(format!("error_{}_{s}.svg", m.method)),
            )?);
        }
        inputs.push(fdir.clone());
        inputs.push(data);
    }
    if let Some(t) = &trend {
        let ds = load_dataset(t, &ctx.load_options())?;
        let monthly = plot::global_mean_series(&ds.temperature)?;
        let mut series = vec![("monthly".to_string(), monthly)];
        let annual = ds.series(Cadence::Annual)?;
        if !annual.is_empty() {
            series.push(("annual".to_string(), plot::global_mean_series(&annual)?));
        }
        drawn.push(plot::global_mean_trend(&series, &dir.join("global_mean_trend.svg"))?);
        inputs.push(t.clone());
    }
    if drawn.is_empty() {
        return Err(DuneError::InvalidArgument(format!(
            "nothing to plot: pass --loss, --report, --forecast or --trend, or run other commands into {}",
            ctx.out.display()
        )));
    }
    for d in &drawn {
        println!(
            "{} ({} panel{})",
            d.path.display(),
            d.panels,
            if d.panels == 1 { "" } else { "s" }
        );
    }
    let outputs = relative(&dir, drawn.into_iter().map(|d| d.path));
    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    ctx.finish(&dir, &input_refs, outputs)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelSummaryFile {
    pub model: ModelConfig,
    pub parameters: usize,
    pub nodes: Vec<crate::net::NodeInfo>,
    pub heads: Vec<(usize, usize)>,
}

pub fn model_summary(ctx: &RunContext, a: &ModelSummaryArgs) -> Result<()> {
    let depth = a.depth.unwrap_or(if a.full_scale { 4 } else { ctx.config.model.depth });
    let widths = match &a.widths {
        Some(w) => w.clone(),
        None if a.full_scale => FULL_SCALE_WIDTHS.iter().copied().take(depth + 1).collect(),
        None if depth == ctx.config.model.depth => ctx.config.model.widths.clone(),
        None => DESK_WIDTHS.iter().copied().take(depth + 1).collect(),
    };
    let (n_lat, n_lon) = a.grid.unwrap_or(if a.full_scale { (720, 1440) } else { (32, 64) });
    let config = ModelConfig {
        depth,
        widths,
        in_channels: channel_count(a.window),
        out_channels: a.window,
        n_lat,
        n_lon,
    };
    let net = Dune::new(config.clone())?;
    let g = net.graph();
    println!(
        "DUNE depth {depth}, widths {:?}, window {} ({} -> {} channels), grid {n_lat}x{n_lon}",
        config.widths, a.window, config.in_channels, config.out_channels
    );
    println!(
        "{:<6} {:>8} {:>8} {:>7} {:>11}  inputs",
        "node", "in", "out", "blocks", "resolution"
    );
    for n in &g.nodes {
        let inputs = &n.inputs;
        println!(
            "X{}{:<4} {:>8} {:>8} {:>7} {:>11}  {}",
            n.i,
            n.j,
            n.in_channels,
            n.out_channels,
            n.residual_blocks,
            format!("{}x{}", n.height, n.width),
            inputs.join(" ")
        );
    }
    let heads: Vec<String> = g.heads.iter().map(|(i, j)| format!("X{i}{j}")).collect();
    println!("heads: {}", heads.join(", "));
    println!("parameters: {}", net.param_count());
    let dir = ctx.out.join("model-summary");
    fs::create_dir_all(&dir)?;
    let file = ModelSummaryFile {
        model: config,
        parameters: net.param_count(),
        nodes: g.nodes.clone(),
        heads: g.heads.clone(),
    };
    fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(&file)?)?;
    ctx.finish(&dir, &[], vec![PathBuf::from("summary.json")])
}
