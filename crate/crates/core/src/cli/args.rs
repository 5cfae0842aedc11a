//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::baselines::BaselineKind;
use crate::data::{Cadence, Stamp};
use crate::forecast::Feedback;
use crate::ingest::Split;
use crate::verify::RegionKind;

use super::plot::Metric;

fn parse_cadence(s: &str) -> Result<Cadence, String> {
    s.parse().map_err(|e: crate::DuneError| e.to_string())
}

fn parse_stamp(s: &str) -> Result<Stamp, String> {
    s.parse().map_err(|e: crate::DuneError| e.to_string())
}

fn parse_split(s: &str) -> Result<Split, String> {
    s.parse().map_err(|e: crate::DuneError| e.to_string())
}

fn parse_region(s: &str) -> Result<RegionKind, String> {
    s.parse().map_err(|e: crate::DuneError| e.to_string())
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: crate::DuneError| e.to_string())
}

fn parse_feedback(s: &str) -> Result<Feedback, String> {
    match s {
        "forecast" => Ok(Feedback::Forecast),
        "truth" => Ok(Feedback::Truth),
        _ => Err(format!("unknown feedback `{s}` (forecast or truth)")),
    }
}

/// Comma-separated baseline names, `all` or `none`.
pub fn parse_baselines(s: &str) -> Result<Vec<BaselineKind>, String> {
    match s {
        "all" => Ok(BaselineKind::ALL.to_vec()),
        "none" | "" => Ok(Vec::new()),
        _ => s
            .split(',')
            .map(|k| k.trim().parse().map_err(|e: crate::DuneError| e.to_string()))
            .collect(),
    }
}

/// `ROWSxCOLS`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| format!("expected ROWSxCOLS, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad row count in `{s}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad column count in `{s}`"))?;
    Ok((a, b))
}

/// `FIRST-LAST` inclusive years.
pub fn parse_years(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s
        .split_once('-')
        .ok_or_else(|| format!("expected FIRST-LAST, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad year in `{s}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad year in `{s}`"))?;
    Ok((a, b))
}

#[derive(Debug, Parser)]
#[command(
    name = "dune",
    version,
    about = "Monthly, seasonal and annual temperature forecasting with DUNE"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "DUNE_CONFIG")]
    pub config: Option<PathBuf>,
    /// Seed for data synthesis, initialization, shuffling and noise.
    /// [default: `train.seed` from the configuration, 0]
    #[arg(long, global = true, env = "DUNE_SEED")]
    pub seed: Option<u64>,
    /// Root of every output (and of default inputs).
    #[arg(long, global = true, env = "DUNE_OUT", default_value = "dune-out")]
    pub out: PathBuf,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, env = "DUNE_LOG_LEVEL", default_value = "info")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blend reanalysis T2m/SST and split a dataset into `<out>/data`.
    Ingest(IngestArgs),
    /// Generate the seeded synthetic corpus into `<out>/data`.
    Synth(SynthArgs),
    /// Per-slot mean and tercile thresholds into `<out>/climatology`.
    Climatology(ClimatologyArgs),
    /// Train a checkpoint into `<out>/train/<mode>-w<W>`.
    Train(TrainArgs),
    /// Moving-window forecasts of a split into `<out>/forecast`.
    Forecast(ForecastArgs),
    /// Autoregressive rollout from one start into `<out>/rollout`.
    Rollout(RolloutArgs),
    /// Reference forecasts into `<out>/baseline`.
    Baseline(BaselineArgs),
    /// RMSE / ACC / HSS tables into `<out>/score/<mode>`.
    Score(ScoreArgs),
    /// Ensemble-member inference into `<out>/ensemble`.
    Ensemble(EnsembleArgs),
    /// SVG figures into `<out>/plots`.
    Plot(PlotArgs),
    /// Layer table and parameter count of a model configuration.
    ModelSummary(ModelSummaryArgs),
}

#[derive(Debug, Args)]
pub struct DataArg {
    /// Dataset directory or NetCDF file [default: <out>/data].
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// CF NetCDF file or directory of `.dgrid` files holding t2m, sst,
    /// tisr and the constant fields.
    #[arg(long)]
    pub input: PathBuf,
    /// First month kept, e.g. 1980-01.
    #[arg(long, value_parser = parse_stamp)]
    pub from: Option<Stamp>,
    /// Last month kept, e.g. 2023-12.
    #[arg(long, value_parser = parse_stamp)]
    pub to: Option<Stamp>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Grid as ROWSxCOLS; both divisible by 4.
    #[arg(long, value_parser = parse_grid, default_value = "32x64")]
    pub grid: (usize, usize),
    #[arg(long, default_value_t = 42)]
    pub years: usize,
    #[arg(long, default_value_t = 1977)]
    pub first_year: i32,
    /// Stationary noise standard deviation, K.
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    /// Warming rate, K per year.
    #[arg(long, default_value_t = 0.03)]
    pub trend: f64,
}

#[derive(Debug, Args)]
pub struct ClimatologyArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[arg(long, value_parser = parse_cadence, default_value = "monthly")]
    pub mode: Cadence,
    /// Base years FIRST-LAST [default: configured base or training split].
    #[arg(long, value_parser = parse_years)]
    pub base: Option<(i32, i32)>,
    /// Skip the 33rd/66th percentile grids.
    #[arg(long)]
    pub no_percentiles: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[arg(long, value_parser = parse_cadence, default_value = "monthly")]
    pub mode: Cadence,
    /// Moving window W: 1, 2, 3, 4, 6 or 12.
    #[arg(long, default_value_t = 1)]
    pub window: usize,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Comma-separated filters per level.
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CheckpointArg {
    /// Checkpoint file [default: <out>/train/<mode>-w1/checkpoint.dckpt].
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[command(flatten)]
    pub checkpoint: CheckpointArg,
    #[arg(long, value_parser = parse_cadence, default_value = "monthly")]
    pub mode: Cadence,
    #[arg(long, value_parser = parse_split, default_value = "test")]
    pub split: Split,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[command(flatten)]
    pub checkpoint: CheckpointArg,
    #[arg(long, value_parser = parse_cadence, default_value = "monthly")]
    pub mode: Cadence,
    /// First forecast stamp, e.g. 2014-01.
    #[arg(long, value_parser = parse_stamp)]
    pub start: Stamp,
    #[arg(long, default_value_t = 12)]
    pub horizon: usize,
    /// What later windows are built from: forecast or truth.
    #[arg(long, value_parser = parse_feedback, default_value = "forecast")]
    pub feedback: Feedback,
    /// Also store the four head outputs.
    #[arg(long)]
    pub keep_heads: bool,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[arg(long, value_parser = parse_cadence, default_value = "monthly")]
    pub mode: Cadence,
    /// Comma-separated persist_prior_step, persist_prior_year,
    /// climatology, mlr; or all.
    #[arg(long, value_parser = parse_baselines, default_value = "all")]
    pub kind: ::std::vec::Vec<BaselineKind>,
    #[arg(long, value_parser = parse_split, default_value = "test")]
    pub split: Split,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[arg(long, value_parser = parse_cadence, default_value = "monthly")]
    pub mode: Cadence,
    /// Checkpoints to score [default: every `<out>/train/<mode>-w*`].
    #[arg(long)]
    pub checkpoint: Vec<PathBuf>,
    /// Forecast directories written by `forecast`, `rollout` or `baseline`.
    #[arg(long)]
    pub forecast: Vec<PathBuf>,
    /// Baselines scored alongside: comma-separated names, `all` or `none`.
    #[arg(long, value_parser = parse_baselines, default_value = "all")]
    pub baselines: ::std::vec::Vec<BaselineKind>,
    /// Regions [default: configured list].
    #[arg(long, value_delimiter = ',', value_parser = parse_region)]
    pub regions: Option<Vec<RegionKind>>,
    #[arg(long, value_parser = parse_split, default_value = "test")]
    pub split: Split,
    /// Write per-stamp category grids of every method.
    #[arg(long)]
    pub categories: bool,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[command(flatten)]
    pub checkpoint: CheckpointArg,
    #[arg(long, value_parser = parse_cadence, default_value = "monthly")]
    pub mode: Cadence,
    #[arg(long)]
    pub members: Option<usize>,
    /// Perturbation standard deviation, K.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub upsample_factor: Option<usize>,
    #[arg(long, value_parser = parse_split, default_value = "test")]
    pub split: Split,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Training log (`train_log.jsonl`) or `history.json`.
    #[arg(long)]
    pub loss: Option<PathBuf>,
    /// Score summary (`summary.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_parser = parse_metric, default_value = "rmse")]
    pub metric: Metric,
    #[arg(long, default_value = "global")]
    pub region: String,
    /// Forecast directory for error maps (against `--data`).
    #[arg(long)]
    pub forecast: Option<PathBuf>,
    /// Error map for this stamp only [default: every forecast stamp].
    #[arg(long, value_parser = parse_stamp)]
    pub stamp: Option<Stamp>,
    /// Dataset whose cosine-weighted global mean is plotted.
    #[arg(long)]
    pub trend: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArg,
}

#[derive(Debug, Args)]
pub struct ModelSummaryArgs {
    /// Published widths on a 720x1440 grid.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long, default_value_t = 1)]
    pub window: usize,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
}
